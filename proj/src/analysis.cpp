#include "deq/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace deq {

double window_bound(const GainFunction& k, double tau_bar, double horizon) {
    if (tau_bar <= 0.0) throw std::invalid_argument("tau_bar must be positive");
    if (horizon < tau_bar) throw std::invalid_argument("horizon must be >= tau_bar");
    std::vector<double> rights;
    double step = tau_bar / 64.0;
    for (double t = 0.0; t <= horizon + 1e-12 * horizon; t += step)
        rights.push_back(std::min(t, horizon));
    for (double b : k.breakpoints_in(-tau_bar, horizon)) {
        if (b >= 0.0 && b <= horizon) rights.push_back(b);
        if (b + tau_bar >= 0.0 && b + tau_bar <= horizon) rights.push_back(b + tau_bar);
    }
    double K = 0.0;
    for (double t : rights) K = std::max(K, k.integral_abs(t - tau_bar, t));
    return K;
}

namespace {

std::vector<double> phi_grid(const GainFunction& k, double horizon, int points) {
    std::vector<double> ts;
    for (int i = 0; i <= points; ++i) ts.push_back(horizon * i / points);
    for (double b : k.breakpoints_in(0.0, horizon)) ts.push_back(b);
    std::sort(ts.begin(), ts.end());
    return ts;
}

double phi_coeff(const SemigroupCertificate& cert, double feedback_norm, double tau_bar) {
    return cert.M * feedback_norm * std::exp(cert.omega * tau_bar);
}

} // namespace

std::vector<StabilityEnvelope> fit_envelope(const GainFunction& k,
                                            const SemigroupCertificate& cert,
                                            double feedback_norm, double tau_bar,
                                            double horizon,
                                            const std::vector<double>& omega_prime_grid) {
    if (omega_prime_grid.empty())
        throw std::invalid_argument("fit_envelope: empty omega' grid");
    double coeff = phi_coeff(cert, feedback_norm, tau_bar);
    double K = window_bound(k, tau_bar, std::max(horizon, tau_bar));

    auto ts = phi_grid(k, horizon, 512);
    std::vector<double> phi(ts.size());
    double acc = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
        if (i > 0) acc += k.integral_abs(ts[i - 1], ts[i]);
        phi[i] = coeff * acc;
    }

    std::vector<StabilityEnvelope> out;
    for (double wp : omega_prime_grid) {
        if (!(wp >= 0.0 && wp < cert.omega)) continue;
        double gamma = 0.0;
        for (size_t i = 0; i < ts.size(); ++i)
            gamma = std::max(gamma, phi[i] - wp * ts[i]);
        StabilityEnvelope env;
        env.gamma = gamma;
        env.omega_prime = wp;
        env.horizon = horizon;
        env.K = K;
        env.provenance = StabilityEnvelope::Provenance::Fitted;
        out.push_back(env);
    }
    if (out.empty())
        throw HypothesisError("fit_envelope: no omega' in the grid lies in [0, omega)");
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.omega_prime < b.omega_prime; });
    return out;
}

size_t best_envelope(const std::vector<StabilityEnvelope>& envelopes, double cert_omega,
                     double target_time) {
    if (envelopes.empty()) throw std::invalid_argument("best_envelope: empty list");
    size_t best = 0;
    double best_log = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < envelopes.size(); ++i) {
        double lg = envelopes[i].gamma -
                    (cert_omega - envelopes[i].omega_prime) * target_time;
        if (lg < best_log) {
            best_log = lg;
            best = i;
        }
    }
    return best;
}

bool envelope_valid(const StabilityEnvelope& env, const GainFunction& k,
                    const SemigroupCertificate& cert, double feedback_norm,
                    double tau_bar, int refine, double slack) {
    if (!(env.omega_prime < cert.omega)) return false;
    double coeff = phi_coeff(cert, feedback_norm, tau_bar);
    auto ts = phi_grid(k, env.horizon, 512 * refine);
    double acc = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
        if (i > 0) acc += k.integral_abs(ts[i - 1], ts[i]);
        double phi = coeff * acc;
        double line = env.gamma + env.omega_prime * ts[i];
        if (phi > line + slack * (1.0 + line)) return false;
    }
    return true;
}

double DecayBound::value(double t) const {
    return prefactor * M_tilde * std::exp(-rate * t);
}

DecayBound decay_bound(const StabilityEnvelope& env, const SemigroupCertificate& cert,
                       double feedback_norm, const HistorySegment& history,
                       const GeneratorOperator& g, double lipschitz) {
    if (lipschitz > 0.0 && !(lipschitz < (cert.omega - env.omega_prime) / cert.M))
        throw HypothesisError("lipschitz constant violates L < (omega - omega')/M");

    // history max with x8 interpolation refinement; the peak of
    // e^{omega s} ||f(s)|| can fall between the stored nodes
    double hist_max = 0.0;
    const auto& ht = history.times();
    for (size_t i = 0; i + 1 < ht.size(); ++i) {
        for (int j = 0; j <= 8; ++j) {
            double s = ht[i] + (ht[i + 1] - ht[i]) * j / 8.0;
            hist_max = std::max(hist_max,
                                std::exp(cert.omega * s) * g.norm(history.eval(s)));
        }
    }

    double u0_norm = g.norm(history.eval(0.0));
    DecayBound b;
    b.M_tilde = cert.M * (u0_norm + std::exp(cert.omega * history.tau_bar()) * env.K *
                                        feedback_norm * hist_max);
    b.prefactor = std::exp(env.gamma);
    b.rate = cert.omega - env.omega_prime - cert.M * lipschitz;
    return b;
}

std::vector<double> decay_bound_curve(const DecayBound& bound,
                                      const std::vector<double>& times) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(bound.value(t));
    return out;
}

namespace {

DecayReport make_report(std::vector<double> times, std::vector<double> values,
                        std::vector<double> bounds, double theoretical_rate) {
    DecayReport rep;
    rep.times = std::move(times);
    rep.values = std::move(values);
    rep.bounds = std::move(bounds);
    rep.theoretical_rate = theoretical_rate;
    rep.pass = true;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < rep.times.size(); ++i) {
        double margin = rep.bounds[i] - rep.values[i];
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < -1e-9 * (1.0 + rep.bounds[i])) rep.pass = false;
    }
    // empirical rate: least-squares slope of log(value) on the last half
    double t0 = rep.times.back() / 2.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < rep.times.size(); ++i) {
        if (rep.times[i] < t0 || rep.values[i] <= 0.0) continue;
        double x = rep.times[i], y = std::log(rep.values[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n >= 2 && sxx * n - sx * sx > 0.0)
        rep.empirical_rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

} // namespace

DecayReport verify_decay(const DelayProblem& p, const Trajectory& tr,
                         const SemigroupCertificate& cert,
                         const StabilityEnvelope& env) {
    DecayBound bound = decay_bound(env, cert, p.feedback_norm(), p.history(),
                                   p.generator(), p.lipschitz());
    std::vector<double> values, bounds;
    for (size_t i = 0; i < tr.times().size(); ++i) {
        values.push_back(p.generator().norm(tr.states()[i]));
        bounds.push_back(bound.value(tr.times()[i]));
    }
    return make_report(tr.times(), std::move(values), std::move(bounds), bound.rate);
}

AprioriReport verify_apriori(const DelayProblem& p, const Trajectory& tr,
                             const SemigroupCertificate& cert, double window_end) {
    double mass = cert.M * p.feedback_norm() * p.gain().integral_abs(0.0, window_end);
    if (!(mass < 1.0))
        throw HypothesisError("a priori bound needs M ||B|| int_0^T |k| < 1; got " +
                              std::to_string(mass));
    double fmax = 0.0;
    const auto& ht = p.history().times();
    for (size_t i = 0; i + 1 < ht.size(); ++i)
        for (int j = 0; j <= 8; ++j) {
            double s = ht[i] + (ht[i + 1] - ht[i]) * j / 8.0;
            fmax = std::max(fmax, p.generator().norm(p.history().eval(s)));
        }
    AprioriReport rep;
    rep.window_end = window_end;
    rep.bound = std::exp(1.0) *
                (cert.M * p.generator().norm(tr.eval(0.0)) + fmax);
    rep.worst_margin = std::numeric_limits<double>::infinity();
    rep.pass = true;
    for (size_t i = 0; i < tr.times().size(); ++i) {
        if (tr.times()[i] > window_end + 1e-12 * (1.0 + window_end)) break;
        double margin = rep.bound - p.generator().norm(tr.states()[i]);
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < -1e-9 * (1.0 + rep.bound)) rep.pass = false;
    }
    return rep;
}

DecayReport verify_energy_decay(const DelayProblem& p, const EnergyReport& energy,
                                const SemigroupCertificate& cert,
                                const StabilityEnvelope& env) {
    DecayBound nb = decay_bound(env, cert, p.feedback_norm(), p.history(),
                                p.generator(), /*lipschitz=*/0.0);
    double C0 = nb.prefactor * nb.M_tilde;
    double beta = cert.omega - env.omega_prime;
    double Cstar = 0.5 * C0 * C0 +
                   0.5 * C0 * C0 * env.K * std::exp(2.0 * beta * p.tau_bar());
    std::vector<double> bounds;
    for (double t : energy.times) bounds.push_back(Cstar * std::exp(-beta * t));
    return make_report(energy.times, energy.total, std::move(bounds), beta);
}

std::vector<double> windowed_exp_max(const DelayProblem& p, const Trajectory& tr,
                                     double omega, const std::vector<double>& times) {
    std::vector<double> out;
    for (double t : times) {
        double lo = std::max(0.0, t - p.tau_bar());
        double best = 0.0;
        // endpoints plus every stored node in the window
        auto probe = [&](double s) {
            best = std::max(best, std::exp(omega * s) * p.generator().norm(tr.eval(s)));
        };
        probe(lo);
        probe(t);
        for (double s : tr.times())
            if (s > lo && s < t) probe(s);
        out.push_back(best);
    }
    return out;
}

double gronwall_margin(const DelayProblem& p, const Trajectory& tr,
                       const SemigroupCertificate& cert) {
    double coeff = phi_coeff(cert, p.feedback_norm(), p.tau_bar());
    double fmax = 0.0;
    const auto& ht = p.history().times();
    for (size_t i = 0; i + 1 < ht.size(); ++i)
        for (int j = 0; j <= 8; ++j) {
            double s = ht[i] + (ht[i + 1] - ht[i]) * j / 8.0;
            fmax = std::max(fmax, std::exp(cert.omega * s) *
                                      p.generator().norm(p.history().eval(s)));
        }
    double Mtilde = cert.M * (p.generator().norm(tr.eval(0.0)) +
                              std::exp(cert.omega * p.tau_bar()) *
                                  window_bound(p.gain(), p.tau_bar(),
                                               std::max(p.tau_bar(), tr.end_time())) *
                                  p.feedback_norm() * fmax);
    double L = p.lipschitz();
    double margin = std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (size_t i = 0; i < tr.times().size(); ++i) {
        double t = tr.times()[i];
        if (i > 0) acc += p.gain().integral_abs(tr.times()[i - 1], t);
        double envelope = Mtilde * std::exp(coeff * acc + cert.M * L * t);
        double lhs = std::exp(cert.omega * t) * p.generator().norm(tr.states()[i]);
        margin = std::min(margin, (envelope - lhs) / (1.0 + envelope));
    }
    return margin;
}

} // namespace deq
