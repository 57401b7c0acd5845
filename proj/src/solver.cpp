#include "deq/solver.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "deq/semigroup.hpp"

namespace deq {

namespace detail {

std::vector<double> canonical_grid(double T, double dt, const GainFunction& k) {
    if (T <= 0.0) throw std::invalid_argument("horizon T must be positive");
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    std::vector<double> grid;
    long n = static_cast<long>(std::floor(T / dt + 1e-9));
    grid.reserve(static_cast<size_t>(n) + 2);
    for (long i = 0; i <= n; ++i) grid.push_back(i * dt);
    const double tol = 1e-12 * std::max(1.0, T);
    if (grid.back() < T - tol) grid.push_back(T);
    else grid.back() = std::min(grid.back(), T);
    for (double b : k.breakpoints_in(0.0, T)) grid.push_back(b);
    std::sort(grid.begin(), grid.end());
    std::vector<double> out;
    out.reserve(grid.size());
    for (double t : grid)
        if (out.empty() || t - out.back() > tol) out.push_back(t);
    return out;
}

} // namespace detail

namespace {

// One classical RK4 step of y' = A y (+ G(y)) + F(t).
Vector rk4_step(const GeneratorOperator& g, const Nonlinearity* G,
                const std::function<Vector(double)>& forcing, double t, double h,
                const Vector& y) {
    const Matrix& A = g.matrix();
    auto f = [&](double s, const Vector& v) -> Vector {
        Vector out = A * v + forcing(s);
        if (G) out += (*G)(g, v);
        return out;
    };
    Vector k1 = f(t, y);
    Vector k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
    Vector k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
    Vector k4 = f(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Growing trajectory view used while a solve is in flight.
struct PartialTrajectory {
    const HistorySegment* history;
    std::vector<double> times{0.0};
    std::vector<Vector> states;

    Vector eval(double t) const {
        if (t < 0.0) return history->eval(t);
        const double slack = 1e-9 * (1.0 + times.back());
        if (t > times.back() + slack)
            throw SolverError("internal invariant violation: delayed argument probes "
                              "unsolved territory at t=" + std::to_string(t));
        t = std::min(t, times.back());
        if (times.size() == 1) return states.front();
        return deq::detail::interp_linear(times, states, t);
    }
};

double certificate_M(const DelayProblem& p) {
    if (p.certificate) return p.certificate->M;
    return estimate_certificate(p.generator()).M;
}

} // namespace

StateSamples integrate_forced(const GeneratorOperator& g,
                              const std::function<Vector(double)>& forcing,
                              double t0, double t1, const Vector& u0,
                              const SolverConfig& cfg, const Nonlinearity* nonlinearity,
                              const std::vector<double>& extra_nodes) {
    if (t1 <= t0) throw std::invalid_argument("integrate_forced requires t1 > t0");
    double len = t1 - t0;
    long nsteps = std::max<long>(4, static_cast<long>(std::ceil(len / cfg.dt - 1e-9)));
    std::vector<double> nodes;
    nodes.reserve(static_cast<size_t>(nsteps) + 1 + extra_nodes.size());
    for (long i = 0; i <= nsteps; ++i) nodes.push_back(t0 + len * (double(i) / nsteps));
    nodes.back() = t1;
    for (double e : extra_nodes)
        if (e > t0 && e < t1) nodes.push_back(e);
    std::sort(nodes.begin(), nodes.end());
    const double tol = 1e-12 * std::max(1.0, std::abs(t1));
    std::vector<double> uniq;
    for (double t : nodes)
        if (uniq.empty() || t - uniq.back() > tol) uniq.push_back(t);

    StateSamples out;
    out.times = uniq;
    out.states.resize(uniq.size());
    out.states[0] = u0;
    for (size_t i = 0; i + 1 < uniq.size(); ++i) {
        out.states[i + 1] = rk4_step(g, nonlinearity, forcing, uniq[i],
                                     uniq[i + 1] - uniq[i], out.states[i]);
        if (!out.states[i + 1].allFinite())
            throw SolverError("non-finite state during forced integration at t=" +
                              std::to_string(uniq[i + 1]));
    }
    return out;
}

Trajectory solve_method_of_steps(const DelayProblem& p, double T, const SolverConfig& cfg) {
    double tau0 = p.delay().lower_bound();
    if (tau0 <= 0.0)
        throw std::invalid_argument("method of steps requires a declared delay lower "
                                    "bound tau_min > 0");
    if (T <= 0.0) throw std::invalid_argument("horizon T must be positive");

    auto grid = detail::canonical_grid(T, cfg.dt, p.gain());
    const GeneratorOperator& g = p.generator();
    const Matrix& B = p.feedback().matrix();
    const Nonlinearity* G = p.nonlinearity() ? &*p.nonlinearity() : nullptr;

    PartialTrajectory tr{&p.history()};
    tr.states.push_back(p.initial_state());

    size_t ia = 0; // grid index of current window start
    while (ia + 1 < grid.size()) {
        double a = grid[ia];
        // window ends at the last grid node <= a + tau0
        size_t ib = ia;
        while (ib + 1 < grid.size() && grid[ib + 1] <= a + tau0 + 1e-12 * (1.0 + T)) ++ib;
        if (ib == ia)
            throw SolverError("method of steps: dt too large to resolve a tau_0 window "
                              "starting at t=" + std::to_string(a));
        const double guard = a + 1e-9 * (1.0 + T);
        auto forcing = [&](double s) -> Vector {
            double d = s - p.delay()(s);
            if (d > guard)
                throw SolverError("internal invariant violation: delayed argument " +
                                  std::to_string(d) + " beyond solved window end " +
                                  std::to_string(a));
            return p.gain()(s) * (B * tr.eval(d));
        };
        for (size_t i = ia; i < ib; ++i) {
            Vector next = rk4_step(g, G, forcing, grid[i], grid[i + 1] - grid[i],
                                   tr.states.back());
            if (!next.allFinite())
                throw SolverError("non-finite state at t=" + std::to_string(grid[i + 1]));
            tr.times.push_back(grid[i + 1]);
            tr.states.push_back(std::move(next));
        }
        ia = ib;
    }
    return Trajectory(p.history(), std::move(tr.times), std::move(tr.states));
}

std::pair<Trajectory, PicardDiagnostics> solve_picard(const DelayProblem& p, double T,
                                                      const SolverConfig& cfg) {
    if (T <= 0.0) throw std::invalid_argument("horizon T must be positive");
    if (!(cfg.window_safety > 0.0 && cfg.window_safety < 1.0))
        throw std::invalid_argument("window_safety must lie in (0, 1)");

    auto grid = detail::canonical_grid(T, cfg.dt, p.gain());
    const GeneratorOperator& g = p.generator();
    const Matrix& B = p.feedback().matrix();
    const Nonlinearity* G = p.nonlinearity() ? &*p.nonlinearity() : nullptr;
    const double M = certificate_M(p);
    const double Bn = p.feedback_norm();
    const double L = p.lipschitz();

    PartialTrajectory accepted{&p.history()};
    accepted.states.push_back(p.initial_state());
    PicardDiagnostics diag;

    size_t ia = 0;
    while (ia + 1 < grid.size()) {
        double a = grid[ia];
        auto budget = [&](double b) {
            return M * (Bn * p.gain().integral_abs(a, b) + L * (b - a));
        };
        // largest grid node with budget <= theta (budget is nondecreasing in b)
        size_t lo = ia + 1, hi = grid.size() - 1, ib;
        if (budget(grid[lo]) > cfg.window_safety)
            throw SolverError("picard window [" + std::to_string(a) + ", " +
                              std::to_string(grid[lo]) +
                              "] cannot meet the contraction budget; refine dt or "
                              "weaken the gain");
        while (lo < hi) { // invariant: budget(grid[lo]) <= theta < budget(grid[hi+1])
            size_t mid = lo + (hi - lo + 1) / 2;
            if (budget(grid[mid]) <= cfg.window_safety) lo = mid;
            else hi = mid - 1;
        }
        ib = lo;
        double b = grid[ib];
        if (b < T - 1e-12 * (1.0 + T) && b - a < 4.0 * cfg.dt - 1e-12)
            throw SolverError("picard window [" + std::to_string(a) + ", " +
                              std::to_string(b) + "] shrank below 4 steps under the "
                              "contraction budget");

        PicardWindow win;
        win.t0 = a;
        win.t1 = b;
        win.theoretical_factor = budget(b);

        const size_t nwin = ib - ia; // steps in window
        std::vector<double> wtimes(grid.begin() + ia, grid.begin() + ib + 1);

        // first iterate: constant extension of the left-endpoint state
        std::vector<Vector> prev(nwin + 1, accepted.states.back());
        std::vector<Vector> cur(nwin + 1);

        auto eval_prev = [&](double t) -> Vector {
            if (t <= a) return accepted.eval(t);
            t = std::min(t, b);
            return deq::detail::interp_linear(wtimes, prev, t);
        };
        auto forcing = [&](double s) -> Vector {
            Vector out = p.gain()(s) * (B * eval_prev(s - p.delay()(s)));
            if (G) out += (*G)(g, eval_prev(s));
            return out;
        };
        auto sweep = [&]() {
            cur[0] = accepted.states.back();
            for (size_t i = 0; i < nwin; ++i) {
                cur[i + 1] = rk4_step(g, nullptr, forcing, wtimes[i],
                                      wtimes[i + 1] - wtimes[i], cur[i]);
                if (!cur[i + 1].allFinite())
                    throw SolverError("non-finite state in picard sweep at t=" +
                                      std::to_string(wtimes[i + 1]));
            }
        };

        if (win.theoretical_factor == 0.0) {
            // the fixed-point map does not depend on the iterate; one solve
            sweep();
            prev = cur;
            win.iterations = 1;
        } else {
            bool converged = false;
            for (int it = 1; it <= cfg.picard_max_iterations; ++it) {
                sweep();
                double err = 0.0;
                for (size_t i = 0; i <= nwin; ++i)
                    err = std::max(err, g.norm(cur[i] - prev[i]));
                win.errors.push_back(err);
                prev.swap(cur);
                win.iterations = it;
                if (err < cfg.picard_tolerance) { converged = true; break; }
            }
            if (!converged)
                throw SolverError("picard iteration cap exceeded on window [" +
                                  std::to_string(a) + ", " + std::to_string(b) +
                                  "]; last error " +
                                  std::to_string(win.errors.back()));
        }

        // empirical contraction factor: geometric mean of successive error
        // ratios after the second iterate, skipping rounding-floor noise
        double scale = 0.0;
        for (const auto& s : prev) scale = std::max(scale, s.norm());
        double floor = 1e-15 * (1.0 + scale);
        double logsum = 0.0;
        int nratio = 0;
        for (size_t j = 2; j < win.errors.size(); ++j) {
            if (win.errors[j - 1] > floor && win.errors[j] > floor) {
                logsum += std::log(win.errors[j] / win.errors[j - 1]);
                ++nratio;
            }
        }
        win.empirical_factor = nratio ? std::exp(logsum / nratio) : 0.0;
        diag.windows.push_back(std::move(win));

        for (size_t i = 1; i <= nwin; ++i) {
            accepted.times.push_back(wtimes[i]);
            accepted.states.push_back(std::move(prev[i]));
        }
        ia = ib;
    }
    return {Trajectory(p.history(), std::move(accepted.times), std::move(accepted.states)),
            std::move(diag)};
}

double duhamel_residual(const DelayProblem& p, const Trajectory& tr,
                        const std::vector<double>& sample_times) {
    const GeneratorOperator& g = p.generator();
    const Matrix& A = g.matrix();
    const Matrix& B = p.feedback().matrix();
    const Nonlinearity* G = p.nonlinearity() ? &*p.nonlinearity() : nullptr;
    Vector u0 = tr.eval(0.0);

    double havg = tr.end_time() / std::max<size_t>(1, tr.times().size() - 1);

    auto integrand = [&](double s) -> Vector {
        Vector out = p.gain()(s) * (B * tr.eval(s - p.delay()(s)));
        if (G) out += (*G)(g, tr.eval(s));
        return out;
    };

    double worst = 0.0;
    for (double t : sample_times) {
        if (t < 0.0 || t > tr.end_time() + 1e-12 * (1.0 + tr.end_time()))
            throw std::domain_error("duhamel_residual: sample time outside trajectory");
        Vector total = Vector::Zero(g.dimension());
        if (t > 0.0) {
            std::vector<double> cuts{0.0};
            for (double bkp : p.gain().breakpoints_in(0.0, t)) cuts.push_back(bkp);
            cuts.push_back(t);
            for (size_t c = 0; c + 1 < cuts.size(); ++c) {
                double lo = cuts[c], hi = cuts[c + 1];
                double len = hi - lo;
                if (len <= 0.0) continue;
                long panels = std::max<long>(8, 2 * static_cast<long>(
                                                    std::ceil(len / (2.0 * havg))));
                panels = std::min<long>(panels, 4096);
                if (panels % 2) ++panels;
                double h = len / panels;
                for (long i = 0; i <= panels; ++i) {
                    double s = lo + i * h;
                    double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                    Matrix S = ((t - s) * A).exp();
                    total += (w * h / 3.0) * (S * integrand(s));
                }
            }
        }
        Vector defect = tr.eval(t) - apply_semigroup(g, t, u0) - total;
        worst = std::max(worst, g.norm(defect));
    }
    return worst;
}

} // namespace deq
