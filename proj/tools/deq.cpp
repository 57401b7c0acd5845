#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "deq/analysis.hpp"
#include "deq/config.hpp"
#include "deq/models.hpp"
#include "deq/oracle.hpp"
#include "deq/semigroup.hpp"
#include "deq/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// 17 significant digits so CSV/JSON round-trips are lossless.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json cert_json(const deq::SemigroupCertificate& c) {
    json j;
    j["M"] = c.M;
    j["omega"] = c.omega;
    j["horizon"] = c.horizon;
    j["grid_points"] = c.grid_times.size();
    return j;
}

json envelope_json(const deq::StabilityEnvelope& e) {
    json j;
    j["gamma"] = e.gamma;
    j["omega_prime"] = e.omega_prime;
    j["horizon"] = e.horizon;
    j["K"] = e.K;
    j["provenance"] =
        e.provenance == deq::StabilityEnvelope::Provenance::Fitted ? "fitted" : "user";
    return j;
}

struct SolveResult {
    deq::Trajectory trajectory;
    std::optional<deq::PicardDiagnostics> diagnostics;
};

SolveResult run_solve(const deq::RunSetup& s) {
    if (s.method == deq::SolveMethod::Steps)
        return {deq::solve_method_of_steps(s.problem, s.T, s.solver), std::nullopt};
    auto [tr, diag] = deq::solve_picard(s.problem, s.T, s.solver);
    return {std::move(tr), std::move(diag)};
}

// Evenly strided subset of indices including the first and last node.
std::vector<size_t> strided_indices(size_t n, size_t cap) {
    std::vector<size_t> idx;
    if (n == 0) return idx;
    size_t stride = (n + cap - 1) / cap;
    if (stride == 0) stride = 1;
    for (size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

void write_trajectory_csv(const fs::path& path, const deq::DelayProblem& p,
                          const deq::Trajectory& tr) {
    std::ofstream out(path);
    out << "t";
    for (int i = 0; i < p.dimension(); ++i) out << ",u_" << i;
    out << ",norm\n";
    auto idx = strided_indices(tr.times().size(), 2000);
    for (size_t i : idx) {
        const deq::Vector& u = tr.states()[i];
        out << fmt(tr.times()[i]);
        for (int c = 0; c < u.size(); ++c) out << ',' << fmt(u[c]);
        out << ',' << fmt(p.generator().norm(u)) << '\n';
    }
}

std::vector<double> energy_times(const deq::Trajectory& tr, size_t cap = 800) {
    std::vector<double> ts;
    for (size_t i : strided_indices(tr.times().size(), cap))
        ts.push_back(tr.times()[i]);
    return ts;
}

void write_energy_csv(const fs::path& path, const deq::EnergyReport& er) {
    std::ofstream out(path);
    out << "t,kinetic,potential,window,total\n";
    for (size_t i = 0; i < er.times.size(); ++i)
        out << fmt(er.times[i]) << ',' << fmt(er.kinetic[i]) << ',' << fmt(er.potential[i])
            << ',' << fmt(er.window[i]) << ',' << fmt(er.total[i]) << '\n';
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

deq::SemigroupCertificate ensure_certificate(deq::RunSetup& s) {
    if (!s.problem.certificate)
        s.problem.certificate = deq::estimate_certificate(
            s.problem.generator(), s.analysis.omega_fraction, s.analysis.grid_density);
    return *s.problem.certificate;
}

json diagnostics_json(const deq::PicardDiagnostics& d) {
    json windows = json::array();
    for (const auto& w : d.windows) {
        json jw;
        jw["t0"] = w.t0;
        jw["t1"] = w.t1;
        jw["iterations"] = w.iterations;
        jw["empirical_factor"] = w.empirical_factor;
        jw["theoretical_factor"] = w.theoretical_factor;
        windows.push_back(std::move(jw));
    }
    return json{{"windows", std::move(windows)}};
}

int cmd_simulate(deq::RunSetup s, const fs::path& out) {
    SolveResult r = run_solve(s);
    fs::create_directories(out);
    write_trajectory_csv(out / "trajectory.csv", s.problem, r.trajectory);

    json run;
    run["config"] = s.echo;
    if (s.method == deq::SolveMethod::Picard || s.problem.certificate)
        run["certificate"] = cert_json(ensure_certificate(s));
    if (r.diagnostics) run["diagnostics"] = diagnostics_json(*r.diagnostics);

    if (s.energy) {
        auto er = deq::compute_energy(*s.energy, s.problem, r.trajectory,
                                      energy_times(r.trajectory));
        write_energy_csv(out / "energy.csv", er);
    }
    write_json(out / "run.json", run);
    return 0;
}

// Envelope grid: omega_prime_points values evenly in [0, omega), plus (for
// constant gain) the exact linear slope of Phi so the fitted majorant is
// exact and extends beyond any finite horizon.
std::vector<deq::StabilityEnvelope> verified_envelopes(const deq::RunSetup& s,
                                                       const deq::SemigroupCertificate& cert,
                                                       double horizon) {
    const auto& p = s.problem;
    std::vector<double> grid;
    int n = std::max(1, s.analysis.omega_prime_points);
    for (int j = 0; j < n; ++j) grid.push_back(cert.omega * j / n);
    if (p.gain().is_constant()) {
        double slope = cert.M * p.feedback_norm() * std::exp(cert.omega * p.tau_bar()) *
                       std::abs(p.gain().constant_value());
        if (slope > 0.0 && slope >= cert.omega)
            throw deq::HypothesisError(
                "envelope: constant gain forces slope omega' = " + fmt(slope) +
                " >= omega = " + fmt(cert.omega) + "; omega' < omega is unsatisfiable");
        if (slope > 0.0) grid.push_back(slope);
    }
    return deq::fit_envelope(p.gain(), cert, p.feedback_norm(), p.tau_bar(), horizon, grid);
}

size_t pick_envelope(const std::vector<deq::StabilityEnvelope>& envs,
                     const deq::SemigroupCertificate& cert, double L, double M,
                     double target) {
    size_t best = envs.size();
    double best_val = 0.0;
    for (size_t i = 0; i < envs.size(); ++i) {
        double rate = cert.omega - envs[i].omega_prime - M * L;
        if (L >= (cert.omega - envs[i].omega_prime) / M) continue;
        double val = envs[i].gamma - rate * target;
        // ties (exactly linear Phi) resolved toward the smallest gamma, which
        // is the envelope that stays valid beyond the fitting horizon
        if (best == envs.size() || val < best_val - 1e-12 ||
            (val <= best_val + 1e-12 && envs[i].gamma < envs[best].gamma)) {
            best = i;
            best_val = val;
        }
    }
    if (best == envs.size())
        throw deq::HypothesisError(
            "lipschitz: L = " + fmt(L) +
            " >= (omega - omega')/M for every admissible envelope");
    return best;
}

int cmd_verify(deq::RunSetup s, const fs::path& out) {
    fs::create_directories(out);
    json vj;
    vj["hypotheses"] = {{"window_bound", false}, {"envelope", false}, {"lipschitz", false}};
    auto fail = [&](const char* which, const std::string& msg) {
        vj["error"] = msg;
        write_json(out / "verify.json", vj);
        std::cerr << "hypothesis '" << which << "' unmet: " << msg << '\n';
        return 4;
    };

    SolveResult r = run_solve(s);
    write_trajectory_csv(out / "trajectory.csv", s.problem, r.trajectory);

    deq::SemigroupCertificate cert;
    try {
        cert = ensure_certificate(s);
    } catch (const std::invalid_argument& e) {
        return fail("envelope", e.what());
    }
    vj["certificate"] = cert_json(cert);

    double horizon = std::max({s.analysis.horizon, s.T, s.problem.tau_bar()});
    double K = deq::window_bound(s.problem.gain(), s.problem.tau_bar(), horizon);
    vj["hypotheses"]["window_bound"] = true;
    vj["window_bound"] = K;

    std::vector<deq::StabilityEnvelope> envs;
    try {
        envs = verified_envelopes(s, cert, horizon);
    } catch (const deq::HypothesisError& e) {
        return fail("envelope", e.what());
    }
    vj["hypotheses"]["envelope"] = true;

    double L = s.problem.lipschitz();
    double target = s.analysis.target_time > 0.0 ? s.analysis.target_time : s.T;
    size_t best;
    try {
        best = pick_envelope(envs, cert, L, cert.M, target);
    } catch (const deq::HypothesisError& e) {
        return fail("lipschitz", e.what());
    }
    vj["hypotheses"]["lipschitz"] = true;
    const deq::StabilityEnvelope& env = envs[best];
    vj["envelope"] = envelope_json(env);

    deq::DecayReport report = deq::verify_decay(s.problem, r.trajectory, cert, env);
    vj["bound_pass"] = report.pass;
    vj["worst_margin"] = report.worst_margin;
    vj["empirical_rate"] = report.empirical_rate;
    vj["theoretical_rate"] = report.theoretical_rate;

    bool all_pass = report.pass;
    if (s.energy) {
        auto er = deq::compute_energy(*s.energy, s.problem, r.trajectory,
                                      energy_times(r.trajectory));
        write_energy_csv(out / "energy.csv", er);
        deq::DecayReport ereport = deq::verify_energy_decay(s.problem, er, cert, env);
        json ej;
        ej["bound_pass"] = ereport.pass;
        ej["worst_margin"] = ereport.worst_margin;
        ej["empirical_rate"] = ereport.empirical_rate;
        ej["theoretical_rate"] = ereport.theoretical_rate;
        vj["energy"] = std::move(ej);
        all_pass = all_pass && ereport.pass;
    }
    write_json(out / "verify.json", vj);

    if (!all_pass) {
        std::cerr << "decay bound violated, worst margin " << fmt(report.worst_margin)
                  << '\n';
        return 5;
    }
    std::cout << "bound holds, worst margin " << fmt(report.worst_margin)
              << ", empirical rate " << fmt(report.empirical_rate) << ", theoretical rate "
              << fmt(report.theoretical_rate) << '\n';
    return 0;
}

int cmd_compare_oracle(deq::RunSetup s) {
    if (s.problem.dimension() > 64)
        throw deq::ConfigError("config error at 'model': dimension " +
                               std::to_string(s.problem.dimension()) +
                               " exceeds the oracle limit 64");
    SolveResult r = run_solve(s);
    double dt_fine = s.solver.dt / std::max(1, s.analysis.oracle_dt_divisor);
    deq::Trajectory ref = deq::oracle_solve(s.problem, s.T, dt_fine);

    double max_diff = 0.0, max_ref = 0.0;
    const auto& g = s.problem.generator();
    for (size_t i = 0; i < r.trajectory.times().size(); ++i) {
        double t = r.trajectory.times()[i];
        deq::Vector d = r.trajectory.states()[i] - ref.eval(t);
        max_diff = std::max(max_diff, g.norm(d));
        max_ref = std::max(max_ref, g.norm(ref.eval(t)));
    }
    double deviation = max_ref > 0.0 ? max_diff / max_ref : max_diff;
    std::cout << "max relative deviation " << fmt(deviation) << " (tolerance "
              << fmt(s.analysis.oracle_tolerance) << ")\n";
    return deviation <= s.analysis.oracle_tolerance ? 0 : 1;
}

int cmd_estimate_certificate(deq::RunSetup s, const fs::path& out) {
    deq::SemigroupCertificate cert;
    try {
        cert = ensure_certificate(s);
    } catch (const std::invalid_argument& e) {
        std::cerr << "hypothesis unmet: " << e.what() << '\n';
        return 4;
    }
    std::cout << "M " << fmt(cert.M) << "  omega " << fmt(cert.omega) << "  horizon "
              << fmt(cert.horizon) << '\n';
    fs::create_directories(out);
    write_json(out / "certificate.json", cert_json(cert));
    return 0;
}

int cmd_fit_envelope(deq::RunSetup s, const fs::path& out) {
    deq::SemigroupCertificate cert;
    try {
        cert = ensure_certificate(s);
    } catch (const std::invalid_argument& e) {
        std::cerr << "hypothesis unmet: " << e.what() << '\n';
        return 4;
    }
    double horizon = std::max({s.analysis.horizon, s.T, s.problem.tau_bar()});
    std::vector<deq::StabilityEnvelope> envs;
    try {
        envs = verified_envelopes(s, cert, horizon);
    } catch (const deq::HypothesisError& e) {
        std::cerr << "hypothesis unmet: " << e.what() << '\n';
        return 4;
    }
    double target = s.analysis.target_time > 0.0 ? s.analysis.target_time : s.T;
    size_t best = deq::best_envelope(envs, cert.omega, target);
    json j;
    j["certificate"] = cert_json(cert);
    j["envelopes"] = json::array();
    for (const auto& e : envs) j["envelopes"].push_back(envelope_json(e));
    j["best"] = best;
    fs::create_directories(out);
    write_json(out / "envelope.json", j);
    for (size_t i = 0; i < envs.size(); ++i)
        std::cout << (i == best ? "* " : "  ") << "omega' " << fmt(envs[i].omega_prime)
                  << "  gamma " << fmt(envs[i].gamma) << '\n';
    return 0;
}

int run_one(const std::string& command, const std::string& config_path,
            const fs::path& out) {
    try {
        deq::RunSetup s = deq::load_run_setup_file(config_path);
        if (command == "simulate") return cmd_simulate(std::move(s), out);
        if (command == "verify") return cmd_verify(std::move(s), out);
        if (command == "compare-oracle") return cmd_compare_oracle(std::move(s));
        if (command == "estimate-certificate")
            return cmd_estimate_certificate(std::move(s), out);
        if (command == "fit-envelope") return cmd_fit_envelope(std::move(s), out);
        std::cerr << "unknown command '" << command << "'\n";
        return 2;
    } catch (const deq::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const deq::HypothesisError& e) {
        std::cerr << "hypothesis unmet: " << e.what() << '\n';
        return 4;
    } catch (const deq::SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delayed-feedback evolution solver and bound verifier"};
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::string out_dir = ".";
    int jobs = 1;

    for (const char* name :
         {"simulate", "verify", "compare-oracle", "estimate-certificate", "fit-envelope"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("config", configs, "configuration file(s)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--jobs", jobs, "parallel runs over multiple configs");
    }

    CLI11_PARSE(app, argc, argv);
    std::string command = app.get_subcommands().front()->get_name();

    if (configs.size() == 1) return run_one(command, configs[0], out_dir);

    // Sweep mode: isolated per-config output directories, worst exit code wins.
    std::mutex mu;
    std::vector<int> codes(configs.size(), 0);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            fs::path sub = fs::path(out_dir) / fs::path(configs[i]).stem();
            int code = run_one(command, configs[i], sub);
            std::lock_guard<std::mutex> lock(mu);
            codes[i] = code;
            std::cout << configs[i] << " -> exit " << code << '\n';
        }
    };
    size_t nthreads = std::min<size_t>(std::max(1, jobs), configs.size());
    std::vector<std::thread> pool;
    for (size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return *std::max_element(codes.begin(), codes.end());
}
