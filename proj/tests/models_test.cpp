#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "deq/models.hpp"
#include "deq/semigroup.hpp"
#include "deq/solver.hpp"

using namespace deq;

namespace {

constexpr double kPi = 3.14159265358979312;

WaveModelConfig small_wave() {
    WaveModelConfig cfg;
    cfg.dim = 1;
    cfg.n = 20;
    cfg.a = 1.0;
    cfg.damping_region = {0.2, 0.8};
    cfg.delay_region = {0.3, 0.6};
    cfg.gain = GainFunction::constant(0.05);
    cfg.delay = DelayFunction::constant(0.5);
    cfg.u0 = [](double x, double) { return std::sin(kPi * x); };
    cfg.u1 = [](double, double) { return 0.0; };
    return cfg;
}

} // namespace

TEST_CASE("build_scalar attaches the exact certificate") {
    DelayProblem p = build_scalar(1.0, 1.0, GainFunction::constant(0.3),
                                  DelayFunction::constant(1.0),
                                  HistorySegment::constant(Vector::Ones(1), 1.0));
    REQUIRE(p.certificate.has_value());
    CHECK(p.certificate->M == 1.0);
    CHECK(p.certificate->omega == 1.0);
    CHECK(certificate_valid(p.generator(), *p.certificate));
    CHECK(p.feedback_norm() == doctest::Approx(1.0));

    CHECK_THROWS(build_scalar(-1.0, 1.0, GainFunction::constant(0.0),
                              DelayFunction::constant(1.0),
                              HistorySegment::constant(Vector::Ones(1), 1.0)));
}

TEST_CASE("build_scalar with b = 0 is the pure semigroup flow") {
    DelayProblem p = build_scalar(2.0, 0.0, GainFunction::constant(0.3),
                                  DelayFunction::constant(1.0),
                                  HistorySegment::constant(Vector::Ones(1), 1.0));
    SolverConfig cfg;
    cfg.dt = 1e-3;
    Trajectory tr = solve_method_of_steps(p, 2.0, cfg);
    for (double t : {0.5, 1.0, 2.0})
        CHECK(tr.eval(t)[0] == doctest::Approx(std::exp(-2.0 * t)).epsilon(1e-9));
}

TEST_CASE("wave: zero initial data stays zero with zero energy") {
    WaveModelConfig cfg = small_wave();
    cfg.u0 = [](double, double) { return 0.0; };
    ModelBundle b = build_wave(cfg);
    SolverConfig scfg;
    scfg.dt = 1e-2;
    Trajectory tr = solve_method_of_steps(b.problem, 2.0, scfg);
    for (const auto& s : tr.states()) CHECK(s.norm() == 0.0);
    auto er = compute_energy(b.energy, b.problem, tr, {0.0, 1.0, 2.0});
    for (double e : er.total) CHECK(e == 0.0);
}

TEST_CASE("wave: metric norm squared is twice the undelayed energy") {
    ModelBundle b = build_wave(small_wave());
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int n2 = b.problem.dimension();
    Vector U(n2);
    for (int i = 0; i < n2; ++i) U[i] = u(rng);
    Trajectory tr(HistorySegment::constant(U, b.problem.tau_bar()), {0.0}, {U});
    DelayProblem q(b.problem.generator(), b.problem.feedback(),
                   GainFunction::constant(0.0), b.problem.delay(),
                   HistorySegment::constant(U, b.problem.tau_bar()));
    auto er = compute_energy(b.energy, q, tr, {0.0});
    double norm = b.problem.generator().norm(U);
    CHECK(er.window[0] == 0.0);
    CHECK(2.0 * er.total[0] == doctest::Approx(norm * norm).epsilon(1e-12));
}

TEST_CASE("wave: feedback operator norm at most one, exactly one on delay dofs") {
    ModelBundle b = build_wave(small_wave());
    const Matrix& B = b.problem.feedback().matrix();
    const GeneratorOperator& g = b.problem.generator();
    int n2 = b.problem.dimension();
    CHECK(b.problem.feedback_norm() == 1.0);
    double maxratio = 0.0;
    for (int i = 0; i < n2; ++i) {
        Vector e = Vector::Zero(n2);
        e[i] = 1.0;
        double be = g.norm(B * e);
        CHECK(be <= g.norm(e) * (1.0 + 1e-12));
        maxratio = std::max(maxratio, be / g.norm(e));
    }
    CHECK(maxratio == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vector x(n2);
        for (int i = 0; i < n2; ++i) x[i] = u(rng);
        CHECK(g.norm(B * x) <= g.norm(x) * (1.0 + 1e-12));
    }
}

TEST_CASE("wave: whole-domain damping decays a single sine mode") {
    WaveModelConfig cfg = small_wave();
    cfg.damping_region = {0.0, 1.0};
    cfg.gain = GainFunction::constant(0.0);
    ModelBundle b = build_wave(cfg);
    SemigroupCertificate cert = estimate_certificate(b.problem.generator());
    CHECK(cert.omega > 0.0);
    SolverConfig scfg;
    scfg.dt = 2e-3;
    Trajectory tr = solve_method_of_steps(b.problem, 6.0, scfg);
    auto er = compute_energy(b.energy, b.problem, tr, {0.0, 1.0, 2.0, 4.0, 6.0});
    for (size_t i = 1; i < er.total.size(); ++i)
        CHECK(er.total[i] <= er.total[i - 1] * (1.0 + 1e-10));
    double u0n = b.problem.generator().norm(tr.eval(0.0));
    for (double t : {2.0, 4.0, 6.0})
        CHECK(b.problem.generator().norm(tr.eval(t)) <=
              cert.M * std::exp(-cert.omega * t) * u0n * (1.0 + 1e-9));
}

TEST_CASE("wave: unresolved regions are rejected") {
    WaveModelConfig cfg = small_wave();
    cfg.delay_region = {0.31, 0.33}; // narrower than one mesh cell
    CHECK_THROWS_WITH_AS(build_wave(cfg), doctest::Contains("region"),
                         std::invalid_argument);
}

TEST_CASE("energy report invariants on a delayed wave run") {
    ModelBundle b = build_wave(small_wave());
    SolverConfig scfg;
    scfg.dt = 2e-3;
    Trajectory tr = solve_method_of_steps(b.problem, 4.0, scfg);
    std::vector<double> times;
    for (double t = 0.0; t <= 4.0; t += 0.25) times.push_back(t);
    auto er = compute_energy(b.energy, b.problem, tr, times);
    const auto& g = b.problem.generator();
    for (size_t i = 0; i < times.size(); ++i) {
        CHECK(er.kinetic[i] >= 0.0);
        CHECK(er.potential[i] >= 0.0);
        CHECK(er.window[i] >= 0.0);
        CHECK(er.total[i] ==
              doctest::Approx(er.kinetic[i] + er.potential[i] + er.window[i]));

        // inequality (P11): E(t) <= 1/2 ||U||^2 + 1/2 int |k| ||U(s)||^2 ds
        double n = g.norm(tr.eval(times[i]));
        double quad = 0.0;
        double lo = times[i] - b.problem.tau_bar();
        int panels = 256;
        for (int j = 0; j < panels; ++j) {
            double s0 = lo + (times[i] - lo) * j / panels;
            double s1 = lo + (times[i] - lo) * (j + 1) / panels;
            double f0 = std::abs(b.problem.gain()(s0)) * std::pow(g.norm(tr.eval(s0)), 2);
            double f1 = std::abs(b.problem.gain()(s1)) * std::pow(g.norm(tr.eval(s1)), 2);
            quad += 0.5 * (f0 + f1) * (s1 - s0);
        }
        CHECK(er.total[i] <= 0.5 * n * n + 0.5 * quad + 1e-9);
    }
}

TEST_CASE("1d elasticity equals the wave model at speed sqrt(lambda + 2 mu)") {
    ElasticityModelConfig ec;
    ec.dim = 1;
    ec.n = 20;
    ec.a = 1.0;
    ec.damping_region = {0.2, 0.8};
    ec.delay_region = {0.3, 0.6};
    ec.lambda = 1.0;
    ec.mu = 1.0;
    ec.gain = GainFunction::constant(0.05);
    ec.delay = DelayFunction::constant(0.5);
    ec.u0[0] = [](double x, double) { return std::sin(kPi * x); };
    ec.u0[1] = [](double, double) { return 0.0; };
    ec.u1[0] = [](double, double) { return 0.0; };
    ec.u1[1] = [](double, double) { return 0.0; };
    ModelBundle e = build_elasticity(ec);

    WaveModelConfig wc = small_wave();
    wc.wave_speed = std::sqrt(3.0);
    ModelBundle w = build_wave(wc);

    SolverConfig scfg;
    scfg.dt = 2e-3;
    Trajectory te = solve_method_of_steps(e.problem, 3.0, scfg);
    Trajectory tw = solve_method_of_steps(w.problem, 3.0, scfg);
    REQUIRE(te.times().size() == tw.times().size());
    double worst = 0.0;
    for (size_t i = 0; i < te.times().size(); ++i)
        worst = std::max(worst,
                         w.problem.generator().norm(te.states()[i] - tw.states()[i]));
    CHECK(worst <= 1e-10);
}

TEST_CASE("2d elasticity: small mesh generator is stable under full damping") {
    ElasticityModelConfig ec;
    ec.dim = 2;
    ec.n = 4;
    ec.a = 1.0;
    ec.damping_region = {0.0, 1.0};
    ec.delay_region = {0.2, 0.8};
    ec.lambda = 1.0;
    ec.mu = 1.0;
    ec.gain = GainFunction::constant(0.0);
    ec.delay = DelayFunction::constant(0.5);
    auto zero = [](double, double) { return 0.0; };
    ec.u0 = {zero, zero};
    ec.u1 = {zero, zero};
    ModelBundle b = build_elasticity(ec);
    Eigen::EigenSolver<Matrix> es(b.problem.generator().matrix());
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        CHECK(es.eigenvalues()[i].real() < 0.0);
}

TEST_CASE("undamped undelayed wave conserves the discrete energy") {
    WaveModelConfig cfg;
    cfg.dim = 1;
    cfg.n = 20;
    cfg.a = 0.0;
    cfg.damping_region = {0.2, 0.8};
    cfg.delay_region = {0.3, 0.6};
    cfg.gain = GainFunction::constant(0.0);
    cfg.delay = DelayFunction::constant(0.5);
    cfg.u0 = [](double x, double) { return std::sin(5.0 * kPi * x); };
    cfg.u1 = [](double, double) { return 0.0; };
    ModelBundle b = build_wave(cfg);
    SolverConfig scfg;
    scfg.dt = 2e-3;
    Trajectory tr = solve_method_of_steps(b.problem, 5.0, scfg);
    const auto& g = b.problem.generator();
    double e0 = 0.5 * std::pow(g.norm(tr.eval(0.0)), 2);
    double drift = 0.0;
    for (const auto& s : tr.states())
        drift = std::max(drift, std::abs(0.5 * std::pow(g.norm(s), 2) - e0) / e0);
    CHECK(drift < 1e-6);
}
