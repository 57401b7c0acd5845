#ifndef DEQ_TESTS_SUPPORT_HPP
#define DEQ_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "deq/models.hpp"
#include "deq/types.hpp"

namespace deq_tests {

// Benchmark problem used across the suite: u' = -u + 0.3 u(t-1), f = 1.
inline deq::DelayProblem benchmark_problem() {
    return deq::build_scalar(1.0, 1.0, deq::GainFunction::constant(0.3),
                             deq::DelayFunction::constant(1.0),
                             deq::HistorySegment::constant(deq::Vector::Ones(1), 1.0));
}

// Piecewise-analytic solution of the benchmark. On window m (t in [m, m+1])
//   u(t) = sum_j c[m][j] (t-m)^j e^{-(t-m)} + d[m],
// with d[m] = 0.3 d[m-1] (d[-1] read as the constant history 1), resonant
// particular integrals c[m][j] = 0.3 c[m-1][j-1] / j, and continuity fixing
// c[m][0].
inline double benchmark_exact(double t) {
    if (t <= 0.0) return 1.0;
    static std::vector<std::vector<double>> c;
    static std::vector<double> d;
    if (c.empty()) {
        c.push_back({0.7});
        d.push_back(0.3);
    }
    auto window_value = [&](size_t m, double tau) {
        double poly = 0.0, p = 1.0;
        for (double cj : c[m]) {
            poly += cj * p;
            p *= tau;
        }
        return poly * std::exp(-tau) + d[m];
    };
    size_t m = static_cast<size_t>(t);
    while (c.size() <= m) {
        size_t prev = c.size() - 1;
        double join = window_value(prev, 1.0);
        d.push_back(0.3 * d[prev]);
        std::vector<double> row(c[prev].size() + 1, 0.0);
        for (size_t j = 1; j < row.size(); ++j) row[j] = 0.3 * c[prev][j - 1] / j;
        row[0] = join - d.back();
        c.push_back(std::move(row));
    }
    return window_value(m, t - m);
}

// Random stable generator with identity metric: A = 0.3 W - s I with
// ||W||_inf-ish entries in [-1, 1], so the numerical abscissa stays below
// -(s - 0.3).
inline deq::Matrix random_stable_matrix(std::mt19937& rng, int dim, double shift) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    deq::Matrix W(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) W(i, j) = u(rng);
    return 0.3 * W - shift * deq::Matrix::Identity(dim, dim);
}

inline deq::Matrix random_matrix(std::mt19937& rng, int dim, double scale) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    deq::Matrix B(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) B(i, j) = scale * u(rng);
    return B;
}

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// tau(t) = base + amp sin^2(nu t + phase) as a closed-form delay with
// declared bounds [base, base + amp].
inline deq::DelayFunction random_delay(std::mt19937& rng, double base, double amp) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double nu = 0.5 + 2.0 * u(rng);
    double phase = 6.28 * u(rng);
    std::string s = "sin(" + num(nu) + "*t+" + num(phase) + ")";
    return deq::DelayFunction::closed_form(num(base) + "+" + num(amp) + "*" + s + "*" + s,
                                           base + amp, base);
}

// Random piecewise-constant gain with values in [-kmax, kmax].
inline deq::GainFunction random_gain(std::mt19937& rng, double kmax, double T) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int jumps = 1 + static_cast<int>(u(rng) * 3);
    std::vector<double> times, values;
    for (int i = 0; i < jumps; ++i) times.push_back(T * (i + u(rng)) / (jumps + 1));
    for (int i = 0; i <= jumps; ++i) values.push_back(kmax * (2.0 * u(rng) - 1.0));
    return deq::GainFunction::piecewise_constant(std::move(times), std::move(values));
}

inline deq::Vector random_vector(std::mt19937& rng, int dim, double scale) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    deq::Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = scale * u(rng);
    return v;
}

// Random problem with tau(t) >= tau0 > 0, suitable for both solution methods.
inline deq::DelayProblem random_two_method_problem(std::mt19937& rng, double tau0,
                                                  double T) {
    std::uniform_int_distribution<int> du(1, 8);
    int dim = du(rng);
    deq::GeneratorOperator g(random_stable_matrix(rng, dim, 1.2));
    deq::FeedbackOperator b(random_matrix(rng, dim, 0.5));
    deq::DelayFunction tau = random_delay(rng, tau0, 0.3);
    deq::GainFunction k = random_gain(rng, 0.4, T);
    deq::HistorySegment f =
        deq::HistorySegment::constant(random_vector(rng, dim, 1.0), tau.upper_bound());
    return deq::DelayProblem(std::move(g), std::move(b), std::move(k), std::move(tau),
                             std::move(f));
}

} // namespace deq_tests

#endif
