#include <doctest.h>

#include <cmath>

#include "deq/oracle.hpp"
#include "deq/solver.hpp"
#include "support.hpp"

using namespace deq;
using namespace deq_tests;

TEST_CASE("oracle: undelayed scalar decay to 1e-10") {
    DelayProblem p(GeneratorOperator(-Matrix::Identity(1, 1)),
                   FeedbackOperator(Matrix::Identity(1, 1)), GainFunction::constant(0.0),
                   DelayFunction::constant(1.0),
                   HistorySegment::constant(Vector::Ones(1), 1.0));
    Trajectory tr = oracle_solve(p, 1.0, 1e-3);
    CHECK(tr.eval(1.0)[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("oracle: first-window closed form to 1e-10") {
    DelayProblem p(GeneratorOperator(Matrix::Zero(1, 1)),
                   FeedbackOperator(Matrix::Identity(1, 1)), GainFunction::constant(0.4),
                   DelayFunction::constant(0.8),
                   HistorySegment::constant(2.0 * Vector::Ones(1), 0.8));
    Trajectory tr = oracle_solve(p, 0.8, 1e-4);
    for (double t : {0.2, 0.5, 0.8})
        CHECK(tr.eval(t)[0] == doctest::Approx(2.0 * (1.0 + 0.4 * t)).epsilon(1e-10));
}

TEST_CASE("oracle self-convergence on a rotation-plus-damping system") {
    Matrix A(2, 2);
    A << -0.1, 1.0, -1.0, -0.1;
    DelayProblem p(GeneratorOperator(A), FeedbackOperator(Matrix::Identity(2, 2)),
                   GainFunction::constant(0.05), DelayFunction::constant(0.5),
                   HistorySegment::constant(Vector::Ones(2), 0.5));
    double T = 3.0;
    Vector u1 = oracle_solve(p, T, 2e-3).eval(T);
    Vector u2 = oracle_solve(p, T, 1e-3).eval(T);
    CHECK((u1 - u2).norm() < 1e-9);
}

TEST_CASE("oracle self-convergence is roughly fourth order") {
    DelayProblem p = benchmark_problem();
    double T = 4.0;
    double d1 = std::abs(oracle_solve(p, T, 8e-3).eval(T)[0] -
                         oracle_solve(p, T, 4e-3).eval(T)[0]);
    double d2 = std::abs(oracle_solve(p, T, 4e-3).eval(T)[0] -
                         oracle_solve(p, T, 2e-3).eval(T)[0]);
    // ratio approaches 16 until interpolation-order saturation
    CHECK(d1 / d2 >= 8.0);
    CHECK(d1 / d2 <= 40.0);
}

TEST_CASE("oracle matches the closed-form benchmark tightly") {
    DelayProblem p = benchmark_problem();
    Trajectory tr = oracle_solve(p, 6.0, 5e-4);
    for (double t : {1.5, 3.0, 6.0})
        CHECK(tr.eval(t)[0] == doctest::Approx(benchmark_exact(t)).epsilon(1e-9));
}

TEST_CASE("oracle reports blow-up with a time") {
    // u' = +2u: finite but used with an absurd horizon to force overflow
    DelayProblem p(GeneratorOperator(2.0 * Matrix::Identity(1, 1)),
                   FeedbackOperator(Matrix::Identity(1, 1)), GainFunction::constant(0.0),
                   DelayFunction::constant(1.0),
                   HistorySegment::constant(1e300 * Vector::Ones(1), 1.0));
    CHECK_THROWS_AS(oracle_solve(p, 500.0, 0.1), SolverError);
}
