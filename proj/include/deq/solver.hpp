#ifndef DEQ_SOLVER_HPP
#define DEQ_SOLVER_HPP

#include <functional>
#include <stdexcept>
#include <utility>

#include "deq/types.hpp"

namespace deq {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    double dt = 1e-3;
    double picard_tolerance = 1e-12;
    int picard_max_iterations = 200;
    double window_safety = 0.5; // theta in (0, 1)
};

struct StateSamples {
    std::vector<double> times;
    std::vector<Vector> states;
};

// One Picard window and its iteration record.
struct PicardWindow {
    double t0 = 0.0, t1 = 0.0;
    int iterations = 0;
    std::vector<double> errors;     // successive sup-norm differences
    double empirical_factor = 0.0;  // geometric mean of error ratios after the
                                    // second iterate; 0 when too few ratios
    double theoretical_factor = 0.0; // M (||B|| int |k| + L len)
};

struct PicardDiagnostics {
    std::vector<PicardWindow> windows;
};

// Classical fourth-order one-step integration of U' = AU (+ G(U)) + F(t) on
// [t0, t1]. The step grid is t0 + i dt capped at t1, refined to at least 4
// steps, with extra_nodes inserted.
StateSamples integrate_forced(const GeneratorOperator& g,
                              const std::function<Vector(double)>& forcing,
                              double t0, double t1, const Vector& u0,
                              const SolverConfig& cfg,
                              const Nonlinearity* nonlinearity = nullptr,
                              const std::vector<double>& extra_nodes = {});

// Theorem-style step-by-step construction on consecutive windows of length
// tau_0 = declared lower delay bound (> 0 required): within each window the
// delayed argument falls in already-solved territory, so the delayed term is
// a known forcing.
Trajectory solve_method_of_steps(const DelayProblem& p, double T,
                                 const SolverConfig& cfg);

// Windowed fixed-point construction: windows [a, b] are chosen maximal under
// the contraction budget M(||B|| int_a^b |k| + L (b-a)) <= window_safety, and
// on each window the map U -> (forced solve with delayed term and
// nonlinearity read from the previous iterate) is iterated to
// picard_tolerance. Works for any continuous tau with 0 <= tau <= tau_bar,
// including vanishing delay.
std::pair<Trajectory, PicardDiagnostics> solve_picard(const DelayProblem& p, double T,
                                                      const SolverConfig& cfg);

// Max over sample_times of the Duhamel defect
//   || U(t) - S(t)U0 - int_0^t S(t-s)[G(U(s)) + k(s) B U(s - tau(s))] ds ||_H
// with composite Simpson aligned to gain breakpoints.
double duhamel_residual(const DelayProblem& p, const Trajectory& tr,
                        const std::vector<double>& sample_times);

namespace detail {
// Canonical step grid shared by both solvers: multiples of dt on [0, T] plus
// the gain breakpoints. Identical grids are what let the two constructions
// agree to fixed-point tolerance rather than discretization error.
std::vector<double> canonical_grid(double T, double dt, const GainFunction& k);
} // namespace detail

} // namespace deq

#endif
