#ifndef DEQ_MODELS_HPP
#define DEQ_MODELS_HPP

#include <array>
#include <functional>

#include "deq/types.hpp"

namespace deq {

// Minimal scalar instance: n = 1, A = -a, B = b, identity metric, exact
// certificate (M, omega) = (1, a).
DelayProblem build_scalar(double a, double b, GainFunction gain, DelayFunction delay,
                          HistorySegment history,
                          std::optional<Nonlinearity> nonlinearity = std::nullopt);

// Spatial profile: x in 1D (second coordinate ignored), (x, y) in 2D.
using SpatialProfile = std::function<double(double, double)>;

struct WaveModelConfig {
    int dim = 1;                 // spatial dimension, 1 or 2
    int n = 50;                  // interior nodes per direction
    double length = 1.0;         // domain [0, length]^dim, homogeneous Dirichlet
    double a = 1.0;              // frictional damping coefficient, > 0
    std::array<double, 2> damping_region{0.0, 1.0}; // sub-interval per axis (both axes in 2D)
    std::array<double, 2> delay_region{0.0, 1.0};
    double wave_speed = 1.0;     // c; the stiffness form scales with c^2
    GainFunction gain = GainFunction::constant(0.0);
    DelayFunction delay = DelayFunction::constant(1.0);
    SpatialProfile u0;           // initial displacement profile
    SpatialProfile u1;           // initial velocity profile (history constant in s)
};

struct ElasticityModelConfig {
    int dim = 1;
    int n = 50;
    double length = 1.0;
    double a = 1.0;
    std::array<double, 2> damping_region{0.0, 1.0};
    std::array<double, 2> delay_region{0.0, 1.0};
    double lambda = 1.0;         // Lame coefficients, both > 0
    double mu = 1.0;
    GainFunction gain = GainFunction::constant(0.0);
    DelayFunction delay = DelayFunction::constant(1.0);
    std::array<SpatialProfile, 2> u0; // per displacement component
    std::array<SpatialProfile, 2> u1;
};

// Everything energy evaluation needs beyond the abstract problem: the
// stiffness quadratic form, the cell measure for the velocity block, and the
// velocity degrees of freedom inside the delay region.
struct EnergyModel {
    Matrix stiffness;               // potential form: pot = 1/2 u' K u
    double cell_measure = 1.0;      // h^dim; kinetic = 1/2 cell * |v|^2
    std::vector<int> delay_velocity_dofs; // indices into the v block
    int n_displacement = 0;         // size of the u block
};

struct ModelBundle {
    DelayProblem problem;
    EnergyModel energy;
};

// Second-order centered finite differences with Dirichlet rows eliminated;
// state U = (u, v), metric = blockdiag(K, h^d I) so ||U||_H^2 equals twice
// the kinetic + potential energy.
ModelBundle build_wave(const WaveModelConfig& cfg);

// Vector finite-difference discretization of mu Lap u + (lambda+mu) grad div u
// with the same structure. d = 1 degenerates to the wave model with speed
// sqrt(lambda + 2 mu).
ModelBundle build_elasticity(const ElasticityModelConfig& cfg);

struct EnergyReport {
    std::vector<double> times;
    std::vector<double> kinetic;
    std::vector<double> potential;
    std::vector<double> window; // sliding delay-window term
    std::vector<double> total;
};

// E(t) = kinetic + potential + 1/2 int_{t-tau_bar}^t |k(s)| |v(s)|^2_{delay
// region} ds, window term by composite trapezoid over the trajectory grid
// with gain breakpoints inserted.
EnergyReport compute_energy(const EnergyModel& em, const DelayProblem& p,
                            const Trajectory& tr, const std::vector<double>& times);

} // namespace deq

#endif
