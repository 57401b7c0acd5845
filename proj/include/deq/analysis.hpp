#ifndef DEQ_ANALYSIS_HPP
#define DEQ_ANALYSIS_HPP

#include <stdexcept>

#include "deq/models.hpp"
#include "deq/types.hpp"

namespace deq {

// A theorem hypothesis failed; the corresponding bound is not asserted.
struct HypothesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Uniform bound K on int_{t - tau_bar}^t |k| over [0, horizon]: max over a
// sliding grid of step tau_bar/64 plus all breakpoint-aligned windows, exact
// piecewise integration between breakpoints.
double window_bound(const GainFunction& k, double tau_bar, double horizon);

// Linear-in-t majorant of Phi(t) = M ||B|| e^{omega tau_bar} int_0^t |k|:
// Phi(t) <= gamma + omega' t on [0, horizon], with omega' < omega strictly.
struct StabilityEnvelope {
    double gamma = 0.0;
    double omega_prime = 0.0;
    double horizon = 0.0;
    double K = 0.0; // window bound attached to the same horizon
    enum class Provenance { UserSupplied, Fitted } provenance = Provenance::Fitted;
};

// gamma(omega') = max_t (Phi(t) - omega' t) clamped at >= 0, for each omega'
// in the grid (entries >= omega are skipped). Sorted by omega'.
std::vector<StabilityEnvelope> fit_envelope(const GainFunction& k,
                                            const SemigroupCertificate& cert,
                                            double feedback_norm, double tau_bar,
                                            double horizon,
                                            const std::vector<double>& omega_prime_grid);

// Index of the envelope minimizing the bound value e^gamma e^{-(omega-omega')T}
// at the target time.
size_t best_envelope(const std::vector<StabilityEnvelope>& envelopes,
                     double cert_omega, double target_time);

// Direct re-check of the envelope inequality on a refined grid.
bool envelope_valid(const StabilityEnvelope& env, const GainFunction& k,
                    const SemigroupCertificate& cert, double feedback_norm,
                    double tau_bar, int refine = 8, double slack = 1e-9);

// Closed-form right-hand side of the decay estimate:
//   bound(t) = M e^gamma (||U0|| + e^{omega tau_bar} K ||B|| H_f) e^{-rate t},
//   H_f = max_{s in [-tau_bar,0]} e^{omega s} ||f(s)||  (x8 grid refinement),
//   rate = omega - omega' - M L.
// Throws HypothesisError when L >= (omega - omega')/M.
struct DecayBound {
    double M_tilde = 0.0;   // M (||U0|| + e^{omega tau_bar} K ||B|| H_f)
    double prefactor = 1.0; // e^gamma
    double rate = 0.0;
    double value(double t) const;
};
DecayBound decay_bound(const StabilityEnvelope& env, const SemigroupCertificate& cert,
                       double feedback_norm, const HistorySegment& history,
                       const GeneratorOperator& g, double lipschitz = 0.0);
std::vector<double> decay_bound_curve(const DecayBound& bound,
                                      const std::vector<double>& times);

struct DecayReport {
    std::vector<double> times;
    std::vector<double> values; // ||U(t)||_H, or E(t) for energy reports
    std::vector<double> bounds;
    double worst_margin = 0.0;  // min_t (bound - value)
    bool pass = false;          // worst margin >= -1e-9 (1 + bound) pointwise
    double empirical_rate = 0.0;   // least-squares log fit on the last half
    double theoretical_rate = 0.0;
};

// Pointwise ||U(t)||_H <= bound(t) on the trajectory grid.
DecayReport verify_decay(const DelayProblem& p, const Trajectory& tr,
                         const SemigroupCertificate& cert, const StabilityEnvelope& env);

// A priori bound on a window with M ||B|| int_0^T |k| < 1 (refused otherwise):
// ||U(t)|| <= e (M ||U0|| + max ||f||) at every node in [0, window_end].
struct AprioriReport {
    double bound = 0.0;
    double worst_margin = 0.0;
    bool pass = false;
    double window_end = 0.0;
};
AprioriReport verify_apriori(const DelayProblem& p, const Trajectory& tr,
                             const SemigroupCertificate& cert, double window_end);

// Energy decay E(t) <= C* e^{-beta t} with C0 = e^gamma M_tilde,
// beta = omega - omega', C* = C0^2/2 + C0^2 K e^{2 beta tau_bar}/2.
DecayReport verify_energy_decay(const DelayProblem& p, const EnergyReport& energy,
                                const SemigroupCertificate& cert,
                                const StabilityEnvelope& env);

// Windowed maximum u~(t) = max_{s in [t - tau_bar, t] cap [0, t]} e^{omega s} ||U(s)||,
// recomputed from the trajectory alone.
std::vector<double> windowed_exp_max(const DelayProblem& p, const Trajectory& tr,
                                     double omega, const std::vector<double>& times);

// Discrete Gronwall envelope M_tilde exp(M ||B|| e^{omega tau_bar} int_0^t |k|
// + M L t) minus e^{omega t} ||U(t)||, minimized over the trajectory grid
// (relative to the envelope). Nonnegative up to slack when the proof chain
// holds.
double gronwall_margin(const DelayProblem& p, const Trajectory& tr,
                       const SemigroupCertificate& cert);

} // namespace deq

#endif
