#ifndef DEQ_SEMIGROUP_HPP
#define DEQ_SEMIGROUP_HPP

#include "deq/types.hpp"

namespace deq {

// Largest real part over the spectrum of A.
double spectral_abscissa(const GeneratorOperator& g);

// S(t)x = e^{tA} x by dense scaling-and-squaring. t >= 0.
Vector apply_semigroup(const GeneratorOperator& g, double t, const Vector& x);

// Metric operator norm ||e^{tA}||_H. t >= 0.
double operator_norm_semigroup(const GeneratorOperator& g, double t);

// Produces a certificate (M, omega) with omega = omega_fraction * (-alpha(A)).
// The evidence horizon grows geometrically until the submultiplicative tail
// closure q = ||e^{T_h A}||_H e^{omega T_h} <= 1 holds, which extends the
// sampled envelope to all t >= 0. grid_density is the number of evidence
// samples on [0, T_h].
//
// Throws std::invalid_argument when alpha(A) >= 0 ("generator not
// exponentially stable") and std::runtime_error when tail closure is not
// reached within the iteration cap.
SemigroupCertificate estimate_certificate(const GeneratorOperator& g,
                                          double omega_fraction = 0.95,
                                          int grid_density = 160);

// Direct re-check of both certificate invariants (envelope on the evidence
// grid, tail closure). Used by tests and by the CLI before trusting a
// user-supplied certificate.
bool certificate_valid(const GeneratorOperator& g, const SemigroupCertificate& cert,
                       double slack = 1e-10);

} // namespace deq

#endif
