#ifndef DEQ_ORACLE_HPP
#define DEQ_ORACLE_HPP

#include "deq/types.hpp"

namespace deq {

// Brute-force reference solver used by tests and the compare-oracle command.
// Fixed fine steps with cubic-Hermite dense output for delayed lookups;
// delayed arguments inside the current step read a locally extrapolated dense
// polynomial refreshed by two fixed-point sweeps. Shares no stepping code
// with the production solvers.
//
// Throws SolverError with the blow-up time when the state leaves the finite
// range.
Trajectory oracle_solve(const DelayProblem& p, double T, double dt_fine);

} // namespace deq

#endif
