#ifndef DEQ_CONFIG_HPP
#define DEQ_CONFIG_HPP

#include <json.hpp>
#include <stdexcept>
#include <string>

#include "deq/models.hpp"
#include "deq/solver.hpp"
#include "deq/types.hpp"

namespace deq {

// Configuration file is malformed or inconsistent; the message names the
// offending key path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SolveMethod { Steps, Picard };

struct AnalysisConfig {
    double omega_fraction = 0.95;
    int grid_density = 160;
    double horizon = 0.0;        // envelope horizon; 0 means "use T"
    double target_time = 0.0;    // envelope selection target; 0 means "use T"
    int omega_prime_points = 33;
    double oracle_tolerance = 1e-6;
    int oracle_dt_divisor = 16;
};

// Fully resolved experiment: the abstract problem, the energy model when the
// configuration describes a PDE discretization, and every solver/analysis
// knob with defaults filled in.
struct RunSetup {
    DelayProblem problem;
    std::optional<EnergyModel> energy;
    SolverConfig solver;
    double T = 1.0;
    SolveMethod method = SolveMethod::Picard;
    AnalysisConfig analysis;
    nlohmann::json echo;      // exact config used, defaults resolved
    std::string model_kind;   // scalar | matrix | wave | elasticity
};

// Parses and validates a configuration document. Throws ConfigError with the
// dotted key path on any missing or ill-typed entry.
RunSetup load_run_setup(const nlohmann::json& doc);
RunSetup load_run_setup_file(const std::string& path);

} // namespace deq

#endif
