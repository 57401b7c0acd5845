#include "deq/config.hpp"

#include <fstream>

#include "deq/expression.hpp"

namespace deq {

namespace {

using nlohmann::json;

std::string joined(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ConfigError("config error at '" + path + "': " + what);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) bad(joined(path, key), "missing key");
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) bad(path, "expected an integer");
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) bad(path, "expected a string");
    return j.get<std::string>();
}

double number_field(const json& j, const std::string& key, const std::string& path) {
    return as_number(require(j, key, path), joined(path, key));
}

double number_or(const json& j, const std::string& key, const std::string& path,
                 double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return as_number(j.at(key), joined(path, key));
}

int int_or(const json& j, const std::string& key, const std::string& path, int fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return as_int(j.at(key), joined(path, key));
}

std::string string_field(const json& j, const std::string& key, const std::string& path) {
    return as_string(require(j, key, path), joined(path, key));
}

std::vector<double> as_number_list(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Matrix as_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) bad(path, "expected a nonempty array of rows");
    size_t rows = j.size();
    auto first = as_number_list(j[0], path + "[0]");
    Matrix m(rows, first.size());
    for (size_t r = 0; r < rows; ++r) {
        auto row = as_number_list(j[r], path + "[" + std::to_string(r) + "]");
        if (row.size() != first.size()) bad(path, "ragged matrix rows");
        for (size_t c = 0; c < row.size(); ++c) m(r, c) = row[c];
    }
    return m;
}

Vector as_vector(const json& j, const std::string& path) {
    auto v = as_number_list(j, path);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

DelayFunction parse_delay(const json& doc) {
    const json& d = require(doc, "delay", "");
    std::string kind = string_field(d, "kind", "delay");
    try {
        if (kind == "constant")
            return DelayFunction::constant(number_field(d, "value", "delay"));
        if (kind == "grid")
            return DelayFunction::grid(as_number_list(require(d, "times", "delay"), "delay.times"),
                                       as_number_list(require(d, "values", "delay"), "delay.values"),
                                       number_field(d, "tau_bar", "delay"),
                                       number_or(d, "tau_min", "delay", 0.0));
        if (kind == "closed_form")
            return DelayFunction::closed_form(string_field(d, "expr", "delay"),
                                              number_field(d, "tau_bar", "delay"),
                                              number_or(d, "tau_min", "delay", 0.0));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad("delay", e.what());
    }
    bad("delay.kind", "unknown kind '" + kind + "'");
}

GainFunction parse_gain(const json& doc) {
    const json& g = require(doc, "gain", "");
    std::string kind = string_field(g, "kind", "gain");
    try {
        if (kind == "constant")
            return GainFunction::constant(number_field(g, "value", "gain"));
        if (kind == "piecewise_constant")
            return GainFunction::piecewise_constant(
                as_number_list(require(g, "times", "gain"), "gain.times"),
                as_number_list(require(g, "values", "gain"), "gain.values"));
        if (kind == "grid")
            return GainFunction::grid(as_number_list(require(g, "times", "gain"), "gain.times"),
                                      as_number_list(require(g, "values", "gain"), "gain.values"));
        if (kind == "closed_form")
            return GainFunction::closed_form(string_field(g, "expr", "gain"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad("gain", e.what());
    }
    bad("gain.kind", "unknown kind '" + kind + "'");
}

HistorySegment parse_history(const json& doc, double tau_bar, int dimension) {
    const json& h = require(doc, "history", "");
    std::string kind = string_field(h, "kind", "history");
    try {
        if (kind == "constant") {
            const json& v = require(h, "value", "history");
            Vector value = v.is_number() ? Vector::Constant(1, v.get<double>())
                                         : as_vector(v, "history.value");
            if (value.size() != dimension) bad("history.value", "dimension mismatch");
            return HistorySegment::constant(value, tau_bar);
        }
        if (kind == "grid") {
            auto times = as_number_list(require(h, "times", "history"), "history.times");
            const json& vals = require(h, "values", "history");
            if (!vals.is_array() || vals.size() != times.size())
                bad("history.values", "expected one state per time");
            std::vector<Vector> states;
            states.reserve(vals.size());
            for (size_t i = 0; i < vals.size(); ++i) {
                const json& v = vals[i];
                states.push_back(v.is_number() ? Vector::Constant(1, v.get<double>())
                                               : as_vector(v, "history.values"));
                if (states.back().size() != dimension)
                    bad("history.values", "dimension mismatch");
            }
            return HistorySegment(std::move(times), std::move(states));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad("history", e.what());
    }
    bad("history.kind", "unknown kind '" + kind + "'");
}

std::optional<Nonlinearity> parse_nonlinearity(const json& doc) {
    if (!doc.contains("nonlinearity") || doc.at("nonlinearity").is_null())
        return std::nullopt;
    const json& g = doc.at("nonlinearity");
    std::string kind = string_field(g, "kind", "nonlinearity");
    try {
        if (kind == "saturating")
            return Nonlinearity::saturating(number_field(g, "lipschitz", "nonlinearity"));
        if (kind == "closed_form")
            return Nonlinearity::closed_form(string_field(g, "expr", "nonlinearity"),
                                             number_field(g, "lipschitz", "nonlinearity"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad("nonlinearity", e.what());
    }
    bad("nonlinearity.kind", "unknown kind '" + kind + "'");
}

std::array<double, 2> region_field(const json& m, const std::string& key,
                                   const std::string& path) {
    auto v = as_number_list(require(m, key, path), joined(path, key));
    if (v.size() != 2) bad(joined(path, key), "expected [lo, hi]");
    return {v[0], v[1]};
}

SpatialProfile profile_field(const json& m, const std::string& key,
                             const std::string& path, const char* fallback) {
    std::string src = fallback;
    if (m.contains(key)) src = as_string(m.at(key), joined(path, key));
    try {
        Expression e = Expression::parse(src, std::vector<std::string>{"x", "y"});
        return [e](double x, double y) { return e(x, y); };
    } catch (const std::exception& err) {
        bad(joined(path, key), err.what());
    }
}

} // namespace

RunSetup load_run_setup(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config error: top level must be an object");

    const json& model = require(doc, "model", "");
    std::string kind = string_field(model, "kind", "model");

    const json& solver_j = require(doc, "solver", "");
    SolverConfig scfg;
    scfg.dt = number_or(solver_j, "dt", "solver", scfg.dt);
    scfg.picard_tolerance = number_or(solver_j, "picard_tolerance", "solver", scfg.picard_tolerance);
    scfg.picard_max_iterations =
        int_or(solver_j, "picard_max_iterations", "solver", scfg.picard_max_iterations);
    scfg.window_safety = number_or(solver_j, "window_safety", "solver", scfg.window_safety);
    if (scfg.dt <= 0.0) bad("solver.dt", "must be positive");
    if (scfg.window_safety <= 0.0 || scfg.window_safety >= 1.0)
        bad("solver.window_safety", "must lie in (0, 1)");
    double T = number_field(solver_j, "T", "solver");
    if (T <= 0.0) bad("solver.T", "must be positive");

    std::string method_name = "picard";
    if (solver_j.contains("method")) method_name = as_string(solver_j.at("method"), "solver.method");
    SolveMethod method;
    if (method_name == "picard") method = SolveMethod::Picard;
    else if (method_name == "steps") method = SolveMethod::Steps;
    else bad("solver.method", "expected 'steps' or 'picard'");

    AnalysisConfig acfg;
    const json analysis_j = doc.contains("analysis") ? doc.at("analysis") : json::object();
    acfg.omega_fraction = number_or(analysis_j, "omega_fraction", "analysis", acfg.omega_fraction);
    acfg.grid_density = int_or(analysis_j, "grid_density", "analysis", acfg.grid_density);
    acfg.horizon = number_or(analysis_j, "horizon", "analysis", T);
    acfg.target_time = number_or(analysis_j, "target_time", "analysis", T);
    acfg.omega_prime_points =
        int_or(analysis_j, "omega_prime_points", "analysis", acfg.omega_prime_points);
    acfg.oracle_tolerance = number_or(analysis_j, "oracle_tolerance", "analysis", acfg.oracle_tolerance);
    acfg.oracle_dt_divisor = int_or(analysis_j, "oracle_dt_divisor", "analysis", acfg.oracle_dt_divisor);
    if (acfg.omega_fraction <= 0.0 || acfg.omega_fraction >= 1.0)
        bad("analysis.omega_fraction", "must lie in (0, 1)");
    if (acfg.oracle_dt_divisor < 1) bad("analysis.oracle_dt_divisor", "must be >= 1");

    DelayFunction delay = parse_delay(doc);
    GainFunction gain = parse_gain(doc);
    std::optional<Nonlinearity> nonlinearity = parse_nonlinearity(doc);

    auto build_problem = [&]() -> RunSetup {
        if (kind == "scalar") {
            double a = number_field(model, "a", "model");
            double b = number_field(model, "b", "model");
            HistorySegment history = parse_history(doc, delay.upper_bound(), 1);
            try {
                DelayProblem p = build_scalar(a, b, gain, delay, std::move(history), nonlinearity);
                return RunSetup{std::move(p), std::nullopt, scfg, T, method, acfg, {}, kind};
            } catch (const std::exception& e) {
                bad("model", e.what());
            }
        }
        if (kind == "matrix") {
            Matrix A = as_matrix(require(model, "A", "model"), "model.A");
            Matrix B = as_matrix(require(model, "B", "model"), "model.B");
            try {
                GeneratorOperator g =
                    model.contains("metric")
                        ? GeneratorOperator(A, as_matrix(model.at("metric"), "model.metric"))
                        : GeneratorOperator(A);
                FeedbackOperator fb =
                    model.contains("feedback_norm")
                        ? FeedbackOperator(B, as_number(model.at("feedback_norm"),
                                                        "model.feedback_norm"))
                        : FeedbackOperator(B);
                HistorySegment history =
                    parse_history(doc, delay.upper_bound(), g.dimension());
                DelayProblem p(std::move(g), std::move(fb), gain, delay, std::move(history),
                               nonlinearity);
                return RunSetup{std::move(p), std::nullopt, scfg, T, method, acfg, {}, kind};
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                bad("model", e.what());
            }
        }
        if (kind == "wave") {
            WaveModelConfig w;
            w.dim = int_or(model, "dim", "model", 1);
            w.n = int_or(model, "n", "model", 50);
            w.length = number_or(model, "length", "model", 1.0);
            w.a = number_field(model, "a", "model");
            w.damping_region = region_field(model, "damping_region", "model");
            w.delay_region = region_field(model, "delay_region", "model");
            w.wave_speed = number_or(model, "wave_speed", "model", 1.0);
            w.gain = gain;
            w.delay = delay;
            w.u0 = profile_field(model, "u0", "model", "0");
            w.u1 = profile_field(model, "u1", "model", "0");
            try {
                ModelBundle b = build_wave(w);
                if (nonlinearity) b.problem = DelayProblem(
                        b.problem.generator(), b.problem.feedback(), b.problem.gain(),
                        b.problem.delay(), b.problem.history(), nonlinearity);
                return RunSetup{std::move(b.problem), std::move(b.energy), scfg, T,
                                method, acfg, {}, kind};
            } catch (const std::exception& e) {
                bad("model", e.what());
            }
        }
        if (kind == "elasticity") {
            ElasticityModelConfig e;
            e.dim = int_or(model, "dim", "model", 1);
            e.n = int_or(model, "n", "model", 50);
            e.length = number_or(model, "length", "model", 1.0);
            e.a = number_field(model, "a", "model");
            e.damping_region = region_field(model, "damping_region", "model");
            e.delay_region = region_field(model, "delay_region", "model");
            e.lambda = number_field(model, "lambda", "model");
            e.mu = number_field(model, "mu", "model");
            e.gain = gain;
            e.delay = delay;
            e.u0[0] = profile_field(model, "u0_x", "model", "0");
            e.u0[1] = profile_field(model, "u0_y", "model", "0");
            e.u1[0] = profile_field(model, "u1_x", "model", "0");
            e.u1[1] = profile_field(model, "u1_y", "model", "0");
            try {
                ModelBundle b = build_elasticity(e);
                if (nonlinearity) b.problem = DelayProblem(
                        b.problem.generator(), b.problem.feedback(), b.problem.gain(),
                        b.problem.delay(), b.problem.history(), nonlinearity);
                return RunSetup{std::move(b.problem), std::move(b.energy), scfg, T,
                                method, acfg, {}, kind};
            } catch (const std::exception& err) {
                bad("model", err.what());
            }
        }
        bad("model.kind", "unknown kind '" + kind + "'");
    };

    RunSetup setup = build_problem();

    json echo = doc;
    echo["solver"]["dt"] = scfg.dt;
    echo["solver"]["T"] = T;
    echo["solver"]["method"] = method_name;
    echo["solver"]["picard_tolerance"] = scfg.picard_tolerance;
    echo["solver"]["picard_max_iterations"] = scfg.picard_max_iterations;
    echo["solver"]["window_safety"] = scfg.window_safety;
    echo["analysis"]["omega_fraction"] = acfg.omega_fraction;
    echo["analysis"]["grid_density"] = acfg.grid_density;
    echo["analysis"]["horizon"] = acfg.horizon;
    echo["analysis"]["target_time"] = acfg.target_time;
    echo["analysis"]["omega_prime_points"] = acfg.omega_prime_points;
    echo["analysis"]["oracle_tolerance"] = acfg.oracle_tolerance;
    echo["analysis"]["oracle_dt_divisor"] = acfg.oracle_dt_divisor;
    setup.echo = std::move(echo);
    return setup;
}

RunSetup load_run_setup_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config error: cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
    }
    return load_run_setup(doc);
}

} // namespace deq
