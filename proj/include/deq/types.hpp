#ifndef DEQ_TYPES_HPP
#define DEQ_TYPES_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deq/expression.hpp"

namespace deq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Interpolation { Linear, CubicHermite };

// ---------------------------------------------------------------------------
// Time delay tau(t): continuous, 0 <= tau(t) <= tau_bar, optionally bounded
// below by tau_min > 0. Bounds are asserted at every evaluation.
class DelayFunction {
public:
    static DelayFunction constant(double tau);
    static DelayFunction grid(std::vector<double> times, std::vector<double> values,
                              double tau_bar, double tau_min = 0.0);
    static DelayFunction closed_form(const std::string& expr, double tau_bar,
                                     double tau_min = 0.0);

    // Throws std::domain_error if the evaluated value violates the declared
    // bounds (that makes the problem description a lie, not a soft failure).
    double operator()(double t) const;

    double upper_bound() const { return tau_bar_; }
    double lower_bound() const { return tau_min_; }

private:
    enum class Kind { Constant, Grid, ClosedForm };
    DelayFunction(Kind k, double tau_bar, double tau_min)
        : kind_(k), tau_bar_(tau_bar), tau_min_(tau_min) {}

    Kind kind_;
    double tau_bar_;
    double tau_min_;
    double constant_value_ = 0.0;
    std::vector<double> grid_times_, grid_values_;
    std::optional<Expression> expr_;
};

// ---------------------------------------------------------------------------
// Gain k(t), defined on [-tau_bar, +inf), piecewise continuous with finitely
// many jumps per window. Supports exact |k| integration between breakpoints.
class GainFunction {
public:
    static GainFunction constant(double k);
    // values[i] on [times[i], times[i+1]); values.front() before times.front(),
    // values.back() after times.back(). Requires values.size() == times.size()+1.
    static GainFunction piecewise_constant(std::vector<double> times,
                                           std::vector<double> values);
    // Piecewise linear through (times[i], values[i]); constant extension
    // outside the node range.
    static GainFunction grid(std::vector<double> times, std::vector<double> values);
    static GainFunction closed_form(const std::string& expr);

    double operator()(double t) const;

    // integral of |k| over [a, b]; exact for the piecewise kinds, composite
    // Simpson on a fine subdivision for the closed-form kind.
    double integral_abs(double a, double b) const;

    // Jump/kink locations in the open interval (a, b), sorted.
    std::vector<double> breakpoints_in(double a, double b) const;

    void attach_window_bound(double K) { window_bound_ = K; }
    std::optional<double> window_bound() const { return window_bound_; }

    bool is_constant() const { return kind_ == Kind::Constant; }
    double constant_value() const { return constant_value_; }

private:
    enum class Kind { Constant, PiecewiseConstant, Grid, ClosedForm };
    explicit GainFunction(Kind k) : kind_(k) {}

    Kind kind_;
    double constant_value_ = 0.0;
    std::vector<double> times_, values_;
    std::optional<Expression> expr_;
    std::optional<double> window_bound_;
};

// ---------------------------------------------------------------------------
// Finite-dimensional generator A on H = R^n with SPD metric M_H.
// Every norm in the artifact is the metric norm sqrt(x' M_H x).
class GeneratorOperator {
public:
    explicit GeneratorOperator(Matrix A);
    GeneratorOperator(Matrix A, Matrix metric);

    int dimension() const { return static_cast<int>(A_.rows()); }
    const Matrix& matrix() const { return A_; }
    const Matrix& metric() const { return metric_; }
    bool identity_metric() const { return identity_metric_; }

    double norm(const Vector& x) const;

    // Metric operator norm of C: largest singular value of L' C L^{-T},
    // where M_H = L L'.
    double operator_norm(const Matrix& C) const;

    // L' x  and  L^{-T} x  (for callers that whiten by hand).
    const Matrix& metric_factor() const { return chol_L_; }

private:
    Matrix A_;
    Matrix metric_;
    Matrix chol_L_; // lower triangular, M_H = L L'
    bool identity_metric_;
};

// ---------------------------------------------------------------------------
class FeedbackOperator {
public:
    explicit FeedbackOperator(Matrix B) : B_(std::move(B)) {}
    FeedbackOperator(Matrix B, double operator_norm)
        : B_(std::move(B)), norm_(operator_norm) {}

    const Matrix& matrix() const { return B_; }
    std::optional<double> supplied_norm() const { return norm_; }

private:
    Matrix B_;
    std::optional<double> norm_;
};

// ---------------------------------------------------------------------------
// Lipschitz nonlinearity G with G(0) = 0.
class Nonlinearity {
public:
    // G(u) = L * u / (1 + ||u||_H)
    static Nonlinearity saturating(double lipschitz);
    // Componentwise g(u_i) from a closed-form expression in variable u.
    // The supplied Lipschitz constant is the caller's claim; it is checked by
    // randomized tests, not proved.
    static Nonlinearity closed_form(const std::string& expr, double lipschitz);

    Vector operator()(const GeneratorOperator& g, const Vector& u) const;
    double lipschitz() const { return lipschitz_; }

private:
    Nonlinearity(double L) : lipschitz_(L) {}
    double lipschitz_;
    bool saturating_ = false;
    std::optional<Expression> expr_;
};

// ---------------------------------------------------------------------------
// Initial history f on [-tau_bar, 0]; f(0) defines U0.
class HistorySegment {
public:
    HistorySegment(std::vector<double> times, std::vector<Vector> values,
                   Interpolation interp = Interpolation::Linear);
    static HistorySegment constant(const Vector& value, double tau_bar);

    Vector eval(double t) const; // domain error outside [-tau_bar, 0]

    double tau_bar() const { return -times_.front(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<Vector>& values() const { return values_; }
    Interpolation interpolation() const { return interp_; }
    int dimension() const { return static_cast<int>(values_.front().size()); }

private:
    std::vector<double> times_;
    std::vector<Vector> values_;
    Interpolation interp_;
};

// ---------------------------------------------------------------------------
// Decay certificate (M, omega): ||e^{tA}||_H <= M e^{-omega t}, backed by a
// sampled evidence grid and a submultiplicative tail closure at horizon.
struct SemigroupCertificate {
    double M = 1.0;
    double omega = 0.0;
    double horizon = 0.0;                 // T_h
    std::vector<double> grid_times;
    std::vector<double> grid_norms;       // ||e^{tA}||_H at grid_times
};

// ---------------------------------------------------------------------------
class DelayProblem {
public:
    DelayProblem(GeneratorOperator generator, FeedbackOperator feedback,
                 GainFunction gain, DelayFunction delay, HistorySegment history,
                 std::optional<Nonlinearity> nonlinearity = std::nullopt);

    const GeneratorOperator& generator() const { return generator_; }
    const FeedbackOperator& feedback() const { return feedback_; }
    const GainFunction& gain() const { return gain_; }
    GainFunction& gain() { return gain_; }
    const DelayFunction& delay() const { return delay_; }
    const HistorySegment& history() const { return history_; }
    const std::optional<Nonlinearity>& nonlinearity() const { return nonlinearity_; }

    int dimension() const { return generator_.dimension(); }
    double tau_bar() const { return delay_.upper_bound(); }
    Vector initial_state() const { return history_.eval(0.0); }

    // Metric operator norm of B; the supplied value wins when present.
    double feedback_norm() const { return feedback_norm_; }

    double lipschitz() const {
        return nonlinearity_ ? nonlinearity_->lipschitz() : 0.0;
    }

    std::optional<SemigroupCertificate> certificate;

private:
    GeneratorOperator generator_;
    FeedbackOperator feedback_;
    GainFunction gain_;
    DelayFunction delay_;
    HistorySegment history_;
    std::optional<Nonlinearity> nonlinearity_;
    double feedback_norm_;
};

// ---------------------------------------------------------------------------
// Time-indexed state samples on [0, T] plus the history segment; the
// artifact's universal currency. Evaluation on [-tau_bar, 0] delegates to
// the history, on [0, T] interpolates stored states, outside is an error.
class Trajectory {
public:
    Trajectory(HistorySegment history, std::vector<double> times,
               std::vector<Vector> states,
               Interpolation interp = Interpolation::Linear,
               std::vector<Vector> derivatives = {});

    Vector eval(double t) const;

    double end_time() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<Vector>& states() const { return states_; }
    const HistorySegment& history() const { return history_; }
    int dimension() const { return history_.dimension(); }

private:
    HistorySegment history_;
    std::vector<double> times_;
    std::vector<Vector> states_;
    Interpolation interp_;
    std::vector<Vector> derivatives_; // CubicHermite only, one per node
};

namespace detail {
// Shared piecewise-interpolation helper: index i with times[i] <= t <= times[i+1].
size_t locate(const std::vector<double>& times, double t);
Vector interp_linear(const std::vector<double>& times, const std::vector<Vector>& values,
                     double t);
Vector interp_cubic(const std::vector<double>& times, const std::vector<Vector>& values,
                    const std::vector<Vector>* derivatives, double t);
} // namespace detail

} // namespace deq

#endif
