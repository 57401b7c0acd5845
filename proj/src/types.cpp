#include "deq/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace deq {

namespace detail {

size_t locate(const std::vector<double>& times, double t) {
    // index i with times[i] <= t, i < size-1
    auto it = std::upper_bound(times.begin(), times.end(), t);
    size_t i = (it == times.begin()) ? 0 : static_cast<size_t>(it - times.begin() - 1);
    if (i >= times.size() - 1) i = times.size() - 2;
    return i;
}

Vector interp_linear(const std::vector<double>& times, const std::vector<Vector>& values,
                     double t) {
    size_t i = locate(times, t);
    double h = times[i + 1] - times[i];
    double w = (t - times[i]) / h;
    if (w <= 0.0) return values[i];
    if (w >= 1.0) return values[i + 1];
    return (1.0 - w) * values[i] + w * values[i + 1];
}

Vector interp_cubic(const std::vector<double>& times, const std::vector<Vector>& values,
                    const std::vector<Vector>* derivatives, double t) {
    size_t i = locate(times, t);
    double h = times[i + 1] - times[i];
    double s = (t - times[i]) / h;
    if (s <= 0.0) return values[i];
    if (s >= 1.0) return values[i + 1];

    Vector m0, m1;
    if (derivatives && !derivatives->empty()) {
        m0 = (*derivatives)[i];
        m1 = (*derivatives)[i + 1];
    } else {
        // Catmull-Rom slopes, one-sided at the ends.
        auto slope = [&](size_t j) -> Vector {
            if (j == 0)
                return (values[1] - values[0]) / (times[1] - times[0]);
            if (j == times.size() - 1)
                return (values[j] - values[j - 1]) / (times[j] - times[j - 1]);
            return (values[j + 1] - values[j - 1]) / (times[j + 1] - times[j - 1]);
        };
        m0 = slope(i);
        m1 = slope(i + 1);
    }
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1;
    double h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2;
    double h11 = s3 - s2;
    return h00 * values[i] + (h10 * h) * m0 + h01 * values[i + 1] + (h11 * h) * m1;
}

} // namespace detail

// --------------------------------------------------------------------------
// DelayFunction

DelayFunction DelayFunction::constant(double tau) {
    if (tau <= 0.0) throw std::invalid_argument("constant delay must be positive");
    DelayFunction d(Kind::Constant, tau, tau);
    d.constant_value_ = tau;
    return d;
}

DelayFunction DelayFunction::grid(std::vector<double> times, std::vector<double> values,
                                  double tau_bar, double tau_min) {
    if (tau_bar <= 0.0) throw std::invalid_argument("tau_bar must be positive");
    if (times.size() < 2 || times.size() != values.size())
        throw std::invalid_argument("delay grid needs matching times/values, >= 2 nodes");
    if (!std::is_sorted(times.begin(), times.end()))
        throw std::invalid_argument("delay grid times must be increasing");
    DelayFunction d(Kind::Grid, tau_bar, tau_min);
    d.grid_times_ = std::move(times);
    d.grid_values_ = std::move(values);
    return d;
}

DelayFunction DelayFunction::closed_form(const std::string& expr, double tau_bar,
                                         double tau_min) {
    if (tau_bar <= 0.0) throw std::invalid_argument("tau_bar must be positive");
    DelayFunction d(Kind::ClosedForm, tau_bar, tau_min);
    d.expr_ = Expression::parse(expr, "t");
    return d;
}

double DelayFunction::operator()(double t) const {
    double v = 0.0;
    switch (kind_) {
    case Kind::Constant:
        v = constant_value_;
        break;
    case Kind::Grid: {
        if (t <= grid_times_.front()) v = grid_values_.front();
        else if (t >= grid_times_.back()) v = grid_values_.back();
        else {
            size_t i = detail::locate(grid_times_, t);
            double w = (t - grid_times_[i]) / (grid_times_[i + 1] - grid_times_[i]);
            v = (1.0 - w) * grid_values_[i] + w * grid_values_[i + 1];
        }
        break;
    }
    case Kind::ClosedForm:
        v = (*expr_)(t);
        break;
    }
    const double slack = 1e-12 * (1.0 + tau_bar_);
    if (!(v >= -slack && v <= tau_bar_ + slack))
        throw std::domain_error("delay evaluation outside [0, tau_bar] at t=" +
                                std::to_string(t));
    if (tau_min_ > 0.0 && v < tau_min_ - slack)
        throw std::domain_error("delay evaluation below declared tau_min at t=" +
                                std::to_string(t));
    return std::clamp(v, 0.0, tau_bar_);
}

// --------------------------------------------------------------------------
// GainFunction

GainFunction GainFunction::constant(double k) {
    GainFunction g(Kind::Constant);
    g.constant_value_ = k;
    return g;
}

GainFunction GainFunction::piecewise_constant(std::vector<double> times,
                                              std::vector<double> values) {
    if (values.size() != times.size() + 1)
        throw std::invalid_argument("piecewise-constant gain needs values.size() == times.size()+1");
    if (!std::is_sorted(times.begin(), times.end()))
        throw std::invalid_argument("gain breakpoints must be sorted");
    GainFunction g(Kind::PiecewiseConstant);
    g.times_ = std::move(times);
    g.values_ = std::move(values);
    return g;
}

GainFunction GainFunction::grid(std::vector<double> times, std::vector<double> values) {
    if (times.size() < 2 || times.size() != values.size())
        throw std::invalid_argument("gain grid needs matching times/values, >= 2 nodes");
    if (!std::is_sorted(times.begin(), times.end()))
        throw std::invalid_argument("gain grid times must be increasing");
    GainFunction g(Kind::Grid);
    g.times_ = std::move(times);
    g.values_ = std::move(values);
    return g;
}

GainFunction GainFunction::closed_form(const std::string& expr) {
    GainFunction g(Kind::ClosedForm);
    g.expr_ = Expression::parse(expr, "t");
    return g;
}

double GainFunction::operator()(double t) const {
    switch (kind_) {
    case Kind::Constant:
        return constant_value_;
    case Kind::PiecewiseConstant: {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        return values_[static_cast<size_t>(it - times_.begin())];
    }
    case Kind::Grid: {
        if (t <= times_.front()) return values_.front();
        if (t >= times_.back()) return values_.back();
        size_t i = detail::locate(times_, t);
        double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
        return (1.0 - w) * values_[i] + w * values_[i + 1];
    }
    case Kind::ClosedForm:
        return (*expr_)(t);
    }
    return 0.0;
}

namespace {

// integral of |linear through (a,va),(b,vb)| over [a,b], splitting at the
// sign crossing when there is one.
double abs_linear_integral(double a, double b, double va, double vb) {
    if (a >= b) return 0.0;
    if (va * vb >= 0.0)
        return 0.5 * (std::abs(va) + std::abs(vb)) * (b - a);
    double tc = a + (b - a) * va / (va - vb);
    return 0.5 * std::abs(va) * (tc - a) + 0.5 * std::abs(vb) * (b - tc);
}

} // namespace

double GainFunction::integral_abs(double a, double b) const {
    if (b <= a) return 0.0;
    switch (kind_) {
    case Kind::Constant:
        return std::abs(constant_value_) * (b - a);
    case Kind::PiecewiseConstant: {
        double total = 0.0;
        double left = a;
        for (size_t i = 0; i < times_.size(); ++i) {
            if (times_[i] <= a) continue;
            if (times_[i] >= b) break;
            total += std::abs((*this)(0.5 * (left + times_[i]))) * (times_[i] - left);
            left = times_[i];
        }
        total += std::abs((*this)(0.5 * (left + b))) * (b - left);
        return total;
    }
    case Kind::Grid: {
        double total = 0.0;
        double left = a;
        double vleft = (*this)(a);
        for (size_t i = 0; i < times_.size(); ++i) {
            if (times_[i] <= a) continue;
            if (times_[i] >= b) break;
            total += abs_linear_integral(left, times_[i], vleft, values_[i]);
            left = times_[i];
            vleft = values_[i];
        }
        total += abs_linear_integral(left, b, vleft, (*this)(b));
        return total;
    }
    case Kind::ClosedForm: {
        // Composite Simpson on a fine fixed subdivision. |.| kinks cost an
        // order locally; the panel count keeps the error well under 1e-8 for
        // the gains this artifact targets.
        const int panels = 4096; // even
        double h = (b - a) / panels;
        double sum = std::abs((*expr_)(a)) + std::abs((*expr_)(b));
        for (int i = 1; i < panels; ++i)
            sum += (i % 2 ? 4.0 : 2.0) * std::abs((*expr_)(a + i * h));
        return sum * h / 3.0;
    }
    }
    return 0.0;
}

std::vector<double> GainFunction::breakpoints_in(double a, double b) const {
    std::vector<double> out;
    if (kind_ == Kind::PiecewiseConstant || kind_ == Kind::Grid) {
        for (double t : times_)
            if (t > a && t < b) out.push_back(t);
    }
    return out;
}

// --------------------------------------------------------------------------
// GeneratorOperator

GeneratorOperator::GeneratorOperator(Matrix A)
    : A_(std::move(A)), identity_metric_(true) {
    if (A_.rows() != A_.cols() || A_.rows() == 0)
        throw std::invalid_argument("generator matrix must be square and nonempty");
    metric_ = Matrix::Identity(A_.rows(), A_.cols());
    chol_L_ = metric_;
}

GeneratorOperator::GeneratorOperator(Matrix A, Matrix metric)
    : A_(std::move(A)), metric_(std::move(metric)) {
    if (A_.rows() != A_.cols() || A_.rows() == 0)
        throw std::invalid_argument("generator matrix must be square and nonempty");
    if (metric_.rows() != A_.rows() || metric_.cols() != A_.cols())
        throw std::invalid_argument("metric dimension mismatch");
    if (!metric_.isApprox(metric_.transpose(), 1e-12))
        throw std::invalid_argument("metric must be symmetric");
    Eigen::LLT<Matrix> llt(metric_);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("metric must be positive definite (Cholesky failed)");
    chol_L_ = llt.matrixL();
    identity_metric_ = metric_.isIdentity(0.0);
}

double GeneratorOperator::norm(const Vector& x) const {
    if (x.size() != A_.rows())
        throw std::invalid_argument("metric_norm: dimension mismatch");
    if (identity_metric_) return x.norm();
    return std::sqrt(std::max(0.0, x.dot(metric_ * x)));
}

double GeneratorOperator::operator_norm(const Matrix& C) const {
    if (C.rows() != A_.rows() || C.cols() != A_.cols())
        throw std::invalid_argument("operator_norm: dimension mismatch");
    Matrix W;
    if (identity_metric_) {
        W = C;
    } else {
        // W = L' C L^{-T}, via the lower solve L W' = C' L
        W = chol_L_.triangularView<Eigen::Lower>()
                .solve(C.transpose() * chol_L_)
                .transpose();
    }
    Eigen::BDCSVD<Matrix> svd(W);
    return svd.singularValues()(0);
}

// --------------------------------------------------------------------------
// Nonlinearity

Nonlinearity Nonlinearity::saturating(double lipschitz) {
    if (lipschitz < 0.0) throw std::invalid_argument("lipschitz constant must be >= 0");
    Nonlinearity n(lipschitz);
    n.saturating_ = true;
    return n;
}

Nonlinearity Nonlinearity::closed_form(const std::string& expr, double lipschitz) {
    if (lipschitz < 0.0) throw std::invalid_argument("lipschitz constant must be >= 0");
    Nonlinearity n(lipschitz);
    n.expr_ = Expression::parse(expr, "u");
    if ((*n.expr_)(0.0) != 0.0)
        throw std::invalid_argument("nonlinearity must satisfy G(0) = 0");
    return n;
}

Vector Nonlinearity::operator()(const GeneratorOperator& g, const Vector& u) const {
    if (saturating_)
        return (lipschitz_ / (1.0 + g.norm(u))) * u;
    Vector out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = (*expr_)(u[i]);
    return out;
}

// --------------------------------------------------------------------------
// HistorySegment

HistorySegment::HistorySegment(std::vector<double> times, std::vector<Vector> values,
                               Interpolation interp)
    : times_(std::move(times)), values_(std::move(values)), interp_(interp) {
    if (times_.size() < 2)
        throw std::invalid_argument("history needs at least two nodes");
    if (times_.size() != values_.size())
        throw std::invalid_argument("history times/values size mismatch");
    if (times_.back() != 0.0)
        throw std::invalid_argument("history grid must end at t = 0");
    if (times_.front() >= 0.0)
        throw std::invalid_argument("history grid must start at -tau_bar < 0");
    for (size_t i = 1; i < times_.size(); ++i)
        if (times_[i] <= times_[i - 1])
            throw std::invalid_argument("history grid times must be strictly increasing");
    auto dim = values_.front().size();
    for (const auto& v : values_)
        if (v.size() != dim)
            throw std::invalid_argument("history values must share one dimension");
}

HistorySegment HistorySegment::constant(const Vector& value, double tau_bar) {
    if (tau_bar <= 0.0) throw std::invalid_argument("tau_bar must be positive");
    return HistorySegment({-tau_bar, 0.0}, {value, value});
}

Vector HistorySegment::eval(double t) const {
    const double slack = 1e-9 * (1.0 + tau_bar());
    if (t < times_.front() - slack || t > slack)
        throw std::domain_error("history evaluation outside [-tau_bar, 0]: t=" +
                                std::to_string(t));
    t = std::clamp(t, times_.front(), 0.0);
    if (interp_ == Interpolation::Linear)
        return detail::interp_linear(times_, values_, t);
    return detail::interp_cubic(times_, values_, nullptr, t);
}

// --------------------------------------------------------------------------
// DelayProblem

DelayProblem::DelayProblem(GeneratorOperator generator, FeedbackOperator feedback,
                           GainFunction gain, DelayFunction delay,
                           HistorySegment history,
                           std::optional<Nonlinearity> nonlinearity)
    : generator_(std::move(generator)), feedback_(std::move(feedback)),
      gain_(std::move(gain)), delay_(std::move(delay)), history_(std::move(history)),
      nonlinearity_(std::move(nonlinearity)) {
    int n = generator_.dimension();
    if (feedback_.matrix().rows() != n || feedback_.matrix().cols() != n)
        throw std::invalid_argument("feedback operator dimension mismatch");
    if (history_.dimension() != n)
        throw std::invalid_argument("history dimension mismatch");
    double span = history_.tau_bar();
    if (std::abs(span - delay_.upper_bound()) > 1e-9 * (1.0 + span))
        throw std::invalid_argument("history grid must span exactly [-tau_bar, 0]");
    feedback_norm_ = feedback_.supplied_norm()
                         ? *feedback_.supplied_norm()
                         : generator_.operator_norm(feedback_.matrix());
}

// --------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(HistorySegment history, std::vector<double> times,
                       std::vector<Vector> states, Interpolation interp,
                       std::vector<Vector> derivatives)
    : history_(std::move(history)), times_(std::move(times)),
      states_(std::move(states)), interp_(interp),
      derivatives_(std::move(derivatives)) {
    if (times_.empty() || times_.size() != states_.size())
        throw std::invalid_argument("trajectory times/states size mismatch");
    if (times_.front() != 0.0)
        throw std::invalid_argument("trajectory grid must start at t = 0");
    for (size_t i = 1; i < times_.size(); ++i)
        if (times_[i] <= times_[i - 1])
            throw std::invalid_argument("trajectory grid must be strictly increasing");
    Vector u0 = history_.eval(0.0);
    if ((states_.front() - u0).norm() > 1e-9 * (1.0 + u0.norm()))
        throw std::invalid_argument("trajectory must anchor at the history value U0 = f(0)");
    if (!derivatives_.empty() && derivatives_.size() != states_.size())
        throw std::invalid_argument("trajectory derivative count mismatch");
}

Vector Trajectory::eval(double t) const {
    const double slack = 1e-9 * (1.0 + end_time() + history_.tau_bar());
    if (t < 0.0)
        return history_.eval(t); // history owns its own domain check
    if (t > end_time() + slack)
        throw std::domain_error("trajectory evaluation beyond stored range: t=" +
                                std::to_string(t));
    t = std::min(t, end_time());
    if (times_.size() == 1) return states_.front();
    if (interp_ == Interpolation::Linear)
        return detail::interp_linear(times_, states_, t);
    return detail::interp_cubic(times_, states_, derivatives_.empty() ? nullptr : &derivatives_, t);
}

} // namespace deq
