#include "deq/oracle.hpp"

#include <cmath>

#include "deq/solver.hpp" // SolverError only

namespace deq {

namespace {

// Hermite cubic on [ta, tb] from endpoint values/derivatives.
Vector hermite(double ta, const Vector& ya, const Vector& da, double tb,
               const Vector& yb, const Vector& db, double t) {
    double h = tb - ta;
    double s = (t - ta) / h;
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * ya + ((s3 - 2 * s2 + s) * h) * da +
           (-2 * s3 + 3 * s2) * yb + ((s3 - s2) * h) * db;
}

} // namespace

Trajectory oracle_solve(const DelayProblem& p, double T, double dt_fine) {
    if (T <= 0.0) throw std::invalid_argument("oracle horizon must be positive");
    if (dt_fine <= 0.0) throw std::invalid_argument("oracle step must be positive");

    const Matrix& A = p.generator().matrix();
    const Matrix& B = p.feedback().matrix();
    const GainFunction& k = p.gain();
    const DelayFunction& tau = p.delay();
    const Nonlinearity* G = p.nonlinearity() ? &*p.nonlinearity() : nullptr;

    const long N = std::max<long>(1, static_cast<long>(std::ceil(T / dt_fine - 1e-9)));
    const double h = T / N;

    std::vector<double> times(static_cast<size_t>(N) + 1);
    for (long i = 0; i <= N; ++i) times[static_cast<size_t>(i)] = T * (double(i) / N);
    times.back() = T;

    std::vector<Vector> ys, ds;
    ys.reserve(times.size());
    ds.reserve(times.size());

    // dense evaluation over everything accepted so far (index n = last node)
    auto past_eval = [&](double t, size_t n) -> Vector {
        if (t <= 0.0) return p.history().eval(t);
        double pos = t / h;
        size_t i = std::min<size_t>(n == 0 ? 0 : n - 1, static_cast<size_t>(pos));
        if (i >= n && n > 0) i = n - 1;
        return hermite(times[i], ys[i], ds[i], times[i + 1], ys[i + 1], ds[i + 1], t);
    };

    ys.push_back(p.initial_state());

    // derivative at t = 0 (delayed argument is in the history)
    {
        const Vector& y0 = ys[0];
        Vector d0 = A * y0 + k(0.0) * (B * p.history().eval(-tau(0.0)));
        if (G) d0 += (*G)(p.generator(), y0);
        ds.push_back(d0);
    }

    for (long n = 0; n < N; ++n) {
        const double t = times[static_cast<size_t>(n)];
        const Vector& yn = ys.back();
        const Vector& dn = ds.back();

        // local candidate polynomial endpoint; starts as a linear extension
        Vector yc = yn + h * dn;
        Vector dc = dn;

        Vector ynext, dnext;
        for (int sweep = 0; sweep < 2; ++sweep) {
            auto dense = [&](double s) -> Vector {
                if (s <= t + 1e-14 * (1.0 + T))
                    return past_eval(std::min(s, t), static_cast<size_t>(n));
                return hermite(t, yn, dn, t + h, yc, dc, std::min(s, t + h));
            };
            auto rhs = [&](double s, const Vector& y) -> Vector {
                Vector out = A * y + k(s) * (B * dense(s - tau(s)));
                if (G) out += (*G)(p.generator(), y);
                return out;
            };
            Vector s1 = rhs(t, yn);
            Vector s2 = rhs(t + 0.5 * h, yn + (0.5 * h) * s1);
            Vector s3 = rhs(t + 0.5 * h, yn + (0.5 * h) * s2);
            Vector s4 = rhs(t + h, yn + h * s3);
            ynext = yn + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
            dnext = rhs(t + h, ynext);
            yc = ynext;
            dc = dnext;
        }
        if (!ynext.allFinite())
            throw SolverError("oracle divergence: non-finite state, blow-up near t=" +
                              std::to_string(t + h));
        ys.push_back(std::move(ynext));
        ds.push_back(std::move(dnext));
    }

    return Trajectory(p.history(), std::move(times), std::move(ys),
                      Interpolation::CubicHermite, std::move(ds));
}

} // namespace deq
