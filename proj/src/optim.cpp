#include <qdent/optim.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qdent::optim {
namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;

struct LinePoint {
    double alpha;
    double value;
    double slope;
    Eigen::VectorXd grad;
};

LinePoint evaluate(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                   double alpha)
{
    Eigen::VectorXd g(x.size());
    const double v = f(x + alpha * p, &g);
    return {alpha, v, g.dot(p), std::move(g)};
}

double interpolate(const LinePoint& lo, const LinePoint& hi)
{
    // Minimiser of the quadratic through (lo.value, lo.slope) and hi.value,
    // safeguarded into the interior of the bracket.
    const double d = hi.alpha - lo.alpha;
    const double denom = 2.0 * (hi.value - lo.value - lo.slope * d);
    double t = 0.5;
    if (denom > 0 && std::isfinite(denom)) t = -lo.slope * d * d / denom / d;
    t = std::clamp(t, 0.1, 0.9);
    return lo.alpha + t * d;
}

// Strong-Wolfe line search (bracketing phase followed by zoom).
LinePoint line_search(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                      double f0, double slope0, double alpha_init)
{
    const LinePoint origin{0.0, f0, slope0, {}};
    LinePoint prev = origin;
    double alpha = alpha_init;

    auto zoom = [&](LinePoint lo, LinePoint hi) {
        for (int k = 0; k < 60; ++k) {
            LinePoint trial = evaluate(f, x, p, interpolate(lo, hi));
            if (!std::isfinite(trial.value) || trial.value > f0 + kC1 * trial.alpha * slope0
                || trial.value >= lo.value) {
                hi = trial;
            } else {
                if (std::abs(trial.slope) <= -kC2 * slope0) return trial;
                if (trial.slope * (hi.alpha - lo.alpha) >= 0) hi = lo;
                lo = trial;
            }
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
        }
        return lo;
    };

    for (int k = 0; k < 60; ++k) {
        LinePoint cur = evaluate(f, x, p, alpha);
        if (!std::isfinite(cur.value)) {
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        }
        if (cur.value > f0 + kC1 * alpha * slope0 || (k > 0 && cur.value >= prev.value))
            return zoom(prev, cur);
        if (std::abs(cur.slope) <= -kC2 * slope0) return cur;
        if (cur.slope >= 0) return zoom(cur, prev);
        prev = cur;
        alpha *= 2.0;
    }
    return prev;
}

} // namespace

BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x, const BfgsOptions& options)
{
    const Eigen::Index n = x.size();
    Eigen::VectorXd g(n);
    double fx = f(x, &g);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);

    BfgsResult result;
    int stalls = 0;
    for (int it = 0; it < options.max_iterations; ++it) {
        result.iterations = it;
        if (g.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
            result.converged = true;
            result.message = "gradient tolerance reached";
            break;
        }
        Eigen::VectorXd p = -hinv * g;
        double slope = g.dot(p);
        if (!(slope < 0)) {
            hinv.setIdentity();
            p = -g;
            slope = g.dot(p);
        }
        const double alpha0 = it == 0 ? std::min(1.0, 1.0 / std::max(1e-12, g.norm())) : 1.0;
        LinePoint step = line_search(f, x, p, fx, slope, alpha0);
        if (step.alpha == 0.0) {
            // No acceptable step: the objective is flat to machine precision.
            result.converged = std::abs(slope) <= 1e-12 * std::max(1.0, std::abs(fx));
            result.message = "line search made no progress";
            break;
        }

        const Eigen::VectorXd s = step.alpha * p;
        const Eigen::VectorXd y = step.grad - g;
        const double f_prev = fx;
        x += s;
        fx = step.value;
        g = step.grad;

        const double sy = s.dot(y);
        if (sy > 1e-300) {
            if (it == 0) hinv *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
            hinv = left * hinv * left.transpose() + rho * s * s.transpose();
        }

        if (std::abs(f_prev - fx) <= options.f_rel_tol * std::max(1.0, std::abs(fx))) {
            if (++stalls >= 2) {
                result.converged = true;
                result.message = "relative objective change below tolerance";
                result.iterations = it + 1;
                break;
            }
        } else {
            stalls = 0;
        }
        result.iterations = it + 1;
    }
    if (!result.converged && result.message.empty()) result.message = "iteration limit reached";
    result.x = std::move(x);
    result.value = fx;
    return result;
}

Objective with_numeric_gradient(std::function<double(const Eigen::VectorXd&)> f, double step)
{
    return [f = std::move(f), step](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        if (grad) {
            grad->resize(x.size());
            Eigen::VectorXd xp = x;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double h = step * std::max(1.0, std::abs(x[i]));
                xp[i] = x[i] + h;
                const double fp = f(xp);
                xp[i] = x[i] - h;
                const double fm = f(xp);
                xp[i] = x[i];
                (*grad)[i] = (fp - fm) / (2 * h);
            }
        }
        return f(x);
    };
}

LeastSquaresResult levenberg_marquardt(const Residuals& r, Eigen::VectorXd x,
                                       const LeastSquaresOptions& options)
{
    const Eigen::Index n = x.size();
    auto jacobian = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& r0) {
        Eigen::MatrixXd j(r0.size(), n);
        Eigen::VectorXd xp = at;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double h = 1e-7 * std::max(1.0, std::abs(at[i]));
            xp[i] = at[i] + h;
            j.col(i) = (r(xp) - r0) / h;
            xp[i] = at[i];
        }
        return j;
    };

    LeastSquaresResult out;
    Eigen::VectorXd res = r(x);
    double chi2 = res.squaredNorm();
    double lambda = 1e-3;
    Eigen::MatrixXd j = jacobian(x, res);

    for (int it = 0; it < options.max_iterations; ++it) {
        out.iterations = it + 1;
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd jtr = j.transpose() * res;
        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd dx = a.ldlt().solve(-jtr);
            const Eigen::VectorXd xn = x + dx;
            const Eigen::VectorXd rn = r(xn);
            const double chi2n = rn.squaredNorm();
            if (std::isfinite(chi2n) && chi2n <= chi2) {
                const double rel = (chi2 - chi2n) / std::max(chi2, 1e-300);
                x = xn;
                res = rn;
                chi2 = chi2n;
                lambda = std::max(lambda / 10, 1e-12);
                improved = true;
                if (rel < options.rel_tol || dx.norm() < 1e-14 * (1 + x.norm())) out.converged = true;
                break;
            }
            lambda *= 10;
        }
        if (!improved) {
            // Already at a minimum within floating-point resolution.
            out.converged = true;
        }
        if (out.converged) break;
        j = jacobian(x, res);
    }

    j = jacobian(x, res);
    const Eigen::Index dof = std::max<Eigen::Index>(1, res.size() - n);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    out.covariance = jtj.completeOrthogonalDecomposition().pseudoInverse() * (chi2 / dof);
    out.chi2 = chi2;
    out.x = x;
    return out;
}

} // namespace qdent::optim
