#include "cbfmt/optimize.hpp"

#include <cmath>
#include <limits>

namespace cbfmt::opt {

MinimizeResult minimize_bfgs(const ValueGrad& fun, Eigen::VectorXd x, const MinimizeOptions& opts) {
    const Eigen::Index n = x.size();
    MinimizeResult res;
    Eigen::VectorXd g(n), g_new(n);
    double f = fun(x, g);
    if (n == 0) {
        res.x = x;
        res.f = f;
        res.converged = true;
        return res;
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;
    int stalls = 0;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        if (!std::isfinite(f)) break;
        if (g.lpNorm<Eigen::Infinity>() <= opts.gtol * std::max(1.0, std::abs(f))) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd d = -H * g;
        double slope = g.dot(d);
        if (slope >= 0) {
            H.setIdentity();
            fresh = true;
            d = -g;
            slope = g.dot(d);
        }
        // Armijo backtracking; the first step of a fresh H is limited to unit length
        double step = fresh ? std::min(1.0, 1.0 / d.norm()) : 1.0;
        Eigen::VectorXd x_new;
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * d;
            f_new = fun(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (fresh) break;
            H.setIdentity();
            fresh = true;
            continue;
        }
        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd y = g_new - g;
        double decrease = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh) H *= sy / y.squaredNorm();
            double r = 1.0 / sy;
            Eigen::VectorXd Hy = H * y;
            double yHy = y.dot(Hy);
            H += ((1.0 + r * yHy) * r) * (s * s.transpose()) - r * (Hy * s.transpose() + s * Hy.transpose());
            fresh = false;
        }
        if (decrease <= opts.ftol * std::max(1.0, std::abs(f))) {
            if (++stalls >= 5) {
                res.converged = true;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    res.x = x;
    res.f = f;
    res.iterations = it;
    return res;
}

static double max_abs(const Eigen::VectorXd& c) { return c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0; }

MinimizeResult minimize_augmented_lagrangian(const ValueGrad& fun, const ConstraintFn& cons, Eigen::VectorXd x,
                                             const ConstrainedOptions& opts) {
    Eigen::VectorXd c;
    cons(x, c, nullptr);
    const Eigen::Index m = c.size();
    if (m == 0) return minimize_bfgs(fun, x, opts.inner);

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    double rho = opts.rho0;
    double prev_viol = std::numeric_limits<double>::infinity();
    int total_it = 0;
    for (int outer = 0; outer < opts.max_outer; ++outer) {
        ValueGrad aug = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
            Eigen::VectorXd cz;
            Eigen::MatrixXd J;
            double v = fun(z, grad);
            cons(z, cz, &J);
            Eigen::VectorXd w = lambda + rho * cz;
            grad += J.transpose() * w;
            return v + lambda.dot(cz) + 0.5 * rho * cz.squaredNorm();
        };
        MinimizeResult inner = minimize_bfgs(aug, x, opts.inner);
        total_it += inner.iterations;
        x = inner.x;
        cons(x, c, nullptr);
        double viol = max_abs(c);
        if (viol <= opts.feas_tol) break;
        lambda += rho * c;
        if (viol > 0.25 * prev_viol) rho = std::min(rho * 10.0, opts.rho_max);
        prev_viol = viol;
    }

    // project onto the constraint manifold with minimum-norm Gauss-Newton steps
    for (int k = 0; k < opts.polish_steps; ++k) {
        Eigen::MatrixXd J;
        cons(x, c, &J);
        double viol = max_abs(c);
        if (viol <= 1e-14) break;
        Eigen::MatrixXd JJt = J * J.transpose();
        JJt.diagonal().array() += 1e-14 * std::max(1.0, JJt.diagonal().maxCoeff());
        Eigen::VectorXd step = J.transpose() * JJt.ldlt().solve(c);
        Eigen::VectorXd trial = x - step;
        Eigen::VectorXd ct;
        cons(trial, ct, nullptr);
        if (!(max_abs(ct) < viol)) break;
        x = trial;
    }

    MinimizeResult res;
    Eigen::VectorXd g(x.size());
    res.x = x;
    res.f = fun(x, g);
    cons(x, c, nullptr);
    res.max_violation = max_abs(c);
    res.iterations = total_it;
    res.converged = true;
    return res;
}

ValueGrad with_forward_differences(std::function<double(const Eigen::VectorXd&)> f, double h) {
    return [f = std::move(f), h](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        double f0 = f(x);
        grad.resize(x.size());
        Eigen::VectorXd xp = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h;
            grad[i] = (f(xp) - f0) / h;
            xp[i] = x[i];
        }
        return f0;
    };
}

} // namespace cbfmt::opt
