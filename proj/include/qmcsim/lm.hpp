#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qmcsim {

struct LmOptions {
    int max_iterations = 200;
    double relative_step_tol = 1e-8;
    double damping_init = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.1;
    double jacobian_rel_step = 1e-6;
    // Per-parameter magnitude hints; used for Jacobian steps and the
    // relative-step convergence test. Defaults to max(|p|, 1).
    std::vector<double> scales;
};

struct LmFit {
    std::vector<double> params;
    std::vector<double> sigmas;       // NaN when the covariance is singular
    bool converged = false;
    bool covariance_ok = false;
    double residual_norm = 0.0;       // sqrt of the weighted SSE at the optimum
    int iterations = 0;
    // Weighted SSE after each accepted step (including the initial value);
    // never increases by construction.
    std::vector<double> cost_history;
};

namespace detail {

// Gauss-Jordan inverse with partial pivoting; returns false when singular.
inline bool invert_in_place(std::vector<std::vector<double>>& a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[pivot], a[col]);
        std::swap(inv[pivot], inv[col]);
        const double d = a[col][col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    a = std::move(inv);
    return true;
}

inline bool solve_linear(std::vector<std::vector<double>> a,
                         std::vector<double> b, std::vector<double>& x) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
        x[ri] = s / a[ri][ri];
    }
    return true;
}

}  // namespace detail

// Levenberg-Marquardt on a scalar model y = f(params, x) with per-point
// weights (1/variance). Numeric central-difference Jacobian. A step is
// accepted only if the weighted SSE decreases, so cost_history is
// monotone non-increasing.
inline LmFit levenberg_marquardt(
    const std::function<double(const std::vector<double>&, double)>& model,
    const std::vector<double>& xs, const std::vector<double>& ys,
    const std::vector<double>& weights, std::vector<double> p0,
    const LmOptions& opt = {}) {
    const std::size_t n = xs.size();
    const std::size_t np = p0.size();
    if (ys.size() != n || weights.size() != n) {
        throw std::invalid_argument("levenberg_marquardt: size mismatch");
    }
    if (n < np) {
        throw std::invalid_argument("levenberg_marquardt: underdetermined fit");
    }

    auto scale_of = [&](const std::vector<double>& p, std::size_t j) {
        if (j < opt.scales.size() && opt.scales[j] > 0.0) return opt.scales[j];
        return std::max(std::abs(p[j]), 1.0);
    };

    auto cost_of = [&](const std::vector<double>& p) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - model(p, xs[i]);
            c += weights[i] * r * r;
        }
        return c;
    };

    auto build_normal_eqs = [&](const std::vector<double>& p,
                                std::vector<std::vector<double>>& jtj,
                                std::vector<double>& jtr) {
        std::vector<std::vector<double>> jac(n, std::vector<double>(np));
        for (std::size_t j = 0; j < np; ++j) {
            const double h = opt.jacobian_rel_step * scale_of(p, j);
            std::vector<double> pl = p, ph = p;
            pl[j] -= h;
            ph[j] += h;
            for (std::size_t i = 0; i < n; ++i) {
                jac[i][j] = (model(ph, xs[i]) - model(pl, xs[i])) / (2.0 * h);
            }
        }
        jtj.assign(np, std::vector<double>(np, 0.0));
        jtr.assign(np, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - model(p, xs[i]);
            for (std::size_t a = 0; a < np; ++a) {
                jtr[a] += weights[i] * jac[i][a] * r;
                for (std::size_t b = a; b < np; ++b) {
                    jtj[a][b] += weights[i] * jac[i][a] * jac[i][b];
                }
            }
        }
        for (std::size_t a = 0; a < np; ++a) {
            for (std::size_t b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];
        }
    };

    LmFit fit;
    fit.params = std::move(p0);
    double cost = cost_of(fit.params);
    fit.cost_history.push_back(cost);
    double damping = opt.damping_init;

    std::vector<std::vector<double>> jtj;
    std::vector<double> jtr;
    bool eqs_fresh = false;

    for (int it = 0; it < opt.max_iterations; ++it) {
        fit.iterations = it + 1;
        if (!eqs_fresh) {
            build_normal_eqs(fit.params, jtj, jtr);
            eqs_fresh = true;
        }
        auto damped = jtj;
        for (std::size_t a = 0; a < np; ++a) {
            damped[a][a] += damping * std::max(jtj[a][a], 1e-300);
        }
        std::vector<double> step;
        if (!detail::solve_linear(damped, jtr, step)) {
            damping *= opt.damping_up;
            if (damping > 1e12) break;
            continue;
        }
        std::vector<double> trial = fit.params;
        for (std::size_t a = 0; a < np; ++a) trial[a] += step[a];
        const double trial_cost = cost_of(trial);
        if (trial_cost < cost) {
            double rel_step = 0.0;
            for (std::size_t a = 0; a < np; ++a) {
                rel_step = std::max(rel_step,
                                    std::abs(step[a]) / scale_of(fit.params, a));
            }
            fit.params = std::move(trial);
            cost = trial_cost;
            fit.cost_history.push_back(cost);
            damping = std::max(damping * opt.damping_down, 1e-12);
            eqs_fresh = false;
            if (rel_step < opt.relative_step_tol) {
                fit.converged = true;
                break;
            }
        } else {
            damping *= opt.damping_up;
            if (damping > 1e12) {
                // Cannot descend further; treat the current point as final.
                fit.converged = true;
                break;
            }
        }
    }

    fit.residual_norm = std::sqrt(cost);
    build_normal_eqs(fit.params, jtj, jtr);
    fit.sigmas.assign(np, std::numeric_limits<double>::quiet_NaN());
    if (detail::invert_in_place(jtj)) {
        fit.covariance_ok = true;
        for (std::size_t a = 0; a < np; ++a) {
            fit.sigmas[a] = jtj[a][a] > 0.0
                                ? std::sqrt(jtj[a][a])
                                : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return fit;
}

}  // namespace qmcsim
