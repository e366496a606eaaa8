#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cluslasso {

struct LassoOptions {
    int max_sweeps = 100000;
    double tol = 1e-7;       // max relative coefficient change per sweep
    double kkt_tol = 1e-6;
    bool center = false;     // subtract column/response means before solving
};

struct LassoFit {
    double lambda = 0.0;
    Eigen::VectorXd beta;
    double objective = 0.0;  // ||y - X beta||^2 / n + lambda ||beta||_1
    int iterations = 0;      // full coordinate sweeps
    double kkt_residual = 0.0;
    bool converged = false;
};

namespace detail {

// Stationarity violation of beta for the lasso objective, using gradient
// g_j = 2 x_j' r / n: active coordinates must match lambda * sign(beta_j),
// inactive ones must stay inside [-lambda, lambda].
inline double lasso_kkt_residual(const Eigen::MatrixXd& x, const Eigen::VectorXd& residual,
                                 const Eigen::VectorXd& beta, double lambda) {
    const double n = static_cast<double>(x.rows());
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double g = 2.0 * x.col(j).dot(residual) / n;
        const double viol = beta(j) == 0.0
                                ? std::max(0.0, std::abs(g) - lambda)
                                : std::abs(g - lambda * (beta(j) > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, viol);
    }
    return worst;
}

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

}  // namespace detail

/// Smallest penalty level at which the all-zero solution is optimal.
inline double lambda_max_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const double n = static_cast<double>(x.rows());
    return (2.0 * (x.transpose() * y) / n).cwiseAbs().maxCoeff();
}

/// Cyclic coordinate descent for
///   ||y - X beta||_2^2 / n + lambda ||beta||_1
/// with exact univariate soft-threshold updates. Declares convergence once
/// the per-sweep relative coefficient change drops below tol and the KKT
/// conditions hold within kkt_tol; otherwise returns the last iterate with
/// `converged` unset and the residual stationarity gap reported.
inline LassoFit lasso_cd(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y_in, double lambda,
                         const LassoOptions& opts = {},
                         const Eigen::VectorXd* warm_start = nullptr) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    if (y_in.size() != x_in.rows()) throw std::invalid_argument("response length must match rows");

    Eigen::MatrixXd x_centered;
    Eigen::VectorXd y_centered;
    if (opts.center) {
        x_centered = x_in.rowwise() - x_in.colwise().mean();
        y_centered = y_in.array() - y_in.mean();
    }
    const Eigen::MatrixXd& x = opts.center ? x_centered : x_in;
    const Eigen::VectorXd& y = opts.center ? y_centered : y_in;

    const Eigen::Index p = x.cols();
    const double n = static_cast<double>(x.rows());
    const Eigen::VectorXd col_sq = x.colwise().squaredNorm() / n;

    LassoFit fit;
    fit.lambda = lambda;
    fit.beta = (warm_start != nullptr && warm_start->size() == p) ? *warm_start
                                                                  : Eigen::VectorXd::Zero(p);
    Eigen::VectorXd residual = y - x * fit.beta;

    const double half_lambda = lambda / 2.0;
    int sweeps = 0;
    while (sweeps < opts.max_sweeps) {
        ++sweeps;
        double max_change = 0.0;
        double max_beta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (col_sq(j) == 0.0) continue;
            const double old = fit.beta(j);
            const double z = x.col(j).dot(residual) / n + col_sq(j) * old;
            const double updated = detail::soft_threshold(z, half_lambda) / col_sq(j);
            if (updated != old) {
                residual.noalias() -= (updated - old) * x.col(j);
                fit.beta(j) = updated;
            }
            max_change = std::max(max_change, std::abs(updated - old));
            max_beta = std::max(max_beta, std::abs(updated));
        }
        if (max_change / std::max(1.0, max_beta) < opts.tol) {
            residual = y - x * fit.beta;  // drop accumulated update drift
            fit.kkt_residual = detail::lasso_kkt_residual(x, residual, fit.beta, lambda);
            if (fit.kkt_residual <= opts.kkt_tol) {
                fit.converged = true;
                break;
            }
        }
    }
    fit.iterations = sweeps;
    residual = y - x * fit.beta;
    fit.kkt_residual = detail::lasso_kkt_residual(x, residual, fit.beta, lambda);
    fit.converged = fit.converged && fit.kkt_residual <= opts.kkt_tol;
    fit.objective = residual.squaredNorm() / n + lambda * fit.beta.lpNorm<1>();
    return fit;
}

struct PathResult {
    Eigen::VectorXd lambdas;       // strictly decreasing
    std::vector<LassoFit> fits;
    std::vector<int> warm_from;    // index of the fit each solve was warm-started from, -1 if cold
};

/// Log-spaced penalty grid from lambda_max down to lambda_max * min_ratio.
/// Degenerates to the single value 0 when lambda_max is 0.
inline Eigen::VectorXd penalty_grid(double lambda_max, int n_lambda, double min_ratio) {
    if (n_lambda < 2) throw std::invalid_argument("grid needs at least two values");
    if (!(min_ratio > 0.0 && min_ratio < 1.0))
        throw std::invalid_argument("min_ratio must lie in (0, 1)");
    if (lambda_max <= 0.0) return Eigen::VectorXd::Zero(1);
    Eigen::VectorXd grid(n_lambda);
    const double log_max = std::log(lambda_max);
    const double log_min = std::log(lambda_max * min_ratio);
    for (int i = 0; i < n_lambda; ++i)
        grid(i) = std::exp(log_max + (log_min - log_max) * i / (n_lambda - 1));
    return grid;
}

/// Warm-started regularization path over a log-spaced grid.
inline PathResult lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             int n_lambda = 100, double lambda_min_ratio = 1e-3,
                             const LassoOptions& opts = {}) {
    PathResult path;
    path.lambdas = penalty_grid(lambda_max_lasso(x, y), n_lambda, lambda_min_ratio);
    path.fits.reserve(static_cast<std::size_t>(path.lambdas.size()));
    path.warm_from.reserve(static_cast<std::size_t>(path.lambdas.size()));
    for (Eigen::Index i = 0; i < path.lambdas.size(); ++i) {
        const Eigen::VectorXd* warm = i > 0 ? &path.fits.back().beta : nullptr;
        path.fits.push_back(lasso_cd(x, y, path.lambdas(i), opts, warm));
        path.warm_from.push_back(static_cast<int>(i) - 1);
    }
    return path;
}

}  // namespace cluslasso
