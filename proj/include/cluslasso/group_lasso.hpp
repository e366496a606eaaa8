#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cluslasso/clustering.hpp"
#include "cluslasso/lasso.hpp"
#include "cluslasso/linalg.hpp"

namespace cluslasso {

struct GroupLassoOptions {
    int max_sweeps = 100000;
    double tol = 1e-7;
    double kkt_tol = 1e-6;
};

struct GroupLassoFit {
    double lambda = 0.0;
    Eigen::VectorXd beta;
    Eigen::VectorXd group_norms;        // ||X^(G_r) beta_r||_2 / sqrt(n) per group
    std::vector<char> active_groups;
    int iterations = 0;
    double kkt_residual = 0.0;
    bool converged = false;
    double objective = 0.0;
};

inline Eigen::VectorXd default_group_weights(const Partition& part) {
    Eigen::VectorXd w(part.q());
    for (int r = 0; r < part.q(); ++r)
        w(r) = std::sqrt(static_cast<double>(part.groups[static_cast<std::size_t>(r)].size()));
    return w;
}

/// Group lasso with the groupwise prediction penalty,
///   ||y - X beta||_2^2 / n + lambda sum_r w_r ||X^(G_r) beta_r||_2 / sqrt(n).
///
/// Each group is reparameterized through the square root of its empirical
/// covariance block, which turns the block update into a closed-form group
/// soft threshold. Singular blocks (group size above n, collinear columns)
/// use the pseudo-inverse square root; coefficients outside the retained
/// spectrum stay at zero. The per-group whitening is precomputed once, so a
/// problem instance can be reused across a penalty grid or CV folds.
class GroupLassoProblem {
  public:
    GroupLassoProblem(const Eigen::MatrixXd& x, Partition part, Eigen::VectorXd weights,
                      double rank_tol = kDefaultRankTol)
        : x_(x), part_(std::move(part)), weights_(std::move(weights)) {
        part_.validate(static_cast<int>(x_.cols()));
        const int q = part_.q();
        if (weights_.size() != q) throw std::invalid_argument("one weight per group is required");
        if ((weights_.array() <= 0.0).any())
            throw std::invalid_argument("group weights must be positive");
        const double n = static_cast<double>(x_.rows());
        whitened_.reserve(static_cast<std::size_t>(q));
        to_gamma_.reserve(static_cast<std::size_t>(q));
        from_gamma_.reserve(static_cast<std::size_t>(q));
        for (int r = 0; r < q; ++r) {
            const auto& idx = part_.groups[static_cast<std::size_t>(r)].indices;
            const Eigen::MatrixXd cols = select_columns(x_, idx);
            const Eigen::MatrixXd block = (cols.transpose() * cols) / n;
            from_gamma_.push_back(pseudo_inverse_sqrt(block, rank_tol));
            to_gamma_.push_back(symmetric_sqrt(block));
            whitened_.push_back(cols * from_gamma_.back());
        }
    }

    GroupLassoProblem(const Eigen::MatrixXd& x, const Partition& part,
                      double rank_tol = kDefaultRankTol)
        : GroupLassoProblem(x, part, default_group_weights(part), rank_tol) {}

    const Partition& partition() const { return part_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    /// Smallest penalty level at which every group stays at zero.
    double lambda_max(const Eigen::VectorXd& y) const {
        const double n = static_cast<double>(x_.rows());
        double top = 0.0;
        for (int r = 0; r < part_.q(); ++r) {
            const double g = (2.0 * whitened_[static_cast<std::size_t>(r)].transpose() * y / n).norm();
            top = std::max(top, g / weights_(r));
        }
        return top;
    }

    GroupLassoFit solve(const Eigen::VectorXd& y, double lambda,
                        const GroupLassoOptions& opts = {},
                        const Eigen::VectorXd* warm_beta = nullptr) const {
        if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
        if (y.size() != x_.rows()) throw std::invalid_argument("response length must match rows");
        const int q = part_.q();
        const double n = static_cast<double>(x_.rows());

        std::vector<Eigen::VectorXd> gamma(static_cast<std::size_t>(q));
        for (int r = 0; r < q; ++r) {
            const auto& idx = part_.groups[static_cast<std::size_t>(r)].indices;
            if (warm_beta != nullptr && warm_beta->size() == x_.cols()) {
                Eigen::VectorXd block(idx.size());
                for (std::size_t i = 0; i < idx.size(); ++i)
                    block(static_cast<Eigen::Index>(i)) = (*warm_beta)(idx[i]);
                gamma[static_cast<std::size_t>(r)] = to_gamma_[static_cast<std::size_t>(r)] * block;
            } else {
                gamma[static_cast<std::size_t>(r)] =
                    Eigen::VectorXd::Zero(static_cast<Eigen::Index>(idx.size()));
            }
        }

        Eigen::VectorXd residual = y;
        for (int r = 0; r < q; ++r)
            residual.noalias() -= whitened_[static_cast<std::size_t>(r)] * gamma[static_cast<std::size_t>(r)];

        GroupLassoFit fit;
        fit.lambda = lambda;
        int sweeps = 0;
        while (sweeps < opts.max_sweeps) {
            ++sweeps;
            double max_change = 0.0;
            double max_gamma = 0.0;
            for (int r = 0; r < q; ++r) {
                const Eigen::MatrixXd& z = whitened_[static_cast<std::size_t>(r)];
                Eigen::VectorXd& g = gamma[static_cast<std::size_t>(r)];
                const Eigen::VectorXd c = z.transpose() * residual / n + g;
                const double norm_c = c.norm();
                const double threshold = lambda * weights_(r) / 2.0;
                Eigen::VectorXd updated;
                if (norm_c <= threshold) {
                    updated = Eigen::VectorXd::Zero(c.size());
                } else {
                    updated = c * (1.0 - threshold / norm_c);
                }
                const double change = (updated - g).cwiseAbs().maxCoeff();
                if (change > 0.0) {
                    residual.noalias() -= z * (updated - g);
                    g = updated;
                }
                max_change = std::max(max_change, change);
                max_gamma = std::max(max_gamma, g.cwiseAbs().maxCoeff());
            }
            if (max_change / std::max(1.0, max_gamma) < opts.tol) {
                residual = y;
                for (int r = 0; r < q; ++r)
                    residual.noalias() -=
                        whitened_[static_cast<std::size_t>(r)] * gamma[static_cast<std::size_t>(r)];
                fit.kkt_residual = kkt_residual(residual, gamma, lambda);
                if (fit.kkt_residual <= opts.kkt_tol) {
                    fit.converged = true;
                    break;
                }
            }
        }
        fit.iterations = sweeps;

        fit.beta = Eigen::VectorXd::Zero(x_.cols());
        fit.group_norms = Eigen::VectorXd::Zero(q);
        fit.active_groups.assign(static_cast<std::size_t>(q), 0);
        for (int r = 0; r < q; ++r) {
            const auto& idx = part_.groups[static_cast<std::size_t>(r)].indices;
            const Eigen::VectorXd block =
                from_gamma_[static_cast<std::size_t>(r)] * gamma[static_cast<std::size_t>(r)];
            for (std::size_t i = 0; i < idx.size(); ++i) fit.beta(idx[i]) = block(static_cast<Eigen::Index>(i));
            fit.group_norms(r) = gamma[static_cast<std::size_t>(r)].norm();
            fit.active_groups[static_cast<std::size_t>(r)] = fit.group_norms(r) > 0.0 ? 1 : 0;
        }

        residual = y;
        for (int r = 0; r < q; ++r)
            residual.noalias() -=
                whitened_[static_cast<std::size_t>(r)] * gamma[static_cast<std::size_t>(r)];
        fit.kkt_residual = kkt_residual(residual, gamma, lambda);
        fit.converged = fit.converged && fit.kkt_residual <= opts.kkt_tol;
        fit.objective = objective(y, fit.beta, lambda);
        return fit;
    }

    /// Objective recomputed from raw inputs and a coefficient vector.
    double objective(const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double lambda) const {
        const double n = static_cast<double>(x_.rows());
        double penalty = 0.0;
        for (int r = 0; r < part_.q(); ++r) {
            const auto& idx = part_.groups[static_cast<std::size_t>(r)].indices;
            Eigen::VectorXd block(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i)
                block(static_cast<Eigen::Index>(i)) = beta(idx[i]);
            penalty += weights_(r) * (select_columns(x_, idx) * block).norm() / std::sqrt(n);
        }
        return (y - x_ * beta).squaredNorm() / n + lambda * penalty;
    }

  private:
    double kkt_residual(const Eigen::VectorXd& residual, const std::vector<Eigen::VectorXd>& gamma,
                        double lambda) const {
        const double n = static_cast<double>(x_.rows());
        double worst = 0.0;
        for (int r = 0; r < part_.q(); ++r) {
            const Eigen::VectorXd grad =
                2.0 * whitened_[static_cast<std::size_t>(r)].transpose() * residual / n;
            const Eigen::VectorXd& g = gamma[static_cast<std::size_t>(r)];
            const double g_norm = g.norm();
            const double bound = lambda * weights_(r);
            const double viol = g_norm == 0.0 ? std::max(0.0, grad.norm() - bound)
                                              : (grad - bound / g_norm * g).norm();
            worst = std::max(worst, viol);
        }
        return worst;
    }

    Eigen::MatrixXd x_;
    Partition part_;
    Eigen::VectorXd weights_;
    std::vector<Eigen::MatrixXd> whitened_;    // X^(G_r) * from_gamma_r
    std::vector<Eigen::MatrixXd> to_gamma_;    // covariance block square root
    std::vector<Eigen::MatrixXd> from_gamma_;  // pseudo-inverse square root
};

/// One-shot block coordinate descent solve; see GroupLassoProblem.
inline GroupLassoFit group_lasso_bcd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const Partition& part, double lambda,
                                     const Eigen::VectorXd& weights,
                                     const GroupLassoOptions& opts = {}) {
    return GroupLassoProblem(x, part, weights).solve(y, lambda, opts);
}

inline GroupLassoFit group_lasso_bcd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const Partition& part, double lambda,
                                     const GroupLassoOptions& opts = {}) {
    return group_lasso_bcd(x, y, part, lambda, default_group_weights(part), opts);
}

struct GroupPathResult {
    Eigen::VectorXd lambdas;
    std::vector<GroupLassoFit> fits;
    std::vector<int> warm_from;
};

inline GroupPathResult group_lasso_path(const GroupLassoProblem& problem, const Eigen::VectorXd& y,
                                        int n_lambda = 100, double lambda_min_ratio = 1e-3,
                                        const GroupLassoOptions& opts = {}) {
    GroupPathResult path;
    path.lambdas = penalty_grid(problem.lambda_max(y), n_lambda, lambda_min_ratio);
    path.fits.reserve(static_cast<std::size_t>(path.lambdas.size()));
    for (Eigen::Index i = 0; i < path.lambdas.size(); ++i) {
        const Eigen::VectorXd* warm = i > 0 ? &path.fits.back().beta : nullptr;
        path.fits.push_back(problem.solve(y, path.lambdas(i), opts, warm));
        path.warm_from.push_back(static_cast<int>(i) - 1);
    }
    return path;
}

}  // namespace cluslasso
