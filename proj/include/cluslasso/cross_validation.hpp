#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cluslasso/group_lasso.hpp"
#include "cluslasso/lasso.hpp"
#include "cluslasso/rng.hpp"

namespace cluslasso {

enum class FitMethod { kLasso, kGroupLasso };

struct CvCurve {
    Eigen::VectorXd lambdas;  // descending
    Eigen::VectorXd mean;     // mean held-out squared error per lambda
    Eigen::VectorXd se;       // standard error of the fold means
};

struct CvResult {
    double lambda_min = 0.0;
    double lambda_1se = 0.0;
    CvCurve curve;
};

namespace detail {

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

inline Eigen::VectorXd select_rows(const Eigen::VectorXd& y, const std::vector<int>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
    return out;
}

}  // namespace detail

/// K-fold cross-validation over a shared penalty grid. Fold membership comes
/// from a seeded shuffle of the sample indices (sample shuffled[i] lands in
/// fold i mod K). lambda_min is the (largest) minimizer of the mean curve and
/// lambda_1se the largest penalty whose mean error stays within one standard
/// error of the minimum.
inline CvResult cv_select(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, FitMethod method,
                          const Partition* part, int k_folds, std::uint64_t seed,
                          int n_lambda = 100, double lambda_min_ratio = 1e-3,
                          const Eigen::VectorXd* group_weights = nullptr,
                          const LassoOptions& lasso_opts = {},
                          const GroupLassoOptions& group_opts = {}) {
    const int n = static_cast<int>(x.rows());
    if (k_folds < 2) throw std::invalid_argument("cross-validation needs at least two folds");
    if (n < k_folds) throw std::invalid_argument("more folds than samples");
    if (method == FitMethod::kGroupLasso && part == nullptr)
        throw std::invalid_argument("group lasso cross-validation needs a partition");

    CvResult out;
    if (method == FitMethod::kLasso) {
        out.curve.lambdas = penalty_grid(lambda_max_lasso(x, y), n_lambda, lambda_min_ratio);
    } else {
        const Eigen::VectorXd w =
            group_weights != nullptr ? *group_weights : default_group_weights(*part);
        out.curve.lambdas =
            penalty_grid(GroupLassoProblem(x, *part, w).lambda_max(y), n_lambda, lambda_min_ratio);
    }
    const Eigen::Index n_grid = out.curve.lambdas.size();

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    Eigen::MatrixXd fold_error(k_folds, n_grid);
    for (int k = 0; k < k_folds; ++k) {
        std::vector<int> train, held;
        for (int i = 0; i < n; ++i)
            (i % k_folds == k ? held : train).push_back(order[static_cast<std::size_t>(i)]);
        const Eigen::MatrixXd x_train = detail::select_rows(x, train);
        const Eigen::VectorXd y_train = detail::select_rows(y, train);
        const Eigen::MatrixXd x_held = detail::select_rows(x, held);
        const Eigen::VectorXd y_held = detail::select_rows(y, held);
        const double n_held = static_cast<double>(held.size());

        if (method == FitMethod::kLasso) {
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
            for (Eigen::Index i = 0; i < n_grid; ++i) {
                const LassoFit fit =
                    lasso_cd(x_train, y_train, out.curve.lambdas(i), lasso_opts, &beta);
                beta = fit.beta;
                fold_error(k, i) = (y_held - x_held * beta).squaredNorm() / n_held;
            }
        } else {
            const Eigen::VectorXd w =
                group_weights != nullptr ? *group_weights : default_group_weights(*part);
            const GroupLassoProblem problem(x_train, *part, w);
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
            for (Eigen::Index i = 0; i < n_grid; ++i) {
                const GroupLassoFit fit =
                    problem.solve(y_train, out.curve.lambdas(i), group_opts, &beta);
                beta = fit.beta;
                fold_error(k, i) = (y_held - x_held * beta).squaredNorm() / n_held;
            }
        }
    }

    out.curve.mean = fold_error.colwise().mean();
    out.curve.se.resize(n_grid);
    for (Eigen::Index i = 0; i < n_grid; ++i) {
        const double m = out.curve.mean(i);
        const double ss = (fold_error.col(i).array() - m).square().sum();
        out.curve.se(i) = std::sqrt(ss / (k_folds - 1)) / std::sqrt(static_cast<double>(k_folds));
    }

    Eigen::Index at_min = 0;
    for (Eigen::Index i = 1; i < n_grid; ++i)
        if (out.curve.mean(i) < out.curve.mean(at_min)) at_min = i;
    out.lambda_min = out.curve.lambdas(at_min);
    const double cutoff = out.curve.mean(at_min) + out.curve.se(at_min);
    Eigen::Index at_1se = at_min;
    for (Eigen::Index i = 0; i < n_grid; ++i) {
        if (out.curve.mean(i) <= cutoff) {
            at_1se = i;  // grid is descending, so the first hit is the largest lambda
            break;
        }
    }
    out.lambda_1se = out.curve.lambdas(at_1se);
    return out;
}

}  // namespace cluslasso
