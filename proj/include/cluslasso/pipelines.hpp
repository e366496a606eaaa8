#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cluslasso/clustering.hpp"
#include "cluslasso/group_lasso.hpp"
#include "cluslasso/lasso.hpp"
#include "cluslasso/linalg.hpp"

namespace cluslasso {

/// Per-cluster mean columns: column r of the result averages the columns of
/// group r, in the partition's canonical group order.
inline DesignMatrix cluster_representatives(const DesignMatrix& x, const Partition& part) {
    part.validate(static_cast<int>(x.p()));
    Eigen::MatrixXd reps(x.n(), part.q());
    for (int r = 0; r < part.q(); ++r) {
        const auto& idx = part.groups[static_cast<std::size_t>(r)].indices;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.n());
        for (int j : idx) mean += x.data.col(j);
        reps.col(r) = mean / static_cast<double>(idx.size());
    }
    return DesignMatrix::make(std::move(reps));
}

/// Outcome of one cluster-level selection: the chosen clusters and the
/// variable set they induce (always a union of whole clusters for the
/// cluster-based methods).
struct SelectionResult {
    enum class Method { kLasso, kCrl, kCgl };

    Method method = Method::kLasso;
    std::vector<int> selected_clusters;   // canonical group indices
    std::vector<int> selected_variables;  // sorted covariate indices
    double lambda = 0.0;
    std::optional<LassoFit> lasso_fit;      // kLasso / kCrl
    std::optional<GroupLassoFit> group_fit; // kCgl
};

inline const char* method_name(SelectionResult::Method m) {
    switch (m) {
        case SelectionResult::Method::kLasso: return "lasso";
        case SelectionResult::Method::kCrl: return "crl";
        case SelectionResult::Method::kCgl: return "cgl";
    }
    return "?";
}

namespace detail {

inline std::vector<int> union_of_groups(const Partition& part, const std::vector<int>& clusters) {
    std::vector<int> vars;
    for (int r : clusters) {
        const auto& idx = part.groups[static_cast<std::size_t>(r)].indices;
        vars.insert(vars.end(), idx.begin(), idx.end());
    }
    std::sort(vars.begin(), vars.end());
    return vars;
}

}  // namespace detail

/// Cluster representative lasso: a lasso on the per-cluster mean columns;
/// every nonzero representative coefficient selects its whole cluster.
/// The representatives are used on their natural scale unless `standardize`
/// rescales them to unit root-mean-square before the fit (coefficients are
/// mapped back to the original scale).
inline SelectionResult crl_fit(const DesignMatrix& x, const Eigen::VectorXd& y,
                               const Partition& part, double lambda, bool standardize = false,
                               const LassoOptions& opts = {}) {
    const DesignMatrix reps = cluster_representatives(x, part);
    Eigen::MatrixXd design = reps.data;
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(design.cols());
    if (standardize) {
        const double n = static_cast<double>(design.rows());
        for (Eigen::Index r = 0; r < design.cols(); ++r) {
            const double s = std::sqrt(design.col(r).squaredNorm() / n);
            if (s > 0.0) {
                design.col(r) /= s;
                scale(r) = s;
            }
        }
    }
    LassoFit fit = lasso_cd(design, y, lambda, opts);
    fit.beta = fit.beta.cwiseQuotient(scale);

    SelectionResult out;
    out.method = SelectionResult::Method::kCrl;
    out.lambda = lambda;
    for (Eigen::Index r = 0; r < fit.beta.size(); ++r)
        if (fit.beta(r) != 0.0) out.selected_clusters.push_back(static_cast<int>(r));
    out.selected_variables = detail::union_of_groups(part, out.selected_clusters);
    out.lasso_fit = std::move(fit);
    return out;
}

/// Cluster group lasso: the group lasso on the full design with the clusters
/// as groups; group selection makes the support a union of whole clusters.
inline SelectionResult cgl_fit(const DesignMatrix& x, const Eigen::VectorXd& y,
                               const Partition& part, double lambda,
                               const Eigen::VectorXd* weights = nullptr,
                               const GroupLassoOptions& opts = {}) {
    const Eigen::VectorXd w = weights != nullptr ? *weights : default_group_weights(part);
    GroupLassoFit fit = group_lasso_bcd(x.data, y, part, lambda, w, opts);

    SelectionResult out;
    out.method = SelectionResult::Method::kCgl;
    out.lambda = lambda;
    for (int r = 0; r < part.q(); ++r)
        if (fit.active_groups[static_cast<std::size_t>(r)]) out.selected_clusters.push_back(r);
    out.selected_variables = detail::union_of_groups(part, out.selected_clusters);
    out.group_fit = std::move(fit);
    return out;
}

/// Plain lasso selection on the full design, for side-by-side comparisons.
inline SelectionResult lasso_select(const DesignMatrix& x, const Eigen::VectorXd& y, double lambda,
                                    const LassoOptions& opts = {}) {
    LassoFit fit = lasso_cd(x.data, y, lambda, opts);
    SelectionResult out;
    out.method = SelectionResult::Method::kLasso;
    out.lambda = lambda;
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        if (fit.beta(j) != 0.0) out.selected_variables.push_back(static_cast<int>(j));
    out.lasso_fit = std::move(fit);
    return out;
}

struct ScreeningPoint {
    int selected = 0;   // |S_hat|
    double tpr = 0.0;   // |S_hat ∩ S_0| / |S_0|
};

/// True positive rate of a selection against the reference active set.
inline ScreeningPoint screening_eval(const SelectionResult& result, const std::vector<int>& s0) {
    if (s0.empty()) throw std::invalid_argument("reference active set is empty");
    std::vector<int> sorted_s0 = s0;
    std::sort(sorted_s0.begin(), sorted_s0.end());
    int hits = 0;
    for (int j : result.selected_variables)
        if (std::binary_search(sorted_s0.begin(), sorted_s0.end(), j)) ++hits;
    return {static_cast<int>(result.selected_variables.size()),
            static_cast<double>(hits) / static_cast<double>(sorted_s0.size())};
}

}  // namespace cluslasso
