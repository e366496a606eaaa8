#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cluslasso {

inline constexpr double kDefaultRankTol = 1e-9;

/// An n x p matrix of covariate observations (rows = samples) with optional
/// column labels.
struct DesignMatrix {
    Eigen::MatrixXd data;
    std::vector<std::string> col_names;  // empty, or one label per column

    Eigen::Index n() const { return data.rows(); }
    Eigen::Index p() const { return data.cols(); }

    void validate() const {
        if (data.rows() < 1 || data.cols() < 1)
            throw std::invalid_argument("design matrix must have at least one row and one column");
        if (!data.allFinite())
            throw std::invalid_argument("design matrix contains non-finite entries");
        if (!col_names.empty() && static_cast<Eigen::Index>(col_names.size()) != data.cols())
            throw std::invalid_argument("column label count does not match column count");
    }

    static DesignMatrix make(Eigen::MatrixXd values, std::vector<std::string> names = {}) {
        DesignMatrix x{std::move(values), std::move(names)};
        x.validate();
        return x;
    }
};

/// A set of covariate indices, kept strictly increasing.
struct GroupIndex {
    std::vector<int> indices;

    GroupIndex() = default;
    explicit GroupIndex(std::vector<int> idx) : indices(std::move(idx)) {
        std::sort(indices.begin(), indices.end());
    }

    int size() const { return static_cast<int>(indices.size()); }

    void validate(Eigen::Index p) const {
        if (indices.empty()) throw std::invalid_argument("group is empty");
        int prev = -1;
        for (int j : indices) {
            if (j <= prev) throw std::invalid_argument("group indices must be strictly increasing");
            if (j < 0 || j >= p) throw std::invalid_argument("group index out of range");
            prev = j;
        }
    }

    bool overlaps(const GroupIndex& other) const {
        auto a = indices.begin();
        auto b = other.indices.begin();
        while (a != indices.end() && b != other.indices.end()) {
            if (*a == *b) return true;
            if (*a < *b) ++a; else ++b;
        }
        return false;
    }

    bool operator==(const GroupIndex& other) const { return indices == other.indices; }
};

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = x.col(idx[k]);
    return out;
}

/// Empirical cross-covariance of two column groups, (X_r)^T X_l / n.
/// Columns are used as given; no centering is applied.
inline Eigen::MatrixXd cross_covariance(const DesignMatrix& x, const GroupIndex& g_r,
                                        const GroupIndex& g_l) {
    g_r.validate(x.p());
    g_l.validate(x.p());
    const Eigen::MatrixXd xr = select_columns(x.data, g_r.indices);
    const Eigen::MatrixXd xl = select_columns(x.data, g_l.indices);
    return (xr.transpose() * xl) / static_cast<double>(x.n());
}

struct SymEigen {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // columns match values
};

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
inline SymEigen sym_eigen(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("matrix is not square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale)
        throw std::invalid_argument("matrix is not symmetric within tolerance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        0.5 * (m + m.transpose().eval()));
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("symmetric eigendecomposition failed");
    SymEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
    const SymEigen decomp = sym_eigen(m);
    return decomp.values(decomp.values.size() - 1);
}

/// Pseudo-inverse square root of a symmetric PSD matrix. Eigenvalues at or
/// below rank_tol times the largest eigenvalue are truncated; `rank` receives
/// the retained spectrum size.
inline Eigen::MatrixXd pseudo_inverse_sqrt(const Eigen::MatrixXd& s, double rank_tol,
                                           int* rank = nullptr) {
    const SymEigen decomp = sym_eigen(s);
    const double lambda_max = decomp.values.size() > 0 ? decomp.values(0) : 0.0;
    const double cut = rank_tol * std::max(lambda_max, 0.0);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(s.rows(), s.cols());
    int kept = 0;
    for (Eigen::Index i = 0; i < decomp.values.size(); ++i) {
        const double v = decomp.values(i);
        if (v > cut && v > 0.0) {
            out.noalias() += decomp.vectors.col(i) * decomp.vectors.col(i).transpose() / std::sqrt(v);
            ++kept;
        }
    }
    if (rank != nullptr) *rank = kept;
    return out;
}

/// Symmetric square root of a symmetric PSD matrix; tiny negative eigenvalues
/// from roundoff are clipped to zero.
inline Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& s) {
    const SymEigen decomp = sym_eigen(s);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < decomp.values.size(); ++i) {
        const double v = decomp.values(i);
        if (v > 0.0)
            out.noalias() += decomp.vectors.col(i) * decomp.vectors.col(i).transpose() * std::sqrt(v);
    }
    return out;
}

struct CancorResult {
    double value = 0.0;
    bool degenerate = false;  // a group had no spectrum above the rank cutoff
    int rank_left = 0;
    int rank_right = 0;
};

namespace detail {

// Canonical correlation from covariance blocks. `n_samples` bounds the column
// spaces: when the numeric ranks of the two groups exceed n the spans must
// intersect and the value is exactly 1.
inline CancorResult cancor_from_blocks(const Eigen::MatrixXd& s_rr, const Eigen::MatrixXd& s_rl,
                                       const Eigen::MatrixXd& s_ll, double rank_tol,
                                       Eigen::Index n_samples) {
    CancorResult out;
    if (s_rr.rows() == 1 && s_ll.rows() == 1) {
        const double a = s_rr(0, 0);
        const double b = s_ll(0, 0);
        out.rank_left = a > 0.0 ? 1 : 0;
        out.rank_right = b > 0.0 ? 1 : 0;
        if (a <= 0.0 || b <= 0.0) {
            out.degenerate = true;
            return out;
        }
        out.value = std::clamp(std::abs(s_rl(0, 0)) / std::sqrt(a * b), 0.0, 1.0);
        return out;
    }
    const Eigen::MatrixXd w_r = pseudo_inverse_sqrt(s_rr, rank_tol, &out.rank_left);
    const Eigen::MatrixXd w_l = pseudo_inverse_sqrt(s_ll, rank_tol, &out.rank_right);
    if (out.rank_left == 0 || out.rank_right == 0) {
        out.degenerate = true;
        return out;
    }
    if (static_cast<Eigen::Index>(out.rank_left + out.rank_right) > n_samples) {
        out.value = 1.0;
        return out;
    }
    const Eigen::MatrixXd m = w_r * s_rl * w_l;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    out.value = std::clamp(svd.singularValues()(0), 0.0, 1.0);
    return out;
}

// Same computation driven by a precomputed gram matrix X^T X / n. The
// clustering loop and the diagnostics reuse one gram so pairwise values are
// bit-reproducible across calls.
inline CancorResult cancor_from_gram(const Eigen::MatrixXd& gram, Eigen::Index n_samples,
                                     const std::vector<int>& g_r, const std::vector<int>& g_l,
                                     double rank_tol) {
    const auto slice = [&gram](const std::vector<int>& a, const std::vector<int>& b) {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gram(a[i], b[j]);
        return out;
    };
    return cancor_from_blocks(slice(g_r, g_r), slice(g_r, g_l), slice(g_l, g_l), rank_tol, n_samples);
}

}  // namespace detail

/// Empirical canonical correlation between two disjoint column groups: the
/// largest singular value of S_rr^{-1/2} S_rl S_ll^{-1/2} with pseudo-inverse
/// square roots, clamped to [0, 1]. Groups whose covariance block has no
/// spectrum above the cutoff yield 0 with the degenerate flag set.
inline CancorResult canonical_correlation_info(const DesignMatrix& x, const GroupIndex& g_r,
                                               const GroupIndex& g_l,
                                               double rank_tol = kDefaultRankTol) {
    g_r.validate(x.p());
    g_l.validate(x.p());
    if (g_r.overlaps(g_l)) throw std::invalid_argument("groups overlap");
    const double n = static_cast<double>(x.n());
    const Eigen::MatrixXd xr = select_columns(x.data, g_r.indices);
    const Eigen::MatrixXd xl = select_columns(x.data, g_l.indices);
    const Eigen::MatrixXd s_rr = (xr.transpose() * xr) / n;
    const Eigen::MatrixXd s_rl = (xr.transpose() * xl) / n;
    const Eigen::MatrixXd s_ll = (xl.transpose() * xl) / n;
    return detail::cancor_from_blocks(s_rr, s_rl, s_ll, rank_tol, x.n());
}

inline double canonical_correlation(const DesignMatrix& x, const GroupIndex& g_r,
                                    const GroupIndex& g_l, double rank_tol = kDefaultRankTol) {
    return canonical_correlation_info(x, g_r, g_l, rank_tol).value;
}

}  // namespace cluslasso
