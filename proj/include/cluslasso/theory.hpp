#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cluslasso/clustering.hpp"
#include "cluslasso/linalg.hpp"

namespace cluslasso {

/// Latent one-active-per-group model: group r consists of one unperturbed
/// copy of a latent variable U_r followed by m_r - 1 copies perturbed with
/// independent noise of scale tau_r; only the unperturbed copies can carry
/// signal.
struct LatentSpec {
    Eigen::MatrixXd cov_u;
    std::vector<int> sizes;
    Eigen::VectorXd tau;
    Eigen::VectorXd beta_tilde;

    int q() const { return static_cast<int>(sizes.size()); }

    int p() const {
        int total = 0;
        for (int m : sizes) total += m;
        return total;
    }

    void validate() const {
        const int groups = q();
        if (groups < 1) throw std::invalid_argument("latent model needs at least one group");
        if (cov_u.rows() != groups || cov_u.cols() != groups)
            throw std::invalid_argument("latent covariance must be q x q");
        if (tau.size() != groups || beta_tilde.size() != groups)
            throw std::invalid_argument("latent model needs one tau and one coefficient per group");
        for (int m : sizes)
            if (m < 1) throw std::invalid_argument("group sizes must be positive");
        if ((tau.array() < 0.0).any()) throw std::invalid_argument("tau must be non-negative");
    }

    /// Column offset of group r's unperturbed (signal-carrying) variable.
    int offset(int r) const {
        int at = 0;
        for (int l = 0; l < r; ++l) at += sizes[static_cast<std::size_t>(l)];
        return at;
    }
};

/// A population design description: covariance, true coefficients and the
/// grouping they are analyzed under.
struct PopulationModel {
    Eigen::MatrixXd sigma;
    Eigen::VectorXd beta0;
    Partition partition;
    std::optional<Eigen::VectorXd> block_rhos;  // per-group equi-correlation, when applicable
    std::optional<LatentSpec> latent;

    int p() const { return static_cast<int>(sigma.rows()); }

    void validate() const {
        if (sigma.rows() != sigma.cols()) throw std::invalid_argument("covariance must be square");
        if (beta0.size() != sigma.rows())
            throw std::invalid_argument("coefficient length must match covariance");
        partition.validate(static_cast<int>(sigma.rows()));
        if (min_eigenvalue(sigma) < -1e-8)
            throw std::invalid_argument("covariance is not positive semidefinite");
        if (block_rhos && block_rhos->size() != partition.q())
            throw std::invalid_argument("one equi-correlation value per group is required");
        if (latent) latent->validate();
    }
};

/// Block-diagonal equi-correlation model: unit variances, correlation rho_r
/// inside group r, zero between groups.
inline PopulationModel equicorr_model(const std::vector<int>& sizes, const Eigen::VectorXd& rhos,
                                      const Eigen::VectorXd& beta0) {
    const int q = static_cast<int>(sizes.size());
    if (rhos.size() != q) throw std::invalid_argument("one rho per block is required");
    int p = 0;
    for (int m : sizes) p += m;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
    std::vector<std::vector<int>> raw;
    int at = 0;
    for (int r = 0; r < q; ++r) {
        const int m = sizes[static_cast<std::size_t>(r)];
        if (m > 1 && !(rhos(r) > -1.0 / (m - 1) && rhos(r) < 1.0 + 1e-15))
            throw std::invalid_argument("equi-correlation outside the positive semidefinite range");
        std::vector<int> members;
        for (int i = 0; i < m; ++i) {
            members.push_back(at + i);
            for (int j = 0; j < m; ++j) sigma(at + i, at + j) = i == j ? 1.0 : rhos(r);
        }
        raw.push_back(std::move(members));
        at += m;
    }
    PopulationModel model{std::move(sigma), beta0, Partition::of(std::move(raw), p), rhos, {}};
    model.validate();
    return model;
}

/// Stacked covariance and augmented coefficients of a latent one-active model.
inline PopulationModel one_active_model(LatentSpec spec) {
    spec.validate();
    const int p = spec.p();
    const int q = spec.q();
    Eigen::MatrixXd sigma(p, p);
    std::vector<std::vector<int>> raw;
    for (int r = 0; r < q; ++r) {
        const int off_r = spec.offset(r);
        std::vector<int> members;
        for (int i = 0; i < spec.sizes[static_cast<std::size_t>(r)]; ++i) members.push_back(off_r + i);
        raw.push_back(std::move(members));
        for (int l = 0; l < q; ++l) {
            const int off_l = spec.offset(l);
            for (int i = 0; i < spec.sizes[static_cast<std::size_t>(r)]; ++i)
                for (int j = 0; j < spec.sizes[static_cast<std::size_t>(l)]; ++j) {
                    double v = spec.cov_u(r, l);
                    if (r == l && i == j && i > 0) v += spec.tau(r) * spec.tau(r);
                    sigma(off_r + i, off_l + j) = v;
                }
        }
    }
    Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(p);
    for (int r = 0; r < q; ++r) beta0(spec.offset(r)) = spec.beta_tilde(r);
    PopulationModel model{std::move(sigma), std::move(beta0), Partition::of(std::move(raw), p),
                          {}, std::move(spec)};
    model.validate();
    return model;
}

/// Row-normalized group averaging map: row r has 1/|G_r| on the members of
/// group r.
inline Eigen::MatrixXd averaging_map(const Partition& part, int p) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(part.q(), p);
    for (int r = 0; r < part.q(); ++r)
        for (int j : part.groups[static_cast<std::size_t>(r)].indices)
            a(r, j) = 1.0 / part.groups[static_cast<std::size_t>(r)].size();
    return a;
}

/// Population coefficients of the response projected on the cluster
/// representatives: solves Cov(rep) gamma = Cov(rep, X' beta0).
inline Eigen::VectorXd rep_coefficients(const PopulationModel& model) {
    model.validate();
    const Eigen::MatrixXd a = averaging_map(model.partition, model.p());
    const Eigen::MatrixXd cov_rep = a * model.sigma * a.transpose();
    const SymEigen decomp = sym_eigen(cov_rep);
    const double floor = 1e-12 * std::max(decomp.values(0), 0.0);
    if (decomp.values(decomp.values.size() - 1) <= floor)
        throw std::invalid_argument("representative covariance is singular");
    const Eigen::VectorXd rhs = a * (model.sigma * model.beta0);
    return decomp.vectors *
           (decomp.vectors.transpose() * rhs).cwiseQuotient(decomp.values.matrix());
}

/// Closed form of the representative coefficients when the representatives
/// are uncorrelated across groups: gamma_r = |G_r| * sum_j w_j beta_j with
/// row-sum weights w_j; under within-block equi-correlation the weights are
/// uniform and gamma_r is the plain within-group coefficient sum.
inline Eigen::VectorXd rep_coefficients_uncorrelated(const PopulationModel& model) {
    model.validate();
    const Eigen::MatrixXd a = averaging_map(model.partition, model.p());
    const Eigen::MatrixXd cov_rep = a * model.sigma * a.transpose();
    for (int r = 0; r < cov_rep.rows(); ++r)
        for (int l = 0; l < cov_rep.cols(); ++l)
            if (r != l && std::abs(cov_rep(r, l)) > 1e-10)
                throw std::invalid_argument(
                    "representatives are correlated across groups; use rep_coefficients");
    const Eigen::VectorXd row_sums = model.sigma.rowwise().sum();
    Eigen::VectorXd gamma(model.partition.q());
    for (int r = 0; r < model.partition.q(); ++r) {
        const auto& idx = model.partition.groups[static_cast<std::size_t>(r)].indices;
        double denom = 0.0;
        for (int j : idx) denom += row_sums(j);
        if (std::abs(denom) < 1e-12)
            throw std::invalid_argument("degenerate representative: group row sums vanish");
        double acc = 0.0;
        for (int j : idx) acc += row_sums(j) / denom * model.beta0(j);
        gamma(r) = static_cast<double>(idx.size()) * acc;
    }
    return gamma;
}

/// Representative coefficients on the standardized scale,
/// gamma_r * sqrt(Var(rep_r)).
inline Eigen::VectorXd rep_coefficients_standardized(const PopulationModel& model) {
    const Eigen::VectorXd gamma = rep_coefficients(model);
    const Eigen::MatrixXd a = averaging_map(model.partition, model.p());
    const Eigen::VectorXd var_rep = (a * model.sigma * a.transpose()).diagonal();
    return gamma.cwiseProduct(var_rep.cwiseMax(0.0).cwiseSqrt());
}

/// Exact squared representation bias for the block equi-correlation model:
///   B^2 = sum_r (1 - rho_r) sum_{j in G_r} (beta_j - mean_r(beta))^2.
inline double rep_bias_equicorr(const PopulationModel& model) {
    model.validate();
    if (!model.block_rhos)
        throw std::invalid_argument("equi-correlation bias needs per-group rho values");
    const Eigen::VectorXd& rhos = *model.block_rhos;
    // The closed form is specific to unit-variance equi-correlation blocks.
    for (int r = 0; r < model.partition.q(); ++r) {
        const auto& idx = model.partition.groups[static_cast<std::size_t>(r)].indices;
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) {
                const double expected = i == j ? 1.0 : rhos(r);
                if (std::abs(model.sigma(idx[i], idx[j]) - expected) > 1e-10)
                    throw std::invalid_argument("covariance is not block equi-correlation");
            }
    }
    for (int r = 0; r < model.p(); ++r)
        for (int l = 0; l < model.p(); ++l)
            if (model.partition.group_of(r) != model.partition.group_of(l) &&
                std::abs(model.sigma(r, l)) > 1e-10)
                throw std::invalid_argument("covariance has between-block correlation");

    double bias = 0.0;
    for (int r = 0; r < model.partition.q(); ++r) {
        const auto& idx = model.partition.groups[static_cast<std::size_t>(r)].indices;
        double mean = 0.0;
        for (int j : idx) mean += model.beta0(j);
        mean /= static_cast<double>(idx.size());
        double dev = 0.0;
        for (int j : idx) dev += (model.beta0(j) - mean) * (model.beta0(j) - mean);
        bias += (1.0 - rhos(r)) * dev;
    }
    return bias;
}

struct OneActiveBiasBound {
    double bound = 0.0;       // upper bound on the squared representation bias
    double tau_ratio = 0.0;   // max_r tau_r^2 / m_r
    double tau_budget = 0.0;  // c * log(q) / n
    bool tau_condition_holds = false;
};

/// Bias bound for the latent one-active model:
///   B^2 <= s0 * max_j beta_j^2 * max_r (m_r - 1) tau_r^2 / m_r^2,
/// together with the sample-size condition max_r tau_r^2 / m_r <= c log(q)/n
/// under which the reduction behaves like the q-dimensional model.
inline OneActiveBiasBound one_active_bias_bound(const PopulationModel& model, double n,
                                                double c = 1.0) {
    model.validate();
    if (!model.latent) throw std::invalid_argument("latent model specification is required");
    if (n <= 0.0) throw std::invalid_argument("sample size must be positive");
    const LatentSpec& spec = *model.latent;
    int s0 = 0;
    double max_beta_sq = 0.0;
    for (int r = 0; r < spec.q(); ++r) {
        if (spec.beta_tilde(r) != 0.0) ++s0;
        max_beta_sq = std::max(max_beta_sq, spec.beta_tilde(r) * spec.beta_tilde(r));
    }
    OneActiveBiasBound out;
    double worst = 0.0;
    for (int r = 0; r < spec.q(); ++r) {
        const double m = static_cast<double>(spec.sizes[static_cast<std::size_t>(r)]);
        worst = std::max(worst, (m - 1.0) / (m * m) * spec.tau(r) * spec.tau(r));
        out.tau_ratio = std::max(out.tau_ratio, spec.tau(r) * spec.tau(r) / m);
    }
    out.bound = static_cast<double>(s0) * max_beta_sq * worst;
    out.tau_budget = c * std::log(static_cast<double>(spec.q())) / n;
    out.tau_condition_holds = out.tau_ratio <= out.tau_budget;
    return out;
}

struct OneActiveShiftBound {
    double bound = 0.0;             // upper bound on ||beta_tilde - gamma||_2^2
    double detect_threshold = 0.0;  // sqrt(bound)
    bool detect_premise = false;    // min active |beta_tilde| exceeds twice the threshold
    double implied_min_gamma = 0.0; // lower bound on min active |gamma| when the premise holds
};

/// How far the representative coefficients can drift from the latent ones:
///   ||beta_tilde - gamma||_2^2 <= 2 E|W' beta_tilde|^2 / eigmin(Cov(U)),
/// with W the representative averaging noise. Also evaluates the detection
/// implication: when every active latent coefficient exceeds twice the root
/// bound, every active representative coefficient exceeds the root bound.
inline OneActiveShiftBound one_active_shift_bound(const PopulationModel& model) {
    model.validate();
    if (!model.latent) throw std::invalid_argument("latent model specification is required");
    const LatentSpec& spec = *model.latent;
    const double eig_min = min_eigenvalue(spec.cov_u);
    if (eig_min <= 0.0) throw std::invalid_argument("latent covariance must be positive definite");
    double noise_sq = 0.0;
    double min_active = std::numeric_limits<double>::infinity();
    for (int r = 0; r < spec.q(); ++r) {
        const double m = static_cast<double>(spec.sizes[static_cast<std::size_t>(r)]);
        noise_sq += spec.beta_tilde(r) * spec.beta_tilde(r) * spec.tau(r) * spec.tau(r) *
                    (m - 1.0) / (m * m);
        if (spec.beta_tilde(r) != 0.0) min_active = std::min(min_active, std::abs(spec.beta_tilde(r)));
    }
    OneActiveShiftBound out;
    out.bound = 2.0 * noise_sq / eig_min;
    out.detect_threshold = std::sqrt(out.bound);
    out.detect_premise = std::isfinite(min_active) && min_active > 2.0 * out.detect_threshold;
    out.implied_min_gamma = out.detect_premise ? out.detect_threshold : 0.0;
    return out;
}

/// Coefficient-size threshold sufficient for screening on a reduced design:
///   c * s_gamma * sqrt(log(q) / n) / phi0_sq.
inline double beta_min_threshold(double s_gamma, double q, double n, double phi0_sq, double c) {
    if (s_gamma <= 0.0 || q < 1.0 || n <= 0.0 || phi0_sq <= 0.0 || c <= 0.0)
        throw std::invalid_argument("threshold arguments must be positive");
    return c * s_gamma * std::sqrt(std::log(q) / n) / phi0_sq;
}

struct ClusterSeparation {
    bool holds = false;
    double margin = 0.0;  // min within-group |cov| minus max between-group |cov|
};

/// Tightness-and-separation check: the smallest within-group absolute
/// covariance must exceed the largest between-group one. Groups of size one
/// contribute no within pairs; a partition with no between pairs is treated
/// as maximally separated.
inline ClusterSeparation cluster_separation(const Eigen::MatrixXd& sigma, const Partition& part) {
    part.validate(static_cast<int>(sigma.rows()));
    double min_within = std::numeric_limits<double>::infinity();
    double max_between = 0.0;
    bool any_between = false;
    const int p = static_cast<int>(sigma.rows());
    std::vector<int> owner(static_cast<std::size_t>(p));
    for (int r = 0; r < part.q(); ++r)
        for (int j : part.groups[static_cast<std::size_t>(r)].indices)
            owner[static_cast<std::size_t>(j)] = r;
    for (int j = 0; j < p; ++j)
        for (int k = j + 1; k < p; ++k) {
            const double v = std::abs(sigma(j, k));
            if (owner[static_cast<std::size_t>(j)] == owner[static_cast<std::size_t>(k)]) {
                min_within = std::min(min_within, v);
            } else {
                max_between = std::max(max_between, v);
                any_between = true;
            }
        }
    ClusterSeparation out;
    if (!std::isfinite(min_within) && !any_between) {
        out.margin = std::numeric_limits<double>::infinity();
        out.holds = true;
        return out;
    }
    out.margin = min_within - max_between;
    out.holds = out.margin > 0.0;
    return out;
}

/// Gaussian conditional covariance of the `target` coordinates given the
/// linear functionals rows(given_map) * X, via the Schur complement.
inline Eigen::MatrixXd conditional_covariance(const Eigen::MatrixXd& sigma,
                                              const std::vector<int>& target,
                                              const Eigen::MatrixXd& given_map) {
    const Eigen::MatrixXd cov_given = given_map * sigma * given_map.transpose();
    const Eigen::MatrixXd cross = sigma * given_map.transpose();  // p x g
    const Eigen::MatrixXd pinv = [&cov_given]() {
        const SymEigen decomp = sym_eigen(cov_given);
        const double cut = 1e-12 * std::max(decomp.values(0), 0.0);
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cov_given.rows(), cov_given.cols());
        for (Eigen::Index i = 0; i < decomp.values.size(); ++i)
            if (decomp.values(i) > cut && decomp.values(i) > 0.0)
                out.noalias() +=
                    decomp.vectors.col(i) * decomp.vectors.col(i).transpose() / decomp.values(i);
        return out;
    }();
    const Eigen::MatrixXd full = sigma - cross * pinv * cross.transpose();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(target.size()),
                        static_cast<Eigen::Index>(target.size()));
    for (std::size_t i = 0; i < target.size(); ++i)
        for (std::size_t j = 0; j < target.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                full(target[i], target[j]);
    return out;
}

/// Lower-bound report for the group compatibility constant of a grouped
/// design, driven by between-group canonical correlations.
struct GroupCompatibilityReport {
    double lambda_min_sq = 0.0;   // smallest eigenvalue of the whitened active-block matrix
    double rho = 0.0;             // weighted active-vs-inactive incoherence
    double rho_active = 0.0;      // weighted incoherence within the active set
    double bound_direct = 0.0;       // sharpest bound in the chain
    double bound_incoherence = 0.0;  // (1-c)^2 * lambda_min_sq
    double bound_diagonal = 0.0;     // (1-c)^2 * (1 - s0 * rho_active)
    bool incoherence_between_ok = false;
    bool incoherence_within_ok = false;
    bool pseudo_inverse_used = false;
    double constant_c = 0.0;
    std::vector<int> group_sizes;
    std::vector<int> active_groups;
    double mean_size = 0.0;
    double mean_active_size = 0.0;
};

/// Builds the whitened active-block matrix, the weighted incoherence measures
/// and the resulting bound chain for the group compatibility constant. Both
/// incoherence flags must hold for the chain to certify a positive bound.
inline GroupCompatibilityReport group_compatibility_bound(const DesignMatrix& x,
                                                          const Partition& part,
                                                          const std::vector<int>& active_groups,
                                                          double c = 0.5,
                                                          double rank_tol = kDefaultRankTol) {
    x.validate();
    part.validate(static_cast<int>(x.p()));
    if (active_groups.empty()) throw std::invalid_argument("active group set is empty");
    if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("constant must lie in (0, 1)");
    std::vector<int> active = active_groups;
    std::sort(active.begin(), active.end());
    if (std::adjacent_find(active.begin(), active.end()) != active.end())
        throw std::invalid_argument("duplicate active group");
    for (int r : active)
        if (r < 0 || r >= part.q()) throw std::invalid_argument("active group out of range");

    GroupCompatibilityReport report;
    report.constant_c = c;
    report.active_groups = active;
    const int q = part.q();
    const double s0 = static_cast<double>(active.size());
    double total = 0.0, total_active = 0.0;
    for (int r = 0; r < q; ++r) {
        const int m = part.groups[static_cast<std::size_t>(r)].size();
        report.group_sizes.push_back(m);
        total += m;
    }
    for (int r : active) total_active += report.group_sizes[static_cast<std::size_t>(r)];
    report.mean_size = total / q;
    report.mean_active_size = total_active / s0;

    const double n = static_cast<double>(x.n());
    const Eigen::MatrixXd gram = (x.data.transpose() * x.data) / n;

    // Whitened cross blocks of the active groups.
    std::vector<Eigen::MatrixXd> whiteners;
    int dim = 0;
    for (int r : active) {
        const auto& idx = part.groups[static_cast<std::size_t>(r)].indices;
        Eigen::MatrixXd block(idx.size(), idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j)
                block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    gram(idx[i], idx[j]);
        int rank = 0;
        whiteners.push_back(pseudo_inverse_sqrt(block, rank_tol, &rank));
        if (rank < static_cast<int>(idx.size())) report.pseudo_inverse_used = true;
        dim += static_cast<int>(idx.size());
    }
    Eigen::MatrixXd whitened(dim, dim);
    int row_at = 0;
    for (std::size_t a = 0; a < active.size(); ++a) {
        const auto& idx_a = part.groups[static_cast<std::size_t>(active[a])].indices;
        int col_at = 0;
        for (std::size_t b = 0; b < active.size(); ++b) {
            const auto& idx_b = part.groups[static_cast<std::size_t>(active[b])].indices;
            Eigen::MatrixXd cross(idx_a.size(), idx_b.size());
            for (std::size_t i = 0; i < idx_a.size(); ++i)
                for (std::size_t j = 0; j < idx_b.size(); ++j)
                    cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        gram(idx_a[i], idx_b[j]);
            whitened.block(row_at, col_at, idx_a.size(), idx_b.size()) =
                whiteners[a] * cross * whiteners[b];
            col_at += static_cast<int>(idx_b.size());
        }
        row_at += static_cast<int>(idx_a.size());
    }
    report.lambda_min_sq = min_eigenvalue(whitened);

    std::vector<char> is_active(static_cast<std::size_t>(q), 0);
    for (int r : active) is_active[static_cast<std::size_t>(r)] = 1;
    const auto weighted_cancor = [&](int r, int l) {
        const double value = detail::cancor_from_gram(gram, x.n(),
                                                      part.groups[static_cast<std::size_t>(r)].indices,
                                                      part.groups[static_cast<std::size_t>(l)].indices,
                                                      rank_tol)
                                 .value;
        const double mr = report.group_sizes[static_cast<std::size_t>(r)];
        const double ml = report.group_sizes[static_cast<std::size_t>(l)];
        return report.mean_size / std::sqrt(mr * ml) * value;
    };
    for (int r : active) {
        for (int l = 0; l < q; ++l) {
            if (is_active[static_cast<std::size_t>(l)]) {
                if (l > r) report.rho_active = std::max(report.rho_active, weighted_cancor(r, l));
            } else {
                report.rho = std::max(report.rho, weighted_cancor(r, l));
            }
        }
    }

    const double size_ratio = report.mean_size / report.mean_active_size;
    report.incoherence_between_ok =
        report.lambda_min_sq > 0.0 &&
        report.rho <= c * report.lambda_min_sq * size_ratio / (3.0 * s0);
    report.incoherence_within_ok = report.rho_active < 1.0 / s0;
    if (report.lambda_min_sq > 0.0) {
        const double numerator = report.lambda_min_sq * size_ratio - 3.0 * s0 * report.rho;
        report.bound_direct =
            numerator * numerator / (report.lambda_min_sq * size_ratio * size_ratio);
        report.bound_incoherence = (1.0 - c) * (1.0 - c) * report.lambda_min_sq;
        report.bound_diagonal = (1.0 - c) * (1.0 - c) * (1.0 - s0 * report.rho_active);
    }
    return report;
}

}  // namespace cluslasso
