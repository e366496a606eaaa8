#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cluslasso/clustering.hpp"
#include "cluslasso/cross_validation.hpp"
#include "cluslasso/group_lasso.hpp"
#include "cluslasso/lasso.hpp"
#include "cluslasso/linalg.hpp"
#include "cluslasso/pipelines.hpp"
#include "cluslasso/rng.hpp"
#include "cluslasso/theory.hpp"

namespace cluslasso {

/// Block-diagonal covariance of `num_blocks` equi-correlation blocks.
inline Eigen::MatrixXd make_sigma_block(int num_blocks, int block_size, double rho) {
    if (num_blocks < 1 || block_size < 1) throw std::invalid_argument("block counts must be positive");
    if (!(rho < 1.0) || (block_size > 1 && !(rho > -1.0 / (block_size - 1))))
        throw std::invalid_argument("equi-correlation outside the positive definite range");
    const int p = num_blocks * block_size;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
    for (int b = 0; b < num_blocks; ++b)
        for (int i = 0; i < block_size; ++i)
            for (int j = 0; j < block_size; ++j)
                sigma(b * block_size + i, b * block_size + j) = i == j ? 1.0 : rho;
    return sigma;
}

/// Identity covariance with one leading equi-correlation block.
inline Eigen::MatrixXd make_sigma_single_block(int p, int block_size, double rho) {
    if (p < 1 || block_size < 1 || block_size > p)
        throw std::invalid_argument("block must fit inside the covariance");
    if (!(rho < 1.0) || (block_size > 1 && !(rho > -1.0 / (block_size - 1))))
        throw std::invalid_argument("equi-correlation outside the positive definite range");
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
    for (int i = 0; i < block_size; ++i)
        for (int j = 0; j < block_size; ++j)
            if (i != j) sigma(i, j) = rho;
    return sigma;
}

struct SigmaSpec {
    enum class Kind { kBlock, kSingleBlock, kLatent, kCustom };

    Kind kind = Kind::kBlock;
    int num_blocks = 0;
    int block_size = 0;
    double rho = 0.0;
    int p = 0;  // single-block kind only
    std::optional<LatentSpec> latent;
    Eigen::MatrixXd custom;

    static SigmaSpec block(int num_blocks, int block_size, double rho) {
        SigmaSpec s;
        s.kind = Kind::kBlock;
        s.num_blocks = num_blocks;
        s.block_size = block_size;
        s.rho = rho;
        return s;
    }

    static SigmaSpec single_block(int p, int block_size, double rho) {
        SigmaSpec s;
        s.kind = Kind::kSingleBlock;
        s.p = p;
        s.block_size = block_size;
        s.rho = rho;
        return s;
    }

    static SigmaSpec latent_spec(LatentSpec spec) {
        SigmaSpec s;
        s.kind = Kind::kLatent;
        s.latent = std::move(spec);
        return s;
    }

    static SigmaSpec custom_matrix(Eigen::MatrixXd sigma) {
        SigmaSpec s;
        s.kind = Kind::kCustom;
        s.custom = std::move(sigma);
        return s;
    }

    Eigen::MatrixXd build() const {
        switch (kind) {
            case Kind::kBlock: return make_sigma_block(num_blocks, block_size, rho);
            case Kind::kSingleBlock: return make_sigma_single_block(p, block_size, rho);
            case Kind::kLatent: {
                LatentSpec spec = *latent;
                return one_active_model(std::move(spec)).sigma;
            }
            case Kind::kCustom: return custom;
        }
        throw std::invalid_argument("unknown covariance kind");
    }

    /// The grouping the covariance was built around, when one exists.
    std::optional<Partition> true_partition() const {
        switch (kind) {
            case Kind::kBlock: {
                std::vector<std::vector<int>> raw;
                for (int b = 0; b < num_blocks; ++b) {
                    std::vector<int> g;
                    for (int i = 0; i < block_size; ++i) g.push_back(b * block_size + i);
                    raw.push_back(std::move(g));
                }
                return Partition::of(std::move(raw), num_blocks * block_size);
            }
            case Kind::kSingleBlock: {
                std::vector<std::vector<int>> raw;
                std::vector<int> g;
                for (int i = 0; i < block_size; ++i) g.push_back(i);
                raw.push_back(std::move(g));
                for (int i = block_size; i < p; ++i) raw.push_back({i});
                return Partition::of(std::move(raw), p);
            }
            case Kind::kLatent: {
                std::vector<std::vector<int>> raw;
                int at = 0;
                for (int m : latent->sizes) {
                    std::vector<int> g;
                    for (int i = 0; i < m; ++i) g.push_back(at + i);
                    raw.push_back(std::move(g));
                    at += m;
                }
                return Partition::of(std::move(raw), at);
            }
            case Kind::kCustom: return std::nullopt;
        }
        return std::nullopt;
    }
};

/// Coefficient configuration. Catalogued names fix the support set; the
/// nonzero values (and sign flips, where applicable) are redrawn per run.
struct BetaSpec {
    std::string config;  // Aa..Ad, Ba..Bd, C, custom
    int p = 0;
    int n = 0;
    double noise_sigma = 0.0;       // enters the value rule of configuration C
    Eigen::VectorXd custom_beta;    // config == "custom"
};

struct BetaInstance {
    Eigen::VectorXd beta;
    std::vector<int> support;  // sorted
};

namespace detail {

inline std::vector<int> beta_support(const std::string& config) {
    std::vector<int> s;
    if (config == "Aa" || config == "Ac" || config == "C") {
        for (int j = 0; j < 20; ++j) s.push_back(j);
    } else if (config == "Ab" || config == "Ad") {
        for (int b = 0; b < 10; ++b) {
            s.push_back(10 * b);
            s.push_back(10 * b + 1);
        }
    } else if (config == "Ba" || config == "Bc") {
        for (int j = 0; j < 15; ++j) s.push_back(j);
        for (int j = 30; j < 35; ++j) s.push_back(j);
    } else if (config == "Bb" || config == "Bd") {
        for (int j = 0; j < 5; ++j) s.push_back(j);
        for (int j = 30; j < 45; ++j) s.push_back(j);
    } else {
        throw std::invalid_argument("unknown coefficient configuration: " + config);
    }
    return s;
}

}  // namespace detail

/// Realizes a coefficient vector from its configuration, deterministically in
/// the seed. Catalogued rules: values are a without-replacement draw from
/// {0.1, 0.2, ..., 2.0} over the fixed support; the sign-switch variants flip
/// exactly half of the active coefficients; configuration C alternates a
/// strong value 2 with a weak value tied to the noise level.
inline BetaInstance make_beta(const BetaSpec& spec, std::uint64_t seed) {
    if (spec.config == "custom") {
        BetaInstance out;
        out.beta = spec.custom_beta;
        for (Eigen::Index j = 0; j < out.beta.size(); ++j)
            if (out.beta(j) != 0.0) out.support.push_back(static_cast<int>(j));
        if (out.support.empty()) throw std::invalid_argument("custom coefficients are all zero");
        return out;
    }
    const std::vector<int> support = detail::beta_support(spec.config);
    const int s0 = static_cast<int>(support.size());
    if (spec.p < support.back() + 1)
        throw std::invalid_argument("configuration does not fit the covariate count");

    BetaInstance out;
    out.support = support;
    out.beta = Eigen::VectorXd::Zero(spec.p);
    Rng rng(seed);
    if (spec.config == "C") {
        if (spec.n < 1 || spec.noise_sigma <= 0.0)
            throw std::invalid_argument("configuration C needs n and the noise level");
        const double weak = (1.0 / 3.0) *
                            std::sqrt(std::log(static_cast<double>(spec.p)) / spec.n) *
                            spec.noise_sigma / 1.9;
        for (int k = 0; k < s0; ++k) out.beta(support[static_cast<std::size_t>(k)]) = k % 2 == 0 ? 2.0 : weak;
        return out;
    }

    std::vector<double> values;
    for (int k = 1; k <= s0; ++k) values.push_back(2.0 * k / s0);
    rng.shuffle(values);
    for (int k = 0; k < s0; ++k)
        out.beta(support[static_cast<std::size_t>(k)]) = values[static_cast<std::size_t>(k)];

    const bool flip = spec.config == "Ac" || spec.config == "Ad" || spec.config == "Bc" ||
                      spec.config == "Bd";
    if (flip) {
        std::vector<int> order(support.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (int k = 0; k < s0 / 2; ++k) {
            const int j = support[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
            out.beta(j) = -out.beta(j);
        }
    }
    return out;
}

/// n i.i.d. rows from N(0, Sigma) via the symmetric square root of Sigma.
inline DesignMatrix gen_gaussian_design(const Eigen::MatrixXd& sigma, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample size must be positive");
    const Eigen::MatrixXd root = symmetric_sqrt(sigma);
    const int p = static_cast<int>(sigma.rows());
    Eigen::MatrixXd draws(n, p);
    Rng rng(seed);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) draws(i, j) = rng.normal();
    return DesignMatrix::make(draws * root);
}

struct LatentDesign {
    DesignMatrix design;
    std::vector<int> signal_columns;  // where the latent coefficients land
};

/// Samples the latent one-active design directly from its mechanism: column
/// blocks share a latent draw, perturbed copies add independent noise.
inline LatentDesign gen_latent_design(const Eigen::MatrixXd& cov_u, const std::vector<int>& sizes,
                                      const Eigen::VectorXd& tau, int n, std::uint64_t seed) {
    const int q = static_cast<int>(sizes.size());
    if (tau.size() != q) throw std::invalid_argument("one tau per group is required");
    if (n < 1) throw std::invalid_argument("sample size must be positive");
    const Eigen::MatrixXd root = symmetric_sqrt(cov_u);
    Rng rng(seed);
    Eigen::MatrixXd u_draws(n, q);
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < q; ++r) u_draws(i, r) = rng.normal();
    const Eigen::MatrixXd u = u_draws * root;

    int p = 0;
    for (int m : sizes) p += m;
    Eigen::MatrixXd x(n, p);
    LatentDesign out;
    int at = 0;
    for (int r = 0; r < q; ++r) {
        out.signal_columns.push_back(at);
        x.col(at) = u.col(r);
        for (int j = 1; j < sizes[static_cast<std::size_t>(r)]; ++j) {
            Eigen::VectorXd perturbed(n);
            for (int i = 0; i < n; ++i) perturbed(i) = u(i, r) + tau(r) * rng.normal();
            x.col(at + j) = perturbed;
        }
        at += sizes[static_cast<std::size_t>(r)];
    }
    out.design = DesignMatrix::make(std::move(x));
    return out;
}

/// Places latent coefficients on the signal-carrying columns of the stacked
/// design; all perturbed copies get zero.
inline Eigen::VectorXd augment_latent_beta(const Eigen::VectorXd& beta_tilde,
                                           const std::vector<int>& sizes) {
    if (beta_tilde.size() != static_cast<Eigen::Index>(sizes.size()))
        throw std::invalid_argument("one coefficient per group is required");
    int p = 0;
    for (int m : sizes) p += m;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    int at = 0;
    for (std::size_t r = 0; r < sizes.size(); ++r) {
        beta(at) = beta_tilde(static_cast<Eigen::Index>(r));
        at += sizes[r];
    }
    return beta;
}

/// Selection-size / true-positive-rate points along a regularization path,
/// deduplicated by size keeping the best rate.
struct ScreeningCurve {
    std::vector<int> sizes;   // ascending
    std::vector<double> tpr;

    /// Best rate achieved with at most `s` selected variables.
    double tpr_at(int s) const {
        double best = 0.0;
        for (std::size_t i = 0; i < sizes.size() && sizes[i] <= s; ++i)
            best = std::max(best, tpr[i]);
        return best;
    }
};

inline ScreeningCurve screening_curve_from_path(const std::vector<SelectionResult>& path,
                                                const std::vector<int>& s0) {
    std::map<int, double> best;
    for (const auto& sel : path) {
        const ScreeningPoint pt = screening_eval(sel, s0);
        auto [it, inserted] = best.emplace(pt.selected, pt.tpr);
        if (!inserted) it->second = std::max(it->second, pt.tpr);
    }
    ScreeningCurve curve;
    for (const auto& [size, rate] : best) {
        curve.sizes.push_back(size);
        curve.tpr.push_back(rate);
    }
    return curve;
}

/// A reproducible experiment description.
struct Scenario {
    std::string name;
    SigmaSpec sigma_spec;
    BetaSpec beta_spec;
    double noise_sigma = 3.0;
    int n = 100;
    int p = 1000;
    std::uint64_t seed = 1;
    int n_test = 100;
};

/// Catalogued experiment configurations. The design dimensions are fixed at
/// n = 100, p = 1000 with 20 active coefficients.
inline Scenario scenario_catalog(const std::string& name, double noise_sigma = 3.0,
                                 std::uint64_t seed = 1) {
    Scenario sc;
    sc.name = name;
    sc.noise_sigma = noise_sigma;
    sc.seed = seed;
    sc.n = 100;
    sc.p = 1000;
    sc.n_test = sc.n;
    if (name == "Aa" || name == "Ab" || name == "Ac" || name == "Ad") {
        sc.sigma_spec = SigmaSpec::block(100, 10, 0.9);
    } else if (name == "Ba" || name == "Bb" || name == "Bc" || name == "Bd") {
        sc.sigma_spec = SigmaSpec::single_block(1000, 30, 0.9);
    } else if (name == "C") {
        sc.sigma_spec = SigmaSpec::block(500, 2, 0.9);
    } else {
        throw std::invalid_argument("unknown scenario: " + name);
    }
    sc.beta_spec = BetaSpec{name, sc.p, sc.n, sc.noise_sigma, {}};
    return sc;
}

struct ClustererSpec {
    enum class Kind { kCancorAuto, kCorr, kCancorTau };
    Kind kind = Kind::kCancorAuto;
    double tau = 0.5;
    double rank_tol = kDefaultRankTol;
};

struct GridSpec {
    int n_lambda = 100;
    double min_ratio = 1e-3;
};

struct RunOptions {
    bool with_cv = true;
    int cv_folds = 10;
};

struct MethodSummary {
    std::string method;
    std::vector<double> mse_runs;       // path-minimal test error per run
    std::vector<double> lambda_at_min;  // penalty attaining it
    double mse_mean = 0.0;
    double mse_sd = 0.0;
    std::vector<double> cv_mse_runs;    // test error at the CV-selected penalty
    std::vector<double> cv_lambda;
    double cv_mse_mean = 0.0;
    double cv_mse_sd = 0.0;
    ScreeningCurve mean_curve;          // step-averaged rate on sizes 0..p
};

struct RunResult {
    std::string scenario_name;
    std::uint64_t seed = 0;
    std::string rng_id;
    int n = 0;
    int p = 0;
    double noise_sigma = 0.0;
    int runs = 0;
    Partition partition;
    std::vector<int> support;
    std::vector<MethodSummary> methods;
    double wall_seconds = 0.0;  // informational only, never serialized
};

namespace detail {

inline void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / (static_cast<double>(v.size()) - 1.0)) : 0.0;
}

inline Eigen::Index grid_index_of(const Eigen::VectorXd& grid, double lambda) {
    Eigen::Index at = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double d = std::abs(grid(i) - lambda);
        if (d < gap) {
            gap = d;
            at = i;
        }
    }
    return at;
}

}  // namespace detail

/// Runs a catalogued or custom experiment: one fixed design per scenario,
/// coefficients and noise redrawn each run, every requested method fitted
/// along a shared penalty-grid shape, and the test error / screening metrics
/// aggregated across runs. The clustering is response-independent and is
/// computed once on the fixed design. Reported `mse_runs` are the smallest
/// test error along each method's path; when cross-validation is enabled the
/// error at the CV-selected penalty is reported alongside.
inline RunResult run_scenario(const Scenario& sc, const std::vector<std::string>& methods,
                              const ClustererSpec& clusterer = {}, const GridSpec& grid = {},
                              int runs = 50, const RunOptions& opts = {}) {
    if (runs < 1) throw std::invalid_argument("at least one run is required");
    if (sc.n_test != sc.n)
        throw std::invalid_argument("test responses are drawn on the fixed design; n_test must equal n");
    const auto started = std::chrono::steady_clock::now();

    const Eigen::MatrixXd sigma = sc.sigma_spec.build();
    if (static_cast<int>(sigma.rows()) != sc.p)
        throw std::invalid_argument("covariance size does not match p");
    const DesignMatrix x = gen_gaussian_design(sigma, sc.n, derive_seed(sc.seed, 0));

    RunResult result;
    result.scenario_name = sc.name;
    result.seed = sc.seed;
    result.rng_id = kRngId;
    result.n = sc.n;
    result.p = sc.p;
    result.noise_sigma = sc.noise_sigma;
    result.runs = runs;

    switch (clusterer.kind) {
        case ClustererSpec::Kind::kCancorAuto:
            result.partition = cancor_cluster_auto(x, clusterer.rank_tol).partition;
            break;
        case ClustererSpec::Kind::kCorr:
            result.partition = corr_hclust(x).partition;
            break;
        case ClustererSpec::Kind::kCancorTau:
            result.partition = cancor_cluster(x, clusterer.tau, clusterer.rank_tol).partition;
            break;
    }

    const bool want_crl = std::find(methods.begin(), methods.end(), "crl") != methods.end();
    const bool want_cgl = std::find(methods.begin(), methods.end(), "cgl") != methods.end();
    std::optional<DesignMatrix> reps;
    if (want_crl) reps = cluster_representatives(x, result.partition);
    std::optional<GroupLassoProblem> cgl_problem;
    if (want_cgl) cgl_problem.emplace(x.data, result.partition);

    std::map<std::string, MethodSummary> summaries;
    std::map<std::string, std::vector<double>> tpr_accum;  // step curve sums over sizes 0..p
    for (const auto& m : methods) {
        if (m != "lasso" && m != "crl" && m != "cgl")
            throw std::invalid_argument("unknown method: " + m);
        summaries[m].method = m;
        tpr_accum[m].assign(static_cast<std::size_t>(sc.p) + 1, 0.0);
    }

    const double n_test = static_cast<double>(sc.n);
    for (int run = 0; run < runs; ++run) {
        const BetaInstance beta =
            make_beta(sc.beta_spec, derive_seed(sc.seed, 1000000ULL + static_cast<std::uint64_t>(run)));
        if (run == 0) result.support = beta.support;
        const Eigen::VectorXd signal = x.data * beta.beta;
        Rng train_rng(derive_seed(sc.seed, 2000000ULL + static_cast<std::uint64_t>(run)));
        Rng test_rng(derive_seed(sc.seed, 3000000ULL + static_cast<std::uint64_t>(run)));
        Eigen::VectorXd y(sc.n), y_test(sc.n);
        for (int i = 0; i < sc.n; ++i) y(i) = signal(i) + sc.noise_sigma * train_rng.normal();
        for (int i = 0; i < sc.n; ++i) y_test(i) = signal(i) + sc.noise_sigma * test_rng.normal();

        for (const auto& m : methods) {
            MethodSummary& summary = summaries[m];
            Eigen::VectorXd lambdas;
            std::vector<Eigen::VectorXd> predictions;
            std::vector<SelectionResult> selections;
            if (m == "lasso") {
                const PathResult path = lasso_path(x.data, y, grid.n_lambda, grid.min_ratio);
                lambdas = path.lambdas;
                for (const auto& fit : path.fits) {
                    predictions.push_back(x.data * fit.beta);
                    SelectionResult sel;
                    sel.method = SelectionResult::Method::kLasso;
                    sel.lambda = fit.lambda;
                    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
                        if (fit.beta(j) != 0.0) sel.selected_variables.push_back(static_cast<int>(j));
                    selections.push_back(std::move(sel));
                }
            } else if (m == "crl") {
                const PathResult path = lasso_path(reps->data, y, grid.n_lambda, grid.min_ratio);
                lambdas = path.lambdas;
                for (const auto& fit : path.fits) {
                    predictions.push_back(reps->data * fit.beta);
                    SelectionResult sel;
                    sel.method = SelectionResult::Method::kCrl;
                    sel.lambda = fit.lambda;
                    for (Eigen::Index r = 0; r < fit.beta.size(); ++r)
                        if (fit.beta(r) != 0.0) sel.selected_clusters.push_back(static_cast<int>(r));
                    sel.selected_variables =
                        detail::union_of_groups(result.partition, sel.selected_clusters);
                    selections.push_back(std::move(sel));
                }
            } else {
                const GroupPathResult path =
                    group_lasso_path(*cgl_problem, y, grid.n_lambda, grid.min_ratio);
                lambdas = path.lambdas;
                for (const auto& fit : path.fits) {
                    predictions.push_back(x.data * fit.beta);
                    SelectionResult sel;
                    sel.method = SelectionResult::Method::kCgl;
                    sel.lambda = fit.lambda;
                    for (int r = 0; r < result.partition.q(); ++r)
                        if (fit.active_groups[static_cast<std::size_t>(r)])
                            sel.selected_clusters.push_back(r);
                    sel.selected_variables =
                        detail::union_of_groups(result.partition, sel.selected_clusters);
                    selections.push_back(std::move(sel));
                }
            }

            double best_mse = std::numeric_limits<double>::infinity();
            double best_lambda = lambdas.size() > 0 ? lambdas(0) : 0.0;
            Eigen::VectorXd path_mse(lambdas.size());
            for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
                path_mse(i) = (y_test - predictions[static_cast<std::size_t>(i)]).squaredNorm() / n_test;
                if (path_mse(i) < best_mse) {
                    best_mse = path_mse(i);
                    best_lambda = lambdas(i);
                }
            }
            summary.mse_runs.push_back(best_mse);
            summary.lambda_at_min.push_back(best_lambda);

            const ScreeningCurve curve = screening_curve_from_path(selections, beta.support);
            std::vector<double>& accum = tpr_accum[m];
            for (int s = 0; s <= sc.p; ++s) accum[static_cast<std::size_t>(s)] += curve.tpr_at(s);

            if (opts.with_cv) {
                const std::uint64_t cv_seed =
                    derive_seed(sc.seed, 4000000ULL + static_cast<std::uint64_t>(run));
                CvResult cv;
                if (m == "lasso") {
                    cv = cv_select(x.data, y, FitMethod::kLasso, nullptr, opts.cv_folds, cv_seed,
                                   grid.n_lambda, grid.min_ratio);
                } else if (m == "crl") {
                    cv = cv_select(reps->data, y, FitMethod::kLasso, nullptr, opts.cv_folds, cv_seed,
                                   grid.n_lambda, grid.min_ratio);
                } else {
                    cv = cv_select(x.data, y, FitMethod::kGroupLasso, &result.partition,
                                   opts.cv_folds, cv_seed, grid.n_lambda, grid.min_ratio);
                }
                const Eigen::Index at = detail::grid_index_of(lambdas, cv.lambda_min);
                summary.cv_mse_runs.push_back(path_mse(at));
                summary.cv_lambda.push_back(cv.lambda_min);
            }
        }
    }

    for (const auto& m : methods) {
        MethodSummary& summary = summaries[m];
        detail::mean_sd(summary.mse_runs, summary.mse_mean, summary.mse_sd);
        if (!summary.cv_mse_runs.empty())
            detail::mean_sd(summary.cv_mse_runs, summary.cv_mse_mean, summary.cv_mse_sd);
        summary.mean_curve.sizes.resize(static_cast<std::size_t>(sc.p) + 1);
        summary.mean_curve.tpr.resize(static_cast<std::size_t>(sc.p) + 1);
        for (int s = 0; s <= sc.p; ++s) {
            summary.mean_curve.sizes[static_cast<std::size_t>(s)] = s;
            summary.mean_curve.tpr[static_cast<std::size_t>(s)] =
                tpr_accum[m][static_cast<std::size_t>(s)] / static_cast<double>(runs);
        }
        result.methods.push_back(std::move(summary));
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace cluslasso
