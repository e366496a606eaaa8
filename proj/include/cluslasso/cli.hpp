#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cluslasso/clustering.hpp"
#include "cluslasso/cross_validation.hpp"
#include "cluslasso/group_lasso.hpp"
#include "cluslasso/io.hpp"
#include "cluslasso/lasso.hpp"
#include "cluslasso/linalg.hpp"
#include "cluslasso/penalty_levels.hpp"
#include "cluslasso/pipelines.hpp"
#include "cluslasso/rng.hpp"
#include "cluslasso/simulation.hpp"
#include "cluslasso/theory.hpp"

namespace cluslasso::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr const char* kSeedEnvVar = "CLUSLASSO_SEED";

namespace detail {

using nlohmann::json;

inline json sigma_spec_to_json(const SigmaSpec& spec) {
    json doc;
    switch (spec.kind) {
        case SigmaSpec::Kind::kBlock:
            doc["kind"] = "block";
            doc["num_blocks"] = spec.num_blocks;
            doc["block_size"] = spec.block_size;
            doc["rho"] = spec.rho;
            break;
        case SigmaSpec::Kind::kSingleBlock:
            doc["kind"] = "single_block";
            doc["p"] = spec.p;
            doc["block_size"] = spec.block_size;
            doc["rho"] = spec.rho;
            break;
        case SigmaSpec::Kind::kLatent: {
            doc["kind"] = "latent";
            const LatentSpec& latent = *spec.latent;
            doc["sizes"] = latent.sizes;
            doc["tau"] = std::vector<double>(latent.tau.data(), latent.tau.data() + latent.tau.size());
            doc["beta_tilde"] = std::vector<double>(latent.beta_tilde.data(),
                                                    latent.beta_tilde.data() + latent.beta_tilde.size());
            std::vector<std::vector<double>> rows;
            for (Eigen::Index i = 0; i < latent.cov_u.rows(); ++i)
                rows.emplace_back(latent.cov_u.row(i).begin(), latent.cov_u.row(i).end());
            doc["cov_u"] = rows;
            break;
        }
        case SigmaSpec::Kind::kCustom: {
            doc["kind"] = "custom";
            std::vector<std::vector<double>> rows;
            for (Eigen::Index i = 0; i < spec.custom.rows(); ++i)
                rows.emplace_back(spec.custom.row(i).begin(), spec.custom.row(i).end());
            doc["matrix"] = rows;
            break;
        }
    }
    return doc;
}

inline SigmaSpec sigma_spec_from_json(const json& doc) {
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "block")
        return SigmaSpec::block(doc.at("num_blocks").get<int>(), doc.at("block_size").get<int>(),
                                doc.at("rho").get<double>());
    if (kind == "single_block")
        return SigmaSpec::single_block(doc.at("p").get<int>(), doc.at("block_size").get<int>(),
                                       doc.at("rho").get<double>());
    if (kind == "latent") {
        LatentSpec latent;
        latent.sizes = doc.at("sizes").get<std::vector<int>>();
        const auto tau = doc.at("tau").get<std::vector<double>>();
        const auto bt = doc.at("beta_tilde").get<std::vector<double>>();
        latent.tau = Eigen::Map<const Eigen::VectorXd>(tau.data(), static_cast<Eigen::Index>(tau.size()));
        latent.beta_tilde =
            Eigen::Map<const Eigen::VectorXd>(bt.data(), static_cast<Eigen::Index>(bt.size()));
        const auto rows = doc.at("cov_u").get<std::vector<std::vector<double>>>();
        latent.cov_u.resize(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                latent.cov_u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        return SigmaSpec::latent_spec(std::move(latent));
    }
    if (kind == "custom") {
        const auto rows = doc.at("matrix").get<std::vector<std::vector<double>>>();
        Eigen::MatrixXd sigma(static_cast<Eigen::Index>(rows.size()),
                              static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        return SigmaSpec::custom_matrix(std::move(sigma));
    }
    throw std::invalid_argument("unknown covariance kind: " + kind);
}

inline json scenario_to_json(const Scenario& sc) {
    json doc;
    doc["schema"] = "cluslasso.scenario/1";
    doc["name"] = sc.name;
    doc["n"] = sc.n;
    doc["p"] = sc.p;
    doc["n_test"] = sc.n_test;
    doc["noise_sigma"] = sc.noise_sigma;
    doc["seed"] = sc.seed;
    doc["sigma_spec"] = sigma_spec_to_json(sc.sigma_spec);
    json beta;
    beta["config"] = sc.beta_spec.config;
    if (sc.beta_spec.config == "custom")
        beta["values"] = std::vector<double>(sc.beta_spec.custom_beta.data(),
                                             sc.beta_spec.custom_beta.data() +
                                                 sc.beta_spec.custom_beta.size());
    doc["beta_spec"] = beta;
    return doc;
}

inline Scenario scenario_from_json(const json& doc) {
    Scenario sc;
    sc.name = doc.at("name").get<std::string>();
    sc.n = doc.at("n").get<int>();
    sc.p = doc.at("p").get<int>();
    sc.n_test = doc.value("n_test", sc.n);
    sc.noise_sigma = doc.at("noise_sigma").get<double>();
    sc.seed = doc.value("seed", static_cast<std::uint64_t>(1));
    sc.sigma_spec = sigma_spec_from_json(doc.at("sigma_spec"));
    const json& beta = doc.at("beta_spec");
    sc.beta_spec.config = beta.at("config").get<std::string>();
    sc.beta_spec.p = sc.p;
    sc.beta_spec.n = sc.n;
    sc.beta_spec.noise_sigma = sc.noise_sigma;
    if (sc.beta_spec.config == "custom") {
        const auto values = beta.at("values").get<std::vector<double>>();
        sc.beta_spec.custom_beta =
            Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
    return sc;
}

struct SeedChoice {
    std::uint64_t value = 1;
    std::string source = "default";
};

inline SeedChoice resolve_seed(bool flag_present, std::uint64_t flag_value,
                               const std::optional<std::uint64_t>& config_value) {
    if (flag_present) return {flag_value, "flag"};
    if (config_value) return {*config_value, "config"};
    if (const char* env = std::getenv(kSeedEnvVar)) {
        char* end = nullptr;
        const unsigned long long parsed = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0') return {static_cast<std::uint64_t>(parsed), "env"};
        throw std::invalid_argument(std::string(kSeedEnvVar) + " is not an integer");
    }
    return {1, "default"};
}

inline std::optional<json> load_config(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return json::parse(read_file(path));
}

// Options absent from the command line fall back to the config document.
template <class T>
void overlay(const CLI::App& app, const std::optional<json>& config, const std::string& flag,
             const std::string& key, T& value) {
    if (app.count(flag) == 0 && config && config->contains(key)) value = config->at(key).get<T>();
}

inline void write_snapshot(const std::filesystem::path& out_dir, json snapshot) {
    snapshot["schema"] = "cluslasso.config/1";
    snapshot["rng"] = kRngId;
    atomic_write(out_dir / "config_snapshot.txt", snapshot.dump(2) + "\n");
}

inline void ensure_out_dir(const std::string& out) {
    if (out.empty()) throw std::invalid_argument("--out directory is required");
    std::filesystem::create_directories(out);
}

inline std::string io_trim(const std::string& s) { return cluslasso::detail::trim(s); }

inline std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string field;
    while (std::getline(in, field, ',')) {
        if (io_trim(field).empty()) continue;
        out.push_back(std::stoi(field));
    }
    return out;
}

inline std::vector<std::string> parse_string_list(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string field;
    while (std::getline(in, field, ',')) {
        const std::string t = io_trim(field);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
    std::string design_path;
    std::string method = "cancor";
    std::string tau = "auto";
    double rank_tol = kDefaultRankTol;
    std::string out;
    bool svg = false;
};

inline int run_cluster(const ClusterArgs& args) {
    ensure_out_dir(args.out);
    const DesignMatrix x = read_design_csv(args.design_path);
    if (x.p() < 2) throw std::invalid_argument("clustering needs at least two columns");

    Partition partition;
    MergeTrace trace;
    bool cancor = args.method == "cancor";
    int b_hat = -1;
    if (cancor) {
        if (args.tau == "auto") {
            AutoClusterResult res = cancor_cluster_auto(x, args.rank_tol);
            partition = std::move(res.partition);
            trace = std::move(res.trace);
            b_hat = res.b_hat;
        } else {
            const double tau = std::stod(args.tau);
            ClusterResult res = cancor_cluster(x, tau, args.rank_tol);
            partition = std::move(res.partition);
            trace = std::move(res.trace);
        }
    } else if (args.method == "corr") {
        ClusterResult res = corr_hclust(x);
        partition = std::move(res.partition);
        trace = std::move(res.trace);
    } else {
        throw std::invalid_argument("unknown clustering method: " + args.method);
    }

    const std::filesystem::path out_dir(args.out);
    atomic_write(out_dir / "partition.txt", partition_to_text(partition));
    atomic_write(out_dir / "partition.json", partition_to_json(partition).dump(2) + "\n");

    std::string trace_csv = "b,value\n";
    PlotSeries series{cancor ? "max cancor" : "linkage height", {}, {}};
    if (cancor) {
        trace_csv += "0," + fmt_double(trace.initial_value) + "\n";
        series.x.push_back(0);
        series.y.push_back(trace.initial_value);
    }
    for (const MergeStep& step : trace.steps) {
        trace_csv += std::to_string(step.iteration) + "," + fmt_double(step.value) + "\n";
        series.x.push_back(step.iteration);
        series.y.push_back(step.value);
    }
    atomic_write(out_dir / "trace.csv", trace_csv);
    if (args.svg)
        atomic_write(out_dir / "trace.svg",
                     svg_plot({series}, "iteration", cancor ? "max canonical correlation"
                                                            : "linkage height"));

    json snapshot;
    snapshot["command"] = "cluster";
    snapshot["design"] = args.design_path;
    snapshot["method"] = args.method;
    snapshot["tau"] = args.tau;
    snapshot["rank_tol"] = args.rank_tol;
    snapshot["out"] = args.out;
    snapshot["svg"] = args.svg;
    write_snapshot(out_dir, std::move(snapshot));

    std::cout << "clustered " << x.p() << " variables into " << partition.q() << " groups";
    if (b_hat >= 0) std::cout << " (cutoff iteration " << b_hat << ")";
    std::cout << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    std::string design_path;
    std::string response_path;
    std::string method;
    std::string partition = "auto";
    std::string lambda = "cv";
    int cv_folds = 10;
    int n_lambda = 100;
    double min_ratio = 1e-3;
    bool center = false;
    bool standardize = false;
    double rank_tol = kDefaultRankTol;
    std::uint64_t seed = 1;
    std::string seed_source = "default";
    std::string out;
};

inline int run_fit(const FitArgs& args) {
    ensure_out_dir(args.out);
    const std::filesystem::path out_dir(args.out);
    DesignMatrix x = read_design_csv(args.design_path);
    Eigen::VectorXd y = read_response_csv(args.response_path);
    if (y.size() != x.n())
        throw std::invalid_argument("design has " + std::to_string(x.n()) + " rows but response has " +
                                    std::to_string(y.size()));
    if (args.method != "crl" && args.method != "cgl" && args.method != "lasso")
        throw std::invalid_argument("unknown fit method: " + args.method);
    if (args.center) {
        x.data = x.data.rowwise() - x.data.colwise().mean().eval();
        y = y.array() - y.mean();
    }

    const bool needs_partition = args.method != "lasso";
    Partition partition;
    if (needs_partition) {
        partition = args.partition == "auto"
                        ? cancor_cluster_auto(x, args.rank_tol).partition
                        : load_partition(args.partition, static_cast<int>(x.p()));
        atomic_write(out_dir / "partition.txt", partition_to_text(partition));
    }

    std::optional<DesignMatrix> reps;
    if (args.method == "crl") reps = cluster_representatives(x, partition);
    const Eigen::MatrixXd& fit_design = args.method == "crl" ? reps->data : x.data;

    double lambda = 0.0;
    std::string lambda_mode;
    std::optional<CvResult> cv;
    std::string path_csv;
    if (args.lambda == "cv") {
        lambda_mode = "cv";
        if (args.method == "cgl") {
            cv = cv_select(x.data, y, FitMethod::kGroupLasso, &partition, args.cv_folds, args.seed,
                           args.n_lambda, args.min_ratio);
        } else {
            cv = cv_select(fit_design, y, FitMethod::kLasso, nullptr, args.cv_folds, args.seed,
                           args.n_lambda, args.min_ratio);
        }
        lambda = cv->lambda_min;
        std::string curve = "lambda,mean,se\n";
        for (Eigen::Index i = 0; i < cv->curve.lambdas.size(); ++i)
            curve += fmt_double(cv->curve.lambdas(i)) + "," + fmt_double(cv->curve.mean(i)) + "," +
                     fmt_double(cv->curve.se(i)) + "\n";
        atomic_write(out_dir / "cv_curve.csv", curve);
    } else if (args.lambda == "path") {
        lambda_mode = "path";
        path_csv = "lambda,n_selected_variables,kkt_residual,objective\n";
        if (args.method == "cgl") {
            const GroupLassoProblem problem(x.data, partition);
            const GroupPathResult path = group_lasso_path(problem, y, args.n_lambda, args.min_ratio);
            for (const auto& fit : path.fits) {
                int selected = 0;
                for (Eigen::Index j = 0; j < fit.beta.size(); ++j) selected += fit.beta(j) != 0.0;
                path_csv += fmt_double(fit.lambda) + "," + std::to_string(selected) + "," +
                            fmt_double(fit.kkt_residual) + "," + fmt_double(fit.objective) + "\n";
            }
            lambda = path.lambdas(path.lambdas.size() - 1);
        } else {
            const PathResult path = lasso_path(fit_design, y, args.n_lambda, args.min_ratio);
            for (const auto& fit : path.fits) {
                int selected = 0;
                for (Eigen::Index j = 0; j < fit.beta.size(); ++j) selected += fit.beta(j) != 0.0;
                path_csv += fmt_double(fit.lambda) + "," + std::to_string(selected) + "," +
                            fmt_double(fit.kkt_residual) + "," + fmt_double(fit.objective) + "\n";
            }
            lambda = path.lambdas(path.lambdas.size() - 1);
        }
        atomic_write(out_dir / "path.csv", path_csv);
    } else {
        lambda_mode = "fixed";
        lambda = std::stod(args.lambda);
    }

    SelectionResult selection;
    if (args.method == "crl") {
        selection = crl_fit(x, y, partition, lambda, args.standardize);
    } else if (args.method == "cgl") {
        selection = cgl_fit(x, y, partition, lambda);
    } else {
        selection = lasso_select(x, y, lambda);
    }
    const bool converged = selection.lasso_fit ? selection.lasso_fit->converged
                                               : selection.group_fit->converged;
    const double kkt = selection.lasso_fit ? selection.lasso_fit->kkt_residual
                                           : selection.group_fit->kkt_residual;
    const double objective = selection.lasso_fit ? selection.lasso_fit->objective
                                                 : selection.group_fit->objective;

    std::string coeffs;
    if (args.method == "crl") {
        coeffs = "cluster,coefficient\n";
        const Eigen::VectorXd& beta = selection.lasso_fit->beta;
        for (Eigen::Index r = 0; r < beta.size(); ++r)
            coeffs += std::to_string(r) + "," + fmt_double(beta(r)) + "\n";
    } else {
        coeffs = "variable,name,coefficient\n";
        const Eigen::VectorXd& beta = selection.lasso_fit ? selection.lasso_fit->beta
                                                          : selection.group_fit->beta;
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            const std::string name =
                x.col_names.empty() ? "" : x.col_names[static_cast<std::size_t>(j)];
            coeffs += std::to_string(j) + "," + name + "," + fmt_double(beta(j)) + "\n";
        }
    }
    atomic_write(out_dir / "coefficients.csv", coeffs);

    DocWriter doc("cluslasso.selection/1");
    doc.field("method", args.method);
    doc.field("lambda", lambda);
    doc.field("lambda_mode", lambda_mode);
    if (cv) {
        doc.field("lambda_min", cv->lambda_min);
        doc.field("lambda_1se", cv->lambda_1se);
    }
    doc.field("kkt_residual", kkt);
    doc.field("converged", converged);
    doc.field("objective", objective);
    doc.field("n_selected_clusters", selection.selected_clusters.size());
    doc.field_list("selected_clusters", selection.selected_clusters);
    doc.field("n_selected_variables", selection.selected_variables.size());
    doc.field_list("selected_variables", selection.selected_variables);
    atomic_write(out_dir / "selection.txt", doc.str());

    json snapshot;
    snapshot["command"] = "fit";
    snapshot["design"] = args.design_path;
    snapshot["response"] = args.response_path;
    snapshot["method"] = args.method;
    snapshot["partition"] = args.partition;
    snapshot["lambda"] = args.lambda;
    snapshot["cv_folds"] = args.cv_folds;
    snapshot["n_lambda"] = args.n_lambda;
    snapshot["min_ratio"] = args.min_ratio;
    snapshot["center"] = args.center;
    snapshot["standardize"] = args.standardize;
    snapshot["rank_tol"] = args.rank_tol;
    snapshot["seed"] = args.seed;
    snapshot["seed_source"] = args.seed_source;
    snapshot["out"] = args.out;
    write_snapshot(out_dir, std::move(snapshot));

    std::cout << "fit " << args.method << " at lambda " << fmt_double(lambda) << ": "
              << selection.selected_variables.size() << " variables selected\n";
    if (!converged) {
        std::cerr << "solver did not reach the requested tolerance (kkt residual " << kkt << ")\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string scenario;
    std::string methods = "crl,cgl,lasso";
    int runs = 50;
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string seed_source = "default";
    double sigma = 3.0;
    bool sigma_given = false;
    std::string clusterer = "cancor-auto";
    int n_lambda = 100;
    double min_ratio = 1e-3;
    bool with_cv = true;
    int cv_folds = 10;
    bool svg = false;
    std::string out;
};

inline int run_simulate(const SimulateArgs& args) {
    ensure_out_dir(args.out);
    const std::filesystem::path out_dir(args.out);

    Scenario sc;
    bool from_file = false;
    try {
        sc = scenario_catalog(args.scenario, args.sigma, args.seed);
    } catch (const std::invalid_argument&) {
        if (!std::filesystem::exists(args.scenario))
            throw std::invalid_argument("unknown scenario: " + args.scenario);
        sc = scenario_from_json(json::parse(read_file(args.scenario)));
        from_file = true;
        if (args.seed_given) sc.seed = args.seed;
        if (args.sigma_given) {
            sc.noise_sigma = args.sigma;
            sc.beta_spec.noise_sigma = args.sigma;
        }
    }

    ClustererSpec clusterer;
    if (args.clusterer == "cancor-auto") {
        clusterer.kind = ClustererSpec::Kind::kCancorAuto;
    } else if (args.clusterer == "corr") {
        clusterer.kind = ClustererSpec::Kind::kCorr;
    } else if (args.clusterer.rfind("tau:", 0) == 0) {
        clusterer.kind = ClustererSpec::Kind::kCancorTau;
        clusterer.tau = std::stod(args.clusterer.substr(4));
    } else {
        throw std::invalid_argument("unknown clusterer: " + args.clusterer);
    }

    const std::vector<std::string> methods = parse_string_list(args.methods);
    if (methods.empty()) throw std::invalid_argument("no methods requested");

    RunOptions opts;
    opts.with_cv = args.with_cv;
    opts.cv_folds = args.cv_folds;
    const RunResult result =
        run_scenario(sc, methods, clusterer, GridSpec{args.n_lambda, args.min_ratio}, args.runs, opts);

    std::string table = args.with_cv ? "method,mse_mean,mse_sd,cv_mse_mean,cv_mse_sd\n"
                                     : "method,mse_mean,mse_sd\n";
    for (const MethodSummary& m : result.methods) {
        table += m.method + "," + fmt_double(m.mse_mean) + "," + fmt_double(m.mse_sd);
        if (args.with_cv) table += "," + fmt_double(m.cv_mse_mean) + "," + fmt_double(m.cv_mse_sd);
        table += "\n";
    }
    atomic_write(out_dir / "mse_table.csv", table);

    std::vector<PlotSeries> series;
    for (const MethodSummary& m : result.methods) {
        std::string curve = "selected,tpr\n";
        PlotSeries s{m.method, {}, {}};
        for (std::size_t i = 0; i < m.mean_curve.sizes.size(); ++i) {
            curve += std::to_string(m.mean_curve.sizes[i]) + "," + fmt_double(m.mean_curve.tpr[i]) +
                     "\n";
            s.x.push_back(m.mean_curve.sizes[i]);
            s.y.push_back(m.mean_curve.tpr[i]);
        }
        atomic_write(out_dir / ("screening_" + m.method + ".csv"), curve);
        series.push_back(std::move(s));
    }
    if (args.svg)
        atomic_write(out_dir / "screening.svg", svg_plot(series, "selected variables", "true positive rate"));

    atomic_write(out_dir / "partition.txt", partition_to_text(result.partition));

    json snapshot;
    snapshot["command"] = "simulate";
    snapshot["scenario"] = args.scenario;
    snapshot["scenario_config"] = scenario_to_json(sc);
    snapshot["scenario_from_file"] = from_file;
    snapshot["methods"] = args.methods;
    snapshot["runs"] = args.runs;
    snapshot["seed"] = sc.seed;
    snapshot["seed_source"] = args.seed_source;
    snapshot["sigma"] = sc.noise_sigma;
    snapshot["clusterer"] = args.clusterer;
    snapshot["n_lambda"] = args.n_lambda;
    snapshot["min_ratio"] = args.min_ratio;
    snapshot["cv"] = args.with_cv;
    snapshot["cv_folds"] = args.cv_folds;
    snapshot["svg"] = args.svg;
    snapshot["out"] = args.out;
    write_snapshot(out_dir, std::move(snapshot));

    std::cout << "scenario " << sc.name << ": " << args.runs << " runs, "
              << result.partition.q() << " clusters\n";
    for (const MethodSummary& m : result.methods)
        std::cout << "  " << m.method << ": mse " << fmt_double(m.mse_mean) << " (sd "
                  << fmt_double(m.mse_sd) << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseArgs {
    std::string design_path;
    std::string partition = "auto";
    std::string active_groups;
    double constant = 0.5;
    double rank_tol = kDefaultRankTol;
    std::string out;
};

inline int run_diagnose(const DiagnoseArgs& args) {
    ensure_out_dir(args.out);
    const std::filesystem::path out_dir(args.out);
    const DesignMatrix x = read_design_csv(args.design_path);
    const Partition partition = args.partition == "auto"
                                    ? cancor_cluster_auto(x, args.rank_tol).partition
                                    : load_partition(args.partition, static_cast<int>(x.p()));
    const std::vector<int> active = parse_int_list(args.active_groups);
    const GroupCompatibilityReport report =
        group_compatibility_bound(x, partition, active, args.constant, args.rank_tol);

    DocWriter doc("cluslasso.compat_report/1");
    doc.field("constant_c", report.constant_c);
    doc.field("lambda_min_sq", report.lambda_min_sq);
    doc.field("rho", report.rho);
    doc.field("rho_active", report.rho_active);
    doc.field("incoherence_between_ok", report.incoherence_between_ok);
    doc.field("incoherence_within_ok", report.incoherence_within_ok);
    doc.field("pseudo_inverse_used", report.pseudo_inverse_used);
    doc.begin("bound_chain");
    doc.field("direct", report.bound_direct);
    doc.field("incoherence", report.bound_incoherence);
    doc.field("diagonal", report.bound_diagonal);
    doc.end();
    doc.field("mean_size", report.mean_size);
    doc.field("mean_active_size", report.mean_active_size);
    doc.field_list("group_sizes", report.group_sizes);
    doc.field_list("active_groups", report.active_groups);
    atomic_write(out_dir / "compat_report.txt", doc.str());

    json snapshot;
    snapshot["command"] = "diagnose";
    snapshot["design"] = args.design_path;
    snapshot["partition"] = args.partition;
    snapshot["active_groups"] = args.active_groups;
    snapshot["constant"] = args.constant;
    snapshot["rank_tol"] = args.rank_tol;
    snapshot["out"] = args.out;
    write_snapshot(out_dir, std::move(snapshot));

    std::cout << "compatibility bound chain: " << fmt_double(report.bound_direct) << " / "
              << fmt_double(report.bound_incoherence) << " / " << fmt_double(report.bound_diagonal)
              << (report.incoherence_between_ok && report.incoherence_within_ok
                      ? " (incoherence conditions hold)\n"
                      : " (incoherence conditions fail)\n");
    return kExitOk;
}

}  // namespace detail

/// Entry point shared by the binary and in-process callers. argv[0] is the
/// program name.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"clustering of correlated covariates and cluster-based sparse estimation"};
    app.require_subcommand(1);

    std::string config_path;

    auto* cluster = app.add_subcommand("cluster", "cluster the columns of a design matrix");
    detail::ClusterArgs cluster_args;
    cluster->add_option("design", cluster_args.design_path, "design matrix CSV")->required();
    cluster->add_option("--method", cluster_args.method, "cancor|corr");
    cluster->add_option("--tau", cluster_args.tau, "separation threshold in (0,1), or 'auto'");
    cluster->add_option("--rank-tol", cluster_args.rank_tol, "relative eigenvalue cutoff");
    cluster->add_option("--out", cluster_args.out, "output directory");
    cluster->add_flag("--svg", cluster_args.svg, "also render the trace as SVG");
    cluster->add_option("--config", config_path, "JSON config supplying unset options");

    auto* fit = app.add_subcommand("fit", "fit a cluster-based sparse estimator");
    detail::FitArgs fit_args;
    std::uint64_t fit_seed_flag = 1;
    fit->add_option("design", fit_args.design_path, "design matrix CSV")->required();
    fit->add_option("response", fit_args.response_path, "single-column response CSV")->required();
    fit->add_option("--method", fit_args.method, "crl|cgl|lasso");
    fit->add_option("--partition", fit_args.partition, "partition file, or 'auto'");
    fit->add_option("--lambda", fit_args.lambda, "penalty value, 'path' or 'cv'");
    fit->add_option("--cv-folds", fit_args.cv_folds, "folds for --lambda cv");
    fit->add_option("--n-lambda", fit_args.n_lambda, "penalty grid size");
    fit->add_option("--min-ratio", fit_args.min_ratio, "smallest grid value relative to lambda_max");
    fit->add_flag("--center", fit_args.center, "pre-center response and columns");
    fit->add_flag("--standardize", fit_args.standardize, "standardize representatives before the fit");
    fit->add_option("--rank-tol", fit_args.rank_tol, "relative eigenvalue cutoff");
    fit->add_option("--seed", fit_seed_flag, "fold-assignment seed");
    fit->add_option("--out", fit_args.out, "output directory");
    fit->add_option("--config", config_path, "JSON config supplying unset options");

    auto* simulate = app.add_subcommand("simulate", "run a simulation scenario");
    detail::SimulateArgs sim_args;
    std::uint64_t sim_seed_flag = 1;
    simulate->add_option("--scenario", sim_args.scenario, "catalog name or scenario JSON file");
    simulate->add_option("--methods", sim_args.methods, "comma-separated: crl,cgl,lasso");
    simulate->add_option("--runs", sim_args.runs, "simulation runs");
    simulate->add_option("--seed", sim_seed_flag, "base seed");
    simulate->add_option("--sigma", sim_args.sigma, "noise standard deviation");
    simulate->add_option("--clusterer", sim_args.clusterer, "cancor-auto|corr|tau:<value>");
    simulate->add_option("--n-lambda", sim_args.n_lambda, "penalty grid size");
    simulate->add_option("--min-ratio", sim_args.min_ratio, "smallest grid value relative to lambda_max");
    simulate->add_flag("!--no-cv", sim_args.with_cv, "skip the cross-validated variant");
    simulate->add_option("--cv-folds", sim_args.cv_folds, "folds for the CV variant");
    simulate->add_flag("--svg", sim_args.svg, "render screening curves as SVG");
    simulate->add_option("--out", sim_args.out, "output directory");
    simulate->add_option("--config", config_path, "JSON config supplying unset options");

    auto* diagnose = app.add_subcommand("diagnose", "compatibility diagnostics for a grouped design");
    detail::DiagnoseArgs diag_args;
    diagnose->add_option("design", diag_args.design_path, "design matrix CSV")->required();
    diagnose->add_option("--partition", diag_args.partition, "partition file, or 'auto'");
    diagnose->add_option("--active-groups", diag_args.active_groups, "comma-separated group indices");
    diagnose->add_option("--constant", diag_args.constant, "incoherence constant in (0,1)");
    diagnose->add_option("--rank-tol", diag_args.rank_tol, "relative eigenvalue cutoff");
    diagnose->add_option("--out", diag_args.out, "output directory");
    diagnose->add_option("--config", config_path, "JSON config supplying unset options");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        const std::optional<nlohmann::json> config = detail::load_config(config_path);
        if (cluster->parsed()) {
            detail::overlay(*cluster, config, "--method", "method", cluster_args.method);
            detail::overlay(*cluster, config, "--tau", "tau", cluster_args.tau);
            detail::overlay(*cluster, config, "--rank-tol", "rank_tol", cluster_args.rank_tol);
            detail::overlay(*cluster, config, "--out", "out", cluster_args.out);
            detail::overlay(*cluster, config, "--svg", "svg", cluster_args.svg);
            return detail::run_cluster(cluster_args);
        }
        if (fit->parsed()) {
            detail::overlay(*fit, config, "--method", "method", fit_args.method);
            if (fit_args.method.empty()) throw std::invalid_argument("--method is required");
            detail::overlay(*fit, config, "--partition", "partition", fit_args.partition);
            detail::overlay(*fit, config, "--lambda", "lambda", fit_args.lambda);
            detail::overlay(*fit, config, "--cv-folds", "cv_folds", fit_args.cv_folds);
            detail::overlay(*fit, config, "--n-lambda", "n_lambda", fit_args.n_lambda);
            detail::overlay(*fit, config, "--min-ratio", "min_ratio", fit_args.min_ratio);
            detail::overlay(*fit, config, "--center", "center", fit_args.center);
            detail::overlay(*fit, config, "--standardize", "standardize", fit_args.standardize);
            detail::overlay(*fit, config, "--rank-tol", "rank_tol", fit_args.rank_tol);
            detail::overlay(*fit, config, "--out", "out", fit_args.out);
            std::optional<std::uint64_t> config_seed;
            if (config && config->contains("seed")) config_seed = config->at("seed").get<std::uint64_t>();
            const detail::SeedChoice seed =
                detail::resolve_seed(fit->count("--seed") > 0, fit_seed_flag, config_seed);
            fit_args.seed = seed.value;
            fit_args.seed_source = seed.source;
            return detail::run_fit(fit_args);
        }
        if (simulate->parsed()) {
            detail::overlay(*simulate, config, "--scenario", "scenario", sim_args.scenario);
            if (sim_args.scenario.empty()) throw std::invalid_argument("--scenario is required");
            detail::overlay(*simulate, config, "--methods", "methods", sim_args.methods);
            detail::overlay(*simulate, config, "--runs", "runs", sim_args.runs);
            detail::overlay(*simulate, config, "--sigma", "sigma", sim_args.sigma);
            detail::overlay(*simulate, config, "--clusterer", "clusterer", sim_args.clusterer);
            detail::overlay(*simulate, config, "--n-lambda", "n_lambda", sim_args.n_lambda);
            detail::overlay(*simulate, config, "--min-ratio", "min_ratio", sim_args.min_ratio);
            detail::overlay(*simulate, config, "--cv-folds", "cv_folds", sim_args.cv_folds);
            detail::overlay(*simulate, config, "--svg", "svg", sim_args.svg);
            detail::overlay(*simulate, config, "--out", "out", sim_args.out);
            if (simulate->count("--no-cv") == 0 && config && config->contains("cv"))
                sim_args.with_cv = config->at("cv").get<bool>();
            std::optional<std::uint64_t> config_seed;
            if (config && config->contains("seed")) config_seed = config->at("seed").get<std::uint64_t>();
            const detail::SeedChoice seed =
                detail::resolve_seed(simulate->count("--seed") > 0, sim_seed_flag, config_seed);
            sim_args.seed = seed.value;
            sim_args.seed_given = seed.source != "default";
            sim_args.seed_source = seed.source;
            sim_args.sigma_given = simulate->count("--sigma") > 0 || (config && config->contains("sigma"));
            return detail::run_simulate(sim_args);
        }
        if (diagnose->parsed()) {
            detail::overlay(*diagnose, config, "--partition", "partition", diag_args.partition);
            detail::overlay(*diagnose, config, "--active-groups", "active_groups",
                            diag_args.active_groups);
            if (diag_args.active_groups.empty())
                throw std::invalid_argument("--active-groups is required");
            detail::overlay(*diagnose, config, "--constant", "constant", diag_args.constant);
            detail::overlay(*diagnose, config, "--rank-tol", "rank_tol", diag_args.rank_tol);
            detail::overlay(*diagnose, config, "--out", "out", diag_args.out);
            return detail::run_diagnose(diag_args);
        }
    } catch (const CsvError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}

inline int run(const std::vector<std::string>& args) {
    std::vector<std::string> with_program = args;
    with_program.insert(with_program.begin(), "cluslasso");
    std::vector<const char*> argv;
    argv.reserve(with_program.size());
    for (const std::string& a : with_program) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cluslasso::cli
