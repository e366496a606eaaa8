#include <catch2/catch_amalgamated.hpp>

#include "cluslasso/simulation.hpp"
#include "support/oracles.hpp"

using namespace cluslasso;

TEST_CASE("block covariance builders") {
    SECTION("entries of a small block matrix") {
        const Eigen::MatrixXd sigma = make_sigma_block(3, 4, 0.5);
        REQUIRE(sigma.rows() == 12);
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j) {
                const double want = i == j ? 1.0 : (i / 4 == j / 4 ? 0.5 : 0.0);
                REQUIRE(sigma(i, j) == want);
            }
    }
    SECTION("catalogued dimensions") {
        REQUIRE(make_sigma_block(100, 10, 0.9).rows() == 1000);
        REQUIRE(make_sigma_block(500, 2, 0.9).rows() == 1000);
    }
    SECTION("zero correlation is the identity") {
        REQUIRE((make_sigma_block(4, 3, 0.0) - Eigen::MatrixXd::Identity(12, 12))
                    .cwiseAbs()
                    .maxCoeff() == 0.0);
    }
    SECTION("correlation range is enforced") {
        REQUIRE_THROWS_AS(make_sigma_block(2, 3, 1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(make_sigma_block(2, 3, -0.5), std::invalid_argument);
        REQUIRE_NOTHROW(make_sigma_block(2, 3, -0.49));
    }
}

TEST_CASE("single-block covariance") {
    const Eigen::MatrixXd sigma = make_sigma_single_block(8, 3, 0.9);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            const double want = i == j ? 1.0 : (i < 3 && j < 3 ? 0.9 : 0.0);
            REQUIRE(sigma(i, j) == want);
        }
    REQUIRE((make_sigma_single_block(5, 1, 0.7) - Eigen::MatrixXd::Identity(5, 5))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    REQUIRE_THROWS_AS(make_sigma_single_block(4, 5, 0.5), std::invalid_argument);
}

TEST_CASE("catalogued coefficient configurations") {
    SECTION("Aa support and values") {
        BetaSpec spec{"Aa", 1000, 100, 3.0, {}};
        const BetaInstance inst = make_beta(spec, 7);
        std::vector<int> want(20);
        std::iota(want.begin(), want.end(), 0);
        REQUIRE(inst.support == want);
        std::vector<double> values;
        for (int j = 0; j < 20; ++j) values.push_back(inst.beta(j));
        std::sort(values.begin(), values.end());
        for (int k = 0; k < 20; ++k)
            REQUIRE(values[static_cast<std::size_t>(k)] ==
                    Catch::Approx(0.1 * (k + 1)).margin(1e-12));
        REQUIRE(inst.beta.tail(980).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("Ab places two active variables in each of ten blocks") {
        BetaSpec spec{"Ab", 1000, 100, 3.0, {}};
        const BetaInstance inst = make_beta(spec, 7);
        std::vector<int> want;
        for (int b = 0; b < 10; ++b) {
            want.push_back(10 * b);
            want.push_back(10 * b + 1);
        }
        REQUIRE(inst.support == want);
    }
    SECTION("sign-switch variants flip exactly half") {
        for (const char* name : {"Ac", "Ad", "Bc", "Bd"}) {
            BetaSpec spec{name, 1000, 100, 3.0, {}};
            const BetaInstance inst = make_beta(spec, 11);
            int negatives = 0;
            std::vector<double> magnitudes;
            for (int j : inst.support) {
                negatives += inst.beta(j) < 0.0;
                magnitudes.push_back(std::abs(inst.beta(j)));
            }
            REQUIRE(negatives == 10);
            std::sort(magnitudes.begin(), magnitudes.end());
            for (int k = 0; k < 20; ++k)
                REQUIRE(magnitudes[static_cast<std::size_t>(k)] ==
                        Catch::Approx(0.1 * (k + 1)).margin(1e-12));
        }
    }
    SECTION("single-block supports") {
        BetaSpec ba{"Ba", 1000, 100, 3.0, {}};
        const BetaInstance inst_ba = make_beta(ba, 3);
        REQUIRE(inst_ba.support.size() == 20);
        REQUIRE(inst_ba.support.front() == 0);
        REQUIRE(inst_ba.support[14] == 14);
        REQUIRE(inst_ba.support[15] == 30);
        REQUIRE(inst_ba.support.back() == 34);
        BetaSpec bb{"Bb", 1000, 100, 3.0, {}};
        const BetaInstance inst_bb = make_beta(bb, 3);
        REQUIRE(inst_bb.support[4] == 4);
        REQUIRE(inst_bb.support[5] == 30);
        REQUIRE(inst_bb.support.back() == 44);
    }
    SECTION("alternating strong and weak values") {
        BetaSpec spec{"C", 1000, 100, 3.0, {}};
        const BetaInstance inst = make_beta(spec, 1);
        const double weak = (1.0 / 3.0) * std::sqrt(std::log(1000.0) / 100.0) * 3.0 / 1.9;
        for (int k = 0; k < 20; ++k)
            REQUIRE(inst.beta(k) == Catch::Approx(k % 2 == 0 ? 2.0 : weak).margin(1e-14));
    }
    SECTION("deterministic in the seed") {
        BetaSpec spec{"Ac", 1000, 100, 3.0, {}};
        const BetaInstance a = make_beta(spec, 5);
        const BetaInstance b = make_beta(spec, 5);
        const BetaInstance c = make_beta(spec, 6);
        REQUIRE((a.beta - b.beta).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((a.beta - c.beta).cwiseAbs().maxCoeff() > 0.0);
    }
    SECTION("unknown configuration is rejected") {
        BetaSpec spec{"Zz", 1000, 100, 3.0, {}};
        REQUIRE_THROWS_AS(make_beta(spec, 1), std::invalid_argument);
    }
}

TEST_CASE("gaussian design generation") {
    SECTION("seed reproducibility") {
        const Eigen::MatrixXd sigma = make_sigma_block(2, 3, 0.4);
        const DesignMatrix a = gen_gaussian_design(sigma, 50, 9);
        const DesignMatrix b = gen_gaussian_design(sigma, 50, 9);
        const DesignMatrix c = gen_gaussian_design(sigma, 50, 10);
        REQUIRE((a.data - b.data).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((a.data - c.data).cwiseAbs().maxCoeff() > 0.0);
    }
    SECTION("empirical covariance concentrates around the identity") {
        const int n = 10000, p = 10;
        const DesignMatrix x = gen_gaussian_design(Eigen::MatrixXd::Identity(p, p), n, 21);
        const Eigen::MatrixXd emp = x.data.transpose() * x.data / static_cast<double>(n);
        const double bound = 4.0 * std::sqrt(std::log(static_cast<double>(p)) / n);
        REQUIRE((emp - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() <= bound);
        REQUIRE(std::abs(x.data.colwise().mean().cwiseAbs().maxCoeff()) <= bound);
    }
}

TEST_CASE("latent design generation") {
    SECTION("zero perturbation duplicates the anchor column") {
        const Eigen::MatrixXd cov_u = Eigen::MatrixXd::Identity(2, 2);
        const LatentDesign out =
            gen_latent_design(cov_u, {3, 2}, Eigen::VectorXd::Zero(2), 25, 4);
        REQUIRE(out.signal_columns == std::vector<int>{0, 3});
        REQUIRE((out.design.data.col(0) - out.design.data.col(1)).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((out.design.data.col(0) - out.design.data.col(2)).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((out.design.data.col(3) - out.design.data.col(4)).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("one group of one variable is the latent draw itself") {
        const Eigen::MatrixXd cov_u = Eigen::MatrixXd::Identity(1, 1);
        const LatentDesign out = gen_latent_design(cov_u, {1}, Eigen::VectorXd::Zero(1), 10, 5);
        REQUIRE(out.design.p() == 1);
    }
    SECTION("representative variance matches the averaging-noise formula") {
        Eigen::MatrixXd cov_u(2, 2);
        cov_u << 1.0, 0.2, 0.2, 0.8;
        Eigen::VectorXd tau(2);
        tau << 0.6, 0.3;
        const std::vector<int> sizes{4, 5};
        const int n = 300000;
        const LatentDesign out = gen_latent_design(cov_u, sizes, tau, n, 31);
        int at = 0;
        for (int r = 0; r < 2; ++r) {
            Eigen::VectorXd rep = Eigen::VectorXd::Zero(n);
            for (int j = 0; j < sizes[static_cast<std::size_t>(r)]; ++j)
                rep += out.design.data.col(at + j);
            rep /= static_cast<double>(sizes[static_cast<std::size_t>(r)]);
            const double m = static_cast<double>(sizes[static_cast<std::size_t>(r)]);
            const double want = cov_u(r, r) + tau(r) * tau(r) * (m - 1.0) / (m * m);
            const double var = rep.squaredNorm() / n - std::pow(rep.mean(), 2);
            REQUIRE(std::abs(var - want) < 3.0 * want * std::sqrt(2.0 / n));
            at += sizes[static_cast<std::size_t>(r)];
        }
    }
    SECTION("coefficient augmentation") {
        Eigen::VectorXd beta_tilde(2);
        beta_tilde << 1.5, -0.5;
        const Eigen::VectorXd beta = augment_latent_beta(beta_tilde, {3, 2});
        REQUIRE(beta.size() == 5);
        REQUIRE(beta(0) == 1.5);
        REQUIRE(beta(3) == -0.5);
        REQUIRE(beta(1) == 0.0);
        REQUIRE(beta(4) == 0.0);
    }
}

TEST_CASE("screening curves from selection paths") {
    std::vector<SelectionResult> path;
    const auto add = [&path](std::vector<int> vars) {
        SelectionResult sel;
        sel.selected_variables = std::move(vars);
        path.push_back(std::move(sel));
    };
    add({});
    add({0});
    add({0, 1});
    add({0, 1, 5});
    add({2, 3});  // same size as an earlier point but worse rate
    const ScreeningCurve curve = screening_curve_from_path(path, {0, 1});
    REQUIRE(curve.sizes.front() == 0);
    REQUIRE(curve.tpr.front() == 0.0);
    REQUIRE(curve.tpr_at(0) == 0.0);
    REQUIRE(curve.tpr_at(1) == 0.5);
    REQUIRE(curve.tpr_at(2) == 1.0);   // the better rate at size two is kept
    REQUIRE(curve.tpr_at(3) == 1.0);
    for (double t : curve.tpr) {
        REQUIRE(t >= 0.0);
        REQUIRE(t <= 1.0);
    }
}

TEST_CASE("scenario catalog") {
    const Scenario aa = scenario_catalog("Aa", 3.0, 1);
    REQUIRE(aa.n == 100);
    REQUIRE(aa.p == 1000);
    REQUIRE(aa.sigma_spec.kind == SigmaSpec::Kind::kBlock);
    const Scenario c = scenario_catalog("C");
    REQUIRE(c.sigma_spec.num_blocks == 500);
    REQUIRE_THROWS_AS(scenario_catalog("nope"), std::invalid_argument);
    // the catalogued grouping matches the covariance blocks
    const Partition truth = *aa.sigma_spec.true_partition();
    REQUIRE(truth.q() == 100);
    REQUIRE(truth.groups[0].indices.size() == 10);
}

namespace {

Scenario tiny_scenario(std::uint64_t seed) {
    Scenario sc;
    sc.name = "tiny";
    sc.sigma_spec = SigmaSpec::block(4, 3, 0.8);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(12);
    beta(0) = 1.0;
    beta(1) = 0.8;
    beta(6) = -1.2;
    sc.beta_spec = BetaSpec{"custom", 12, 24, 0.7, beta};
    sc.noise_sigma = 0.7;
    sc.n = 24;
    sc.p = 12;
    sc.n_test = 24;
    sc.seed = seed;
    return sc;
}

}  // namespace

TEST_CASE("scenario runs are deterministic and sane") {
    const Scenario sc = tiny_scenario(5);
    RunOptions opts;
    opts.with_cv = true;
    opts.cv_folds = 4;
    const std::vector<std::string> methods{"crl", "cgl", "lasso"};
    const RunResult a = run_scenario(sc, methods, {}, GridSpec{30, 1e-2}, 3, opts);
    const RunResult b = run_scenario(sc, methods, {}, GridSpec{30, 1e-2}, 3, opts);

    REQUIRE(a.methods.size() == 3);
    for (std::size_t m = 0; m < 3; ++m) {
        REQUIRE(a.methods[m].mse_runs == b.methods[m].mse_runs);
        REQUIRE(a.methods[m].cv_mse_runs == b.methods[m].cv_mse_runs);
        REQUIRE(a.methods[m].mean_curve.tpr == b.methods[m].mean_curve.tpr);
        REQUIRE(a.methods[m].mse_mean > 0.0);
        for (double t : a.methods[m].mean_curve.tpr) {
            REQUIRE(t >= 0.0);
            REQUIRE(t <= 1.0);
        }
        // the densest fits select everything eventually: full-size rate is top
        REQUIRE(a.methods[m].mean_curve.tpr.back() ==
                Catch::Approx(*std::max_element(a.methods[m].mean_curve.tpr.begin(),
                                                a.methods[m].mean_curve.tpr.end())));
    }
    REQUIRE(a.partition == b.partition);
    REQUIRE(a.support == std::vector<int>{0, 1, 6});
}

TEST_CASE("oracle predictor error approaches the noise floor") {
    // predicting with the true coefficients leaves only the test noise
    const Scenario sc = tiny_scenario(11);
    const Eigen::MatrixXd sigma = sc.sigma_spec.build();
    const DesignMatrix x = gen_gaussian_design(sigma, sc.n, derive_seed(sc.seed, 0));
    const BetaInstance beta = make_beta(sc.beta_spec, derive_seed(sc.seed, 1000000ULL));
    double total = 0.0;
    const int reps = 4000;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(derive_seed(sc.seed, 3000000ULL + static_cast<std::uint64_t>(rep)));
        double acc = 0.0;
        for (int i = 0; i < sc.n; ++i) {
            const double noise = sc.noise_sigma * rng.normal();
            acc += noise * noise;
        }
        total += acc / sc.n;
    }
    const double mse = total / reps;
    const double want = sc.noise_sigma * sc.noise_sigma;
    const double se = want * std::sqrt(2.0 / (static_cast<double>(reps) * sc.n));
    REQUIRE(std::abs(mse - want) < 3.0 * se);
    (void)x;
    (void)beta;
}

TEST_CASE("null coefficients at huge penalties leave the noise variance") {
    Scenario sc = tiny_scenario(13);
    sc.beta_spec.custom_beta = Eigen::VectorXd::Zero(12);
    sc.beta_spec.custom_beta(0) = 1e-9;  // effectively the null model
    RunOptions opts;
    opts.with_cv = false;
    const RunResult res = run_scenario(sc, {"lasso"}, {}, GridSpec{10, 0.5}, 8, opts);
    const double sigma_sq = sc.noise_sigma * sc.noise_sigma;
    REQUIRE(res.methods[0].mse_mean ==
            Catch::Approx(sigma_sq).margin(3.0 * sigma_sq * std::sqrt(2.0 / sc.n)));
}

TEST_CASE("clusterer choices are honored") {
    const Scenario sc = tiny_scenario(17);
    RunOptions opts;
    opts.with_cv = false;
    ClustererSpec tau_spec;
    tau_spec.kind = ClustererSpec::Kind::kCancorTau;
    tau_spec.tau = 0.5;
    const RunResult via_tau = run_scenario(sc, {"crl"}, tau_spec, GridSpec{10, 1e-1}, 1, opts);
    ClustererSpec corr_spec;
    corr_spec.kind = ClustererSpec::Kind::kCorr;
    const RunResult via_corr = run_scenario(sc, {"crl"}, corr_spec, GridSpec{10, 1e-1}, 1, opts);
    REQUIRE(via_tau.partition.p() == 12);
    REQUIRE(via_corr.partition.p() == 12);
}

TEST_CASE("block recovery in the consistency regime", "[.][slow]") {
    // tracked statistic: the auto-cut clusterer recovers the true blocks on
    // most seeds at the catalogued scale
    const Scenario sc = scenario_catalog("Aa", 3.0, 1);
    const Eigen::MatrixXd sigma = sc.sigma_spec.build();
    const Partition truth = *sc.sigma_spec.true_partition();
    int hits = 0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
        const DesignMatrix x = gen_gaussian_design(sigma, sc.n, derive_seed(s + 1, 0));
        hits += cancor_cluster_auto(x).partition == truth ? 1 : 0;
    }
    INFO("recovered " << hits << "/" << seeds);
    REQUIRE(hits * 10 >= seeds * 9);
}
