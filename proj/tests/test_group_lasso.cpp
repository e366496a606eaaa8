#include <catch2/catch_amalgamated.hpp>

#include "cluslasso/group_lasso.hpp"
#include "cluslasso/rng.hpp"
#include "support/oracles.hpp"

using namespace cluslasso;

namespace {

Eigen::MatrixXd unit_scale_columns(Eigen::MatrixXd x) {
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double s = std::sqrt(x.col(j).squaredNorm() / n);
        if (s > 0.0) x.col(j) /= s;
    }
    return x;
}

Eigen::VectorXd noisy_response(const Eigen::MatrixXd& x, Rng& rng, int sparsity = 3) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
    for (int k = 0; k < sparsity; ++k)
        beta(static_cast<Eigen::Index>(rng.uniform_int(x.cols()))) = 2.0 * rng.uniform() - 1.0;
    Eigen::VectorXd y = x * beta;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 0.3 * rng.normal();
    return y;
}

}  // namespace

TEST_CASE("default weights are root group sizes") {
    const Partition part = Partition::of({{0, 1, 2}, {3}, {4, 5}}, 6);
    const Eigen::VectorXd w = default_group_weights(part);
    REQUIRE(w(0) == Catch::Approx(std::sqrt(3.0)));
    REQUIRE(w(1) == Catch::Approx(1.0));
    REQUIRE(w(2) == Catch::Approx(std::sqrt(2.0)));
}

TEST_CASE("large penalties zero every group") {
    Rng rng(3);
    const Eigen::MatrixXd x = oracles::random_matrix(15, 6, rng);
    const Eigen::VectorXd y = noisy_response(x, rng);
    const Partition part = Partition::of({{0, 1}, {2, 3}, {4, 5}}, 6);
    const GroupLassoProblem problem(x, part);
    const double top = problem.lambda_max(y);
    REQUIRE(problem.solve(y, top).beta.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(problem.solve(y, 2.0 * top).beta.cwiseAbs().maxCoeff() == 0.0);
    const GroupLassoFit below = problem.solve(y, 0.99 * top);
    REQUIRE(below.beta.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("singleton groups with unit weights reduce to the lasso") {
    Rng rng(7);
    for (int rep = 0; rep < 8; ++rep) {
        const Eigen::MatrixXd x = unit_scale_columns(oracles::random_matrix(20, 6, rng));
        const Eigen::VectorXd y = noisy_response(x, rng);
        const Partition part = Partition::singletons(6);
        const double lambda = 0.3 * lambda_max_lasso(x, y);
        const GroupLassoFit group = group_lasso_bcd(x, y, part, lambda,
                                                    Eigen::VectorXd::Ones(6).eval());
        const LassoFit plain = lasso_cd(x, y, lambda);
        REQUIRE((group.beta - plain.beta).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("groups are selected all-or-none") {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd x = oracles::random_matrix(18, 9, rng);
        const Eigen::VectorXd y = noisy_response(x, rng);
        const Partition part = Partition::of({{0, 1, 2}, {3, 4, 5}, {6, 7, 8}}, 9);
        const GroupLassoProblem problem(x, part);
        const double lambda = (0.1 + 0.6 * rng.uniform()) * problem.lambda_max(y);
        const GroupLassoFit fit = problem.solve(y, lambda);
        for (int r = 0; r < part.q(); ++r) {
            const auto& idx = part.groups[static_cast<std::size_t>(r)].indices;
            bool any = false;
            for (int j : idx) any = any || fit.beta(j) != 0.0;
            if (fit.active_groups[static_cast<std::size_t>(r)]) {
                REQUIRE(fit.group_norms(r) > 0.0);
                REQUIRE(any);
            } else {
                REQUIRE(fit.group_norms(r) == 0.0);
                REQUIRE(!any);
            }
        }
    }
}

TEST_CASE("group norms report the fitted group contributions") {
    Rng rng(13);
    const Eigen::MatrixXd x = oracles::random_matrix(16, 6, rng);
    const Eigen::VectorXd y = noisy_response(x, rng);
    const Partition part = Partition::of({{0, 1, 2}, {3, 4, 5}}, 6);
    const GroupLassoFit fit = group_lasso_bcd(x, y, part, 0.05);
    for (int r = 0; r < 2; ++r) {
        const Eigen::VectorXd contrib = x.middleCols(3 * r, 3) * fit.beta.segment(3 * r, 3);
        REQUIRE(fit.group_norms(r) ==
                Catch::Approx(contrib.norm() / 4.0).margin(1e-8));  // sqrt(n) = 4
    }
}

TEST_CASE("blockwise kkt certificate") {
    Rng rng(17);
    const Eigen::MatrixXd x = oracles::random_matrix(20, 8, rng);
    const Eigen::VectorXd y = noisy_response(x, rng);
    const Partition part = Partition::of({{0, 1}, {2, 3, 4}, {5, 6, 7}}, 8);
    const GroupLassoProblem problem(x, part);
    const Eigen::VectorXd w = default_group_weights(part);
    const double lambda = 0.2 * problem.lambda_max(y);
    const GroupLassoFit fit = problem.solve(y, lambda);
    REQUIRE(fit.converged);
    REQUIRE(fit.kkt_residual <= 1e-6);

    // independent check: inactive groups have small whitened gradients
    const Eigen::VectorXd residual = y - x * fit.beta;
    for (int r = 0; r < part.q(); ++r) {
        if (fit.active_groups[static_cast<std::size_t>(r)]) continue;
        const auto& idx = part.groups[static_cast<std::size_t>(r)].indices;
        const Eigen::MatrixXd cols = select_columns(x, idx);
        const Eigen::MatrixXd whitener =
            pseudo_inverse_sqrt((cols.transpose() * cols / 20.0).eval(), kDefaultRankTol);
        const double grad = (2.0 * whitener * cols.transpose() * residual / 20.0).norm();
        REQUIRE(grad <= lambda * w(r) + 1e-6);
    }
}

TEST_CASE("objective recomputes from the returned coefficients") {
    Rng rng(19);
    const Eigen::MatrixXd x = oracles::random_matrix(14, 6, rng);
    const Eigen::VectorXd y = noisy_response(x, rng);
    const Partition part = Partition::of({{0, 1, 2}, {3, 4, 5}}, 6);
    const GroupLassoProblem problem(x, part);
    const double lambda = 0.15 * problem.lambda_max(y);
    const GroupLassoFit fit = problem.solve(y, lambda);
    REQUIRE(fit.objective == Catch::Approx(problem.objective(y, fit.beta, lambda)).epsilon(1e-12));
}

TEST_CASE("singular covariance blocks keep coefficients in the span") {
    // group wider than the sample count
    Rng rng(23);
    const Eigen::MatrixXd x = oracles::random_matrix(5, 8, rng);
    const Eigen::VectorXd y = noisy_response(x, rng, 2);
    const Partition part = Partition::of({{0, 1, 2, 3, 4, 5, 6}, {7}}, 8);
    const GroupLassoProblem problem(x, part);
    const GroupLassoFit fit = problem.solve(y, 0.1 * problem.lambda_max(y));
    REQUIRE(fit.converged);
    REQUIRE(fit.kkt_residual <= 1e-6);
    // coefficients of the wide group stay in the row space of its columns
    const Eigen::MatrixXd cols = x.leftCols(7);
    const Eigen::MatrixXd gram = cols.transpose() * cols / 5.0;
    const SymEigen decomp = sym_eigen(gram);
    Eigen::VectorXd beta_block = fit.beta.head(7);
    for (Eigen::Index i = 0; i < decomp.values.size(); ++i) {
        if (decomp.values(i) <= kDefaultRankTol * decomp.values(0))
            REQUIRE(std::abs(decomp.vectors.col(i).dot(beta_block)) < 1e-9);
    }
}

TEST_CASE("duplicated columns inside a group do not break the solver") {
    Rng rng(29);
    Eigen::MatrixXd x = oracles::random_matrix(12, 4, rng);
    x.col(1) = x.col(0);  // rank-deficient group
    const Eigen::VectorXd y = noisy_response(x, rng, 2);
    const Partition part = Partition::of({{0, 1}, {2, 3}}, 4);
    const GroupLassoFit fit = group_lasso_bcd(x, y, part, 0.05);
    REQUIRE(fit.converged);
}

TEST_CASE("solutions scale with the response and penalty") {
    Rng rng(31);
    const Eigen::MatrixXd x = oracles::random_matrix(15, 6, rng);
    const Eigen::VectorXd y = noisy_response(x, rng);
    const Partition part = Partition::of({{0, 1, 2}, {3, 4, 5}}, 6);
    const GroupLassoProblem problem(x, part);
    const double lambda = 0.2 * problem.lambda_max(y);
    GroupLassoOptions tight;
    tight.tol = 1e-12;
    tight.kkt_tol = 1e-10;
    const GroupLassoFit base = problem.solve(y, lambda, tight);
    const double c = 2.5;
    const GroupLassoFit scaled = problem.solve((c * y).eval(), c * lambda, tight);
    REQUIRE((scaled.beta - c * base.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("group objective decreases sweep by sweep") {
    Rng rng(37);
    const Eigen::MatrixXd x = oracles::random_matrix(16, 8, rng);
    const Eigen::VectorXd y = noisy_response(x, rng);
    const Partition part = Partition::of({{0, 1}, {2, 3}, {4, 5}, {6, 7}}, 8);
    const GroupLassoProblem problem(x, part);
    const double lambda = 0.1 * problem.lambda_max(y);
    GroupLassoOptions opts;
    opts.kkt_tol = 1e-13;
    double prev = std::numeric_limits<double>::infinity();
    for (int sweeps = 1; sweeps <= 10; ++sweeps) {
        opts.max_sweeps = sweeps;
        const GroupLassoFit fit = problem.solve(y, lambda, opts);
        REQUIRE(fit.objective <= prev + 1e-12);
        prev = fit.objective;
    }
}

TEST_CASE("warm starts agree with cold solves along a path") {
    Rng rng(41);
    const Eigen::MatrixXd x = oracles::random_matrix(20, 9, rng);
    const Eigen::VectorXd y = noisy_response(x, rng);
    const Partition part = Partition::of({{0, 1, 2}, {3, 4, 5}, {6, 7, 8}}, 9);
    const GroupLassoProblem problem(x, part);
    const GroupPathResult path = group_lasso_path(problem, y, 15, 1e-2);
    REQUIRE(path.fits.front().beta.cwiseAbs().maxCoeff() == 0.0);
    for (const Eigen::Index i : {4L, 14L}) {
        const GroupLassoFit cold = problem.solve(y, path.lambdas(i));
        REQUIRE((path.fits[static_cast<std::size_t>(i)].beta - cold.beta).cwiseAbs().maxCoeff() <
                1e-6);
    }
}

TEST_CASE("group weight validation") {
    Rng rng(43);
    const Eigen::MatrixXd x = oracles::random_matrix(10, 4, rng);
    const Partition part = Partition::of({{0, 1}, {2, 3}}, 4);
    REQUIRE_THROWS_AS(GroupLassoProblem(x, part, Eigen::VectorXd::Ones(3).eval()),
                      std::invalid_argument);
    Eigen::VectorXd bad = Eigen::VectorXd::Ones(2);
    bad(1) = 0.0;
    REQUIRE_THROWS_AS(GroupLassoProblem(x, part, bad), std::invalid_argument);
}
