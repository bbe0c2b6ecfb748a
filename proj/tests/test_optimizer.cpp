#include <doctest.h>

#include <cmath>

#include "portopt/errors.hpp"
#include "portopt/optimizer.hpp"
#include "portopt/rng.hpp"
#include "test_util.hpp"

using namespace portopt;

namespace {

ExpectedStats make_stats(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    ExpectedStats stats;
    stats.tickers = testutil::synthetic_tickers(int(mean.size()));
    stats.mean = mean;
    stats.covariance = cov;
    return stats;
}

ExpectedStats diag_stats(const std::vector<double>& means, const std::vector<double>& vars) {
    const auto n = Eigen::Index(means.size());
    Eigen::VectorXd mean(n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        mean(i) = means[std::size_t(i)];
        cov(i, i) = vars[std::size_t(i)];
    }
    return make_stats(mean, cov);
}

ExpectedStats random_stats(Rng& rng, int n) {
    const auto inst = testutil::random_instance(rng, n);
    return make_stats(inst.mean, inst.cov);
}

} // namespace

TEST_SUITE("optimizer") {

TEST_CASE("projection agrees with an independent bisection oracle") {
    Rng rng(201);
    for (int n = 1; n <= 12; ++n) {
        // bounds must satisfy n*lower <= 1 <= n*upper
        const std::vector<std::pair<double, double>> bound_choices = {
            {0.0, 1.0},
            {0.02, 0.98},
            {1.0 / (4.0 * n), std::min(1.0, 2.5 / n)},
        };
        for (const auto& [lo, hi] : bound_choices) {
            if (n * hi < 1.0) continue; // box misses the simplex
            for (int trial = 0; trial < 40; ++trial) {
                Eigen::VectorXd point(n);
                for (int i = 0; i < n; ++i) point(i) = rng.uniform(-10.0, 10.0);
                const Eigen::VectorXd fast = project_simplex_box(point, lo, hi);
                const Eigen::VectorXd slow = testutil::project_by_bisection(point, lo, hi);
                CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-10);
                CHECK(std::abs(fast.sum() - 1.0) <= 1e-12);
                CHECK(fast.minCoeff() >= lo - 1e-14);
                CHECK(fast.maxCoeff() <= hi + 1e-14);
            }
        }
    }
}

TEST_CASE("projection is idempotent and fixes feasible points") {
    Rng rng(202);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + int(rng.below(8));
        Eigen::VectorXd point(n);
        for (int i = 0; i < n; ++i) point(i) = rng.uniform(-3.0, 3.0);
        const Eigen::VectorXd once = project_simplex_box(point, 0.02, 0.98);
        const Eigen::VectorXd twice = project_simplex_box(once, 0.02, 0.98);
        CHECK((twice - once).cwiseAbs().maxCoeff() <= 1e-12);
    }
    // an interior feasible point is its own projection
    Eigen::VectorXd feasible(4);
    feasible << 0.1, 0.2, 0.3, 0.4;
    CHECK((project_simplex_box(feasible, 0.0, 1.0) - feasible).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("projection onto a tight box hits the unique feasible point") {
    // n*lower == 1: the only feasible point is all-lower.
    Eigen::VectorXd point(4);
    point << 5.0, -2.0, 0.0, 3.0;
    const Eigen::VectorXd w = project_simplex_box(point, 0.25, 1.0);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(w(i) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("max_return_vertex fills greedily by mean") {
    Eigen::VectorXd means(3);
    means << 0.003, 0.001, 0.002;
    SUBCASE("loose bounds put everything on the best asset") {
        const Eigen::VectorXd v = max_return_vertex(means, {0.0, 1.0});
        CHECK(v(0) == 1.0);
        CHECK(v(1) == 0.0);
        CHECK(v(2) == 0.0);
    }
    SUBCASE("box bounds produce the greedy lower/upper split") {
        const Eigen::VectorXd v = max_return_vertex(means, {0.1, 0.5});
        CHECK(v(0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(v(2) == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(v(1) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("ties break toward the lower index") {
        Eigen::VectorXd tied(3);
        tied << 0.002, 0.002, 0.001;
        const Eigen::VectorXd v = max_return_vertex(tied, {0.0, 0.6});
        CHECK(v(0) == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(v(1) == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(v(2) == 0.0);
    }
}

TEST_CASE("bounds validation") {
    CHECK_NOTHROW((WeightBounds{0.0, 1.0}.validate(3)));
    CHECK_NOTHROW((WeightBounds{0.02, 0.98}.validate(2)));
    CHECK_THROWS_AS((WeightBounds{-0.1, 1.0}.validate(3)), SolverError);
    CHECK_THROWS_AS((WeightBounds{0.0, 1.2}.validate(3)), SolverError);
    CHECK_THROWS_AS((WeightBounds{0.5, 0.5}.validate(3)), SolverError);
    CHECK_THROWS_AS((WeightBounds{0.6, 0.9}.validate(2)), SolverError);  // 2*0.6 > 1
    CHECK_THROWS_AS((WeightBounds{0.0, 0.2}.validate(3)), SolverError);  // 3*0.2 < 1
}

TEST_CASE("validate_weights accepts and rejects at documented tolerances") {
    Weights w;
    w.tickers = {"A", "B"};
    w.values.resize(2);
    w.values << 0.4, 0.6;
    CHECK_NOTHROW(validate_weights(w, {0.0, 1.0}));
    w.values << 0.4, 0.7; // sum 1.1
    CHECK_THROWS_AS(validate_weights(w, {0.0, 1.0}), SolverError);
    w.values << -0.1, 1.1; // negative weight
    CHECK_THROWS_AS(validate_weights(w, {0.0, 1.0}), SolverError);
    w.values << 0.005, 0.995; // below the 0.02 lower bound
    CHECK_THROWS_AS(validate_weights(w, {0.02, 0.98}), SolverError);
}

TEST_CASE("solve_mvp matches the diagonal closed form with inactive target") {
    // w_i proportional to 1/sigma_ii for diagonal covariance
    const auto stats = diag_stats({0.0, 0.0}, {0.04, 0.01});
    const auto result = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
    CHECK(result.weights.values(0) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(result.weights.values(1) == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(result.objective == doctest::Approx(0.008).epsilon(1e-6));
    CHECK(result.flags.empty());
}

TEST_CASE("solve_mvp with a single asset is forced to [1]") {
    const auto stats = diag_stats({0.01}, {0.0004});
    const auto result = solve_mvp(stats, 0.5, {0.0, 1.0}, {});
    CHECK(result.weights.values(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_mvp on duplicated assets reaches the single-asset variance") {
    Eigen::VectorXd mean(2);
    mean << 0.001, 0.001;
    Eigen::MatrixXd cov(2, 2);
    cov << 2e-4, 2e-4, 2e-4, 2e-4; // identical assets, singular
    const auto result = solve_mvp(make_stats(mean, cov), std::nullopt, {0.0, 1.0}, {});
    CHECK(result.objective == doctest::Approx(2e-4).epsilon(1e-9));
    // singular covariance is ridge-repaired and disclosed
    CHECK(std::find(result.flags.begin(), result.flags.end(), "ridge-repaired") !=
          result.flags.end());
}

TEST_CASE("solve_mvp meets an attainable return target") {
    Rng rng(203);
    for (int trial = 0; trial < 20; ++trial) {
        const auto stats = random_stats(rng, 4);
        const double r_max = stats.mean.dot(max_return_vertex(stats.mean, {0.0, 1.0}));
        const auto gmv = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
        const double r_min = stats.mean.dot(gmv.weights.values);
        if (r_max <= r_min) continue; // degenerate draw
        const double target = r_min + 0.7 * (r_max - r_min);
        const auto result = solve_mvp(stats, target, {0.0, 1.0}, {});
        CHECK(stats.mean.dot(result.weights.values) >= target - 1e-8);
        CHECK(result.flags.empty());
        CHECK_NOTHROW(validate_weights(result.weights, {0.0, 1.0}));
    }
}

TEST_CASE("solve_mvp flags unattainable targets and falls back to the vertex") {
    const auto stats = diag_stats({0.001, 0.002}, {1e-4, 4e-4});
    const auto result = solve_mvp(stats, 0.05, {0.0, 1.0}, {});
    CHECK(std::find(result.flags.begin(), result.flags.end(), "return-infeasible") !=
          result.flags.end());
    CHECK(result.weights.values(1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("solve_mvp variance is monotone in the return target") {
    Rng rng(204);
    const auto stats = random_stats(rng, 5);
    const auto gmv = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
    const double r_min = stats.mean.dot(gmv.weights.values);
    const double r_max = stats.mean.dot(max_return_vertex(stats.mean, {0.0, 1.0}));
    double previous = -1.0;
    for (int k = 0; k <= 8; ++k) {
        const double target = r_min + (r_max - r_min) * double(k) / 8.0;
        const auto result = solve_mvp(stats, target, {0.0, 1.0}, {});
        CHECK(result.objective >= previous - 1e-10);
        previous = result.objective;
    }
}

TEST_CASE("solve_mvp argmin is scale-equivariant in the covariance") {
    Rng rng(205);
    const auto stats = random_stats(rng, 4);
    ExpectedStats scaled = stats;
    scaled.covariance *= 7.5;
    const auto base = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
    const auto big = solve_mvp(scaled, std::nullopt, {0.0, 1.0}, {});
    CHECK((base.weights.values - big.weights.values).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("solve_mrp with a huge budget is the max-return vertex") {
    Rng rng(206);
    const auto stats = random_stats(rng, 4);
    const auto result = solve_mrp(stats, 10.0, {0.0, 1.0}, {});
    const Eigen::VectorXd vertex = max_return_vertex(stats.mean, {0.0, 1.0});
    CHECK((result.weights.values - vertex).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(result.objective == doctest::Approx(stats.mean.dot(vertex)).epsilon(1e-12));
}

TEST_CASE("solve_mrp with equal means attains the common mean") {
    Eigen::VectorXd mean(2);
    mean << 0.0015, 0.0015;
    Eigen::MatrixXd cov(2, 2);
    cov << 4e-4, 0.0, 0.0, 1e-4;
    const auto result = solve_mrp(make_stats(mean, cov), 0.05, {0.0, 1.0}, {});
    CHECK(result.objective == doctest::Approx(0.0015).epsilon(1e-9));
}

TEST_CASE("solve_mrp flags an unattainably small volatility budget") {
    const auto stats = diag_stats({0.001, 0.002}, {1e-4, 1e-4});
    // global minimum stddev is sqrt(5e-5) ~ 7e-3; ask for far less
    const auto result = solve_mrp(stats, 1e-4, {0.0, 1.0}, {});
    CHECK(std::find(result.flags.begin(), result.flags.end(), "volatility-infeasible") !=
          result.flags.end());
    // fallback is the global minimum-variance portfolio
    const auto gmv = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
    CHECK((result.weights.values - gmv.weights.values).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("solve_mrp respects the variance budget when binding") {
    Rng rng(207);
    for (int trial = 0; trial < 20; ++trial) {
        const auto stats = random_stats(rng, 4);
        const auto gmv = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
        const Eigen::VectorXd vertex = max_return_vertex(stats.mean, {0.0, 1.0});
        const double var_low = gmv.objective;
        const double var_high = vertex.dot(stats.covariance * vertex);
        if (var_high <= var_low * (1.0 + 1e-9)) continue;
        const double v2 = var_low + 0.4 * (var_high - var_low);
        const auto result = solve_mrp(stats, std::sqrt(v2), {0.0, 1.0}, {});
        const double variance = result.weights.values.dot(stats.covariance * result.weights.values);
        // exterior penalty: the ball may be overshot by a sliver, never more
        CHECK(variance <= v2 * (1.0 + 1e-3) + 1e-12);
        CHECK(result.flags.empty());
        CHECK_NOTHROW(validate_weights(result.weights, {0.0, 1.0}));
    }
}

TEST_CASE("solve_msrp reduces to minimum variance under equal means") {
    const auto stats = diag_stats({0.002, 0.002, 0.002}, {4e-4, 1e-4, 2e-4});
    const auto result = solve_msrp(stats, 0.0, {0.0, 1.0}, {});
    // w_i proportional to 1/sigma_ii: 1/4 : 1 : 1/2 => (1/7, 4/7, 2/7)
    CHECK(result.weights.values(0) == doctest::Approx(1.0 / 7.0).epsilon(1e-4));
    CHECK(result.weights.values(1) == doctest::Approx(4.0 / 7.0).epsilon(1e-4));
    CHECK(result.weights.values(2) == doctest::Approx(2.0 / 7.0).epsilon(1e-4));
}

TEST_CASE("solve_msrp reports Sharpe as its objective") {
    Rng rng(208);
    const auto stats = random_stats(rng, 4);
    const auto result = solve_msrp(stats, 0.0, {0.0, 1.0}, {});
    const double ret = stats.mean.dot(result.weights.values);
    const double vol =
        std::sqrt(result.weights.values.dot(stats.covariance * result.weights.values));
    CHECK(result.objective == doctest::Approx(ret / vol).epsilon(1e-10));
}

TEST_CASE("solve_msrp with one asset") {
    const auto stats = diag_stats({0.002}, {4e-4});
    const auto result = solve_msrp(stats, 0.0005, {0.0, 1.0}, {});
    CHECK(result.weights.values(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.objective == doctest::Approx((0.002 - 0.0005) / 0.02).epsilon(1e-9));
}

TEST_CASE("solve_msrp flags the all-means-below-rf degenerate case") {
    const auto stats = diag_stats({-0.001, -0.002}, {1e-4, 2e-4});
    const auto result = solve_msrp(stats, 0.0, {0.0, 1.0}, {});
    CHECK(std::find(result.flags.begin(), result.flags.end(), "degenerate") !=
          result.flags.end());
}

TEST_CASE("solve_msrp errors when every candidate has zero volatility") {
    Eigen::VectorXd mean(2);
    mean << 0.001, 0.002;
    const auto stats = make_stats(mean, Eigen::MatrixXd::Zero(2, 2));
    CHECK_THROWS_WITH_AS((void)solve_msrp(stats, 0.0, {0.0, 1.0}, {}),
                         doctest::Contains("degenerate portfolio"), SolverError);
}

TEST_CASE("solve_mop approaches GMV as lambda vanishes") {
    Rng rng(209);
    const auto stats = random_stats(rng, 4);
    const auto gmv = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
    const auto mop = solve_mop(stats, 1e-12, {0.0, 1.0}, {});
    CHECK((mop.weights.values - gmv.weights.values).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("solve_mop with huge lambda is the max-return vertex") {
    Rng rng(210);
    const auto stats = random_stats(rng, 4);
    const auto result = solve_mop(stats, 1e6, {0.0, 1.0}, {});
    const Eigen::VectorXd vertex = max_return_vertex(stats.mean, {0.0, 1.0});
    CHECK((result.weights.values - vertex).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("solve_mop objective value is variance minus lambda return") {
    Rng rng(211);
    const auto stats = random_stats(rng, 3);
    const auto result = solve_mop(stats, 1.0, {0.0, 1.0}, {});
    const Eigen::VectorXd& w = result.weights.values;
    CHECK(result.objective ==
          doctest::Approx(w.dot(stats.covariance * w) - stats.mean.dot(w)).epsilon(1e-12));
}

TEST_CASE("sweep_mvp matches element-wise solves and flags infeasible tails") {
    Rng rng(212);
    const auto stats = random_stats(rng, 4);
    const auto gmv = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
    const double r_min = stats.mean.dot(gmv.weights.values);
    const double r_max = stats.mean.dot(max_return_vertex(stats.mean, {0.0, 1.0}));
    const std::vector<double> targets{r_min, 0.5 * (r_min + r_max), r_max,
                                      r_max + std::abs(r_max) + 1e-3};
    const auto swept = sweep_mvp(stats, targets, {0.0, 1.0}, {});
    REQUIRE(swept.size() == targets.size());
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto single = solve_mvp(stats, targets[k], {0.0, 1.0}, {});
        CHECK(swept[k].objective == doctest::Approx(single.objective).epsilon(1e-7));
        CHECK(swept[k].flags == single.flags);
    }
    CHECK(std::find(swept.back().flags.begin(), swept.back().flags.end(),
                    "return-infeasible") != swept.back().flags.end());
}

TEST_CASE("solvers are bit-deterministic") {
    Rng rng(213);
    const auto stats = random_stats(rng, 5);
    const auto a1 = solve_mvp(stats, 0.001, {0.02, 0.98}, {});
    const auto a2 = solve_mvp(stats, 0.001, {0.02, 0.98}, {});
    CHECK((a1.weights.values.array() == a2.weights.values.array()).all());
    const auto b1 = solve_msrp(stats, 0.0, {0.02, 0.98}, {});
    const auto b2 = solve_msrp(stats, 0.0, {0.02, 0.98}, {});
    CHECK((b1.weights.values.array() == b2.weights.values.array()).all());
}

TEST_CASE("solver outputs satisfy the weight invariants on random instances") {
    Rng rng(214);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + int(rng.below(9));
        const auto stats = random_stats(rng, n);
        const WeightBounds bounds{0.02, 0.98};
        const int pick = trial % 4;
        SolveResult result;
        switch (pick) {
        case 0: result = solve_mvp(stats, rng.uniform(-1e-3, 3e-3), bounds, {}); break;
        case 1: result = solve_mrp(stats, rng.uniform(1e-4, 2e-2), bounds, {}); break;
        case 2: result = solve_msrp(stats, 0.0, bounds, {}); break;
        default: result = solve_mop(stats, rng.uniform(0.1, 3.0), bounds, {}); break;
        }
        CHECK(std::abs(result.weights.values.sum() - 1.0) <= 1e-8);
        CHECK(result.weights.values.minCoeff() >= bounds.lower - 1e-9);
        CHECK(result.weights.values.maxCoeff() <= bounds.upper + 1e-9);
    }
}

TEST_CASE("solver objectives dominate the grid oracle on small instances") {
    // A fast version of the acceptance sweep: 10 instances, N=3, step 1/100.
    Rng rng(215);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = testutil::random_instance(rng, 3);
        const auto stats = make_stats(inst.mean, inst.cov);
        const auto gmv = solve_mvp(stats, std::nullopt, {0.0, 1.0}, {});
        const double r_min = stats.mean.dot(gmv.weights.values);
        const double r_max = stats.mean.dot(max_return_vertex(stats.mean, {0.0, 1.0}));
        const double target = r_min + 0.5 * (r_max - r_min);
        const Eigen::VectorXd vertex = max_return_vertex(stats.mean, {0.0, 1.0});
        const double var_high = vertex.dot(stats.covariance * vertex);
        const double v2 = gmv.objective + 0.5 * std::max(0.0, var_high - gmv.objective);

        const auto oracle =
            testutil::grid_oracles(inst.mean, inst.cov, target, v2, 1.0, 0.0, 100);

        CHECK(solve_mvp(stats, target, {0.0, 1.0}, {}).objective <=
              oracle.min_variance_at_target + 1e-6);
        if (oracle.ball_feasible) {
            CHECK(solve_mrp(stats, std::sqrt(v2), {0.0, 1.0}, {}).objective >=
                  oracle.max_return_in_ball - 1e-6);
        }
        CHECK(solve_mop(stats, 1.0, {0.0, 1.0}, {}).objective <= oracle.min_mop + 1e-6);
        CHECK(solve_msrp(stats, 0.0, {0.0, 1.0}, {}).objective >= oracle.max_sharpe - 1e-4);
    }
}

TEST_CASE("input validation rejects malformed stats") {
    Eigen::VectorXd mean(2);
    mean << 0.001, std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS((void)solve_mvp(make_stats(mean, cov), std::nullopt, {0.0, 1.0}, {}),
                    SolverError);
    mean << 0.001, 0.002;
    Eigen::MatrixXd bad = cov;
    bad.resize(2, 2);
    bad << 1.0, 0.0, 0.0, 1.0;
    ExpectedStats mismatched = make_stats(mean, bad);
    mismatched.mean.resize(3);
    mismatched.mean << 0.1, 0.2, 0.3;
    CHECK_THROWS_AS((void)solve_mvp(mismatched, std::nullopt, {0.0, 1.0}, {}), SolverError);
    CHECK_THROWS_AS((void)solve_mrp(make_stats(mean, cov), -0.5, {0.0, 1.0}, {}), SolverError);
}

} // TEST_SUITE("optimizer")
