#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "portopt/expected_stats.hpp"

namespace portopt {

/// Uniform box bounds on every weight. The simplex intersection must be
/// nonempty: N*lower <= 1 <= N*upper.
struct WeightBounds {
    double lower = 0.0;
    double upper = 1.0;

    void validate(Eigen::Index assets) const;
};

/// Long-only allocation. values sum to one.
struct Weights {
    std::vector<std::string> tickers;
    Eigen::VectorXd values;
};

/// Throws SolverError unless weights sum to 1 within 1e-8, are >= -1e-9, and
/// sit inside [lower - 1e-9, upper + 1e-9].
void validate_weights(const Weights& weights, const WeightBounds& bounds);

struct SolverSettings {
    double tolerance = 1e-9;
    int max_iterations = 50'000;
    double penalty_growth = 10.0;
    int frontier_points = 50;
};

/// Solver output. `objective` is the solved problem's own objective evaluated
/// with the caller's covariance (variance for MVP, return for MRP, Sharpe for
/// MSRP, variance - lambda*return for MOP). Flags record fallbacks:
/// "return-infeasible", "volatility-infeasible", "ridge-repaired",
/// "degenerate".
struct SolveResult {
    Weights weights;
    double objective = 0.0;
    std::vector<std::string> flags;
};

/// Exact Euclidean projection onto {w : sum w = 1, lower <= w_i <= upper} by
/// sorting the 2N breakpoints of the piecewise-linear dual equation.
Eigen::VectorXd project_simplex_box(const Eigen::VectorXd& point, double lower, double upper);

/// Greedy solution of max r.w over the simplex-box polytope: fill the
/// highest-mean assets up to `upper`, everything else stays at `lower`.
/// Ties in means break toward the lower asset index.
Eigen::VectorXd max_return_vertex(const Eigen::VectorXd& means, const WeightBounds& bounds);

/// Minimum-volatility portfolio: min w'Sigma w subject to w.r >= target (when
/// given), the simplex, and bounds. An unattainable target returns the
/// maximum-return vertex flagged "return-infeasible". No target solves the
/// global minimum-variance problem.
SolveResult solve_mvp(const ExpectedStats& stats, std::optional<double> target_return,
                      const WeightBounds& bounds, const SolverSettings& settings);

/// Maximum-return portfolio: max w.r subject to w'Sigma w <= volatility^2.
/// A target below the global minimum variance returns that portfolio flagged
/// "volatility-infeasible".
SolveResult solve_mrp(const ExpectedStats& stats, double target_volatility,
                      const WeightBounds& bounds, const SolverSettings& settings);

/// Maximum-Sharpe portfolio via a frontier sweep of settings.frontier_points
/// targets between the minimum-variance return and the maximum attainable
/// return, followed by three zoom rounds around the best candidate (the
/// sweep brackets the tangency return; each round cuts the bracket 4x).
/// Sharpe ties break toward lower volatility, then the lexicographically
/// smaller weight vector.
SolveResult solve_msrp(const ExpectedStats& stats, double risk_free_rate,
                       const WeightBounds& bounds, const SolverSettings& settings);

/// Risk-aversion blend: min w'Sigma w - lambda * w.r.
SolveResult solve_mop(const ExpectedStats& stats, double risk_aversion,
                      const WeightBounds& bounds, const SolverSettings& settings);

/// Warm-started solve_mvp over an increasing list of target returns; element
/// k matches solve_mvp(stats, targets[k], ...) to solver tolerance. Shared by
/// the MSRP sweep and the efficient frontier.
std::vector<SolveResult> sweep_mvp(const ExpectedStats& stats,
                                   const std::vector<double>& targets,
                                   const WeightBounds& bounds, const SolverSettings& settings);

} // namespace portopt
