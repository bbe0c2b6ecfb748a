#pragma once

#include <optional>
#include <string>
#include <vector>

#include "portopt/expected_stats.hpp"
#include "portopt/optimizer.hpp"
#include "portopt/qubo.hpp"

namespace portopt {

enum class ObjectiveKind { ewp, mcp, mvp, mrp, msrp, mop, bmop };

const char* objective_name(ObjectiveKind kind);
std::optional<ObjectiveKind> objective_from_name(const std::string& name);

/// One portfolio objective plus its parameters. Only the field matching the
/// kind is read: market_caps (MCP), target_return (MVP), target_volatility
/// (MRP), risk_free_rate (MSRP), risk_aversion (MOP, BMOP). Rate-like
/// parameters are per period.
struct PortfolioObjective {
    ObjectiveKind kind = ObjectiveKind::ewp;
    std::vector<double> market_caps;
    double target_return = 0.0;
    double target_volatility = 0.0;
    double risk_free_rate = 0.0;
    double risk_aversion = 1.0;

    /// Throws SolverError when the kind's parameter is missing/not finite.
    void validate(std::size_t assets) const;
};

/// Built portfolio with its per-period statistics. sharpe is unset when the
/// volatility is zero. flags carry solver annotations ("return-infeasible",
/// "volatility-infeasible", "ridge-repaired", "degenerate",
/// "zero-selection-fallback").
struct PortfolioResult {
    Weights weights;
    double expected_return = 0.0;
    double volatility = 0.0;
    std::optional<double> sharpe;
    std::vector<std::string> flags;
};

struct PortfolioStats {
    double expected_return = 0.0;
    double volatility = 0.0;
    std::optional<double> sharpe;
};

/// expected_return = w.mean, volatility = sqrt(w'Sigma w), and
/// sharpe = (expected_return - risk_free_rate)/volatility when volatility is
/// positive.
PortfolioStats portfolio_stats(const Weights& weights, const ExpectedStats& stats,
                               double risk_free_rate);

/// Dispatches the objective: EWP/MCP are closed-form weight rules (bounds do
/// not apply to them), MVP/MRP/MSRP/MOP go to the constrained solver, BMOP
/// builds the binary model and anneals it. risk_free_rate only feeds the
/// reported Sharpe; MSRP optimizes against its own objective parameter.
PortfolioResult build_portfolio(const PortfolioObjective& objective, const ExpectedStats& stats,
                                const WeightBounds& bounds, const SolverSettings& settings,
                                const AnnealSchedule& schedule, double risk_free_rate = 0.0);

struct FrontierPoint {
    double volatility = 0.0;
    double expected_return = 0.0;
    Weights weights;
};

/// Minimum-volatility sweep of `points` target returns spaced uniformly from
/// the global minimum-variance return up to the bounded maximum return.
/// Ordered by target return; volatilities are non-decreasing.
std::vector<FrontierPoint> efficient_frontier(const ExpectedStats& stats,
                                              const WeightBounds& bounds,
                                              const SolverSettings& settings, int points);

} // namespace portopt
