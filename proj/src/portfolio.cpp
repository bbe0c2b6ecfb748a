#include "portopt/portfolio.hpp"

#include <cmath>

#include "portopt/errors.hpp"

namespace portopt {
namespace {

PortfolioResult with_stats(Weights weights, const ExpectedStats& stats, double risk_free_rate,
                           std::vector<std::string> flags) {
    PortfolioResult result;
    result.weights = std::move(weights);
    const PortfolioStats ps = portfolio_stats(result.weights, stats, risk_free_rate);
    result.expected_return = ps.expected_return;
    result.volatility = ps.volatility;
    result.sharpe = ps.sharpe;
    result.flags = std::move(flags);
    return result;
}

} // namespace

const char* objective_name(ObjectiveKind kind) {
    switch (kind) {
    case ObjectiveKind::ewp: return "EWP";
    case ObjectiveKind::mcp: return "MCP";
    case ObjectiveKind::mvp: return "MVP";
    case ObjectiveKind::mrp: return "MRP";
    case ObjectiveKind::msrp: return "MSRP";
    case ObjectiveKind::mop: return "MOP";
    case ObjectiveKind::bmop: return "BMOP";
    }
    return "?";
}

std::optional<ObjectiveKind> objective_from_name(const std::string& name) {
    for (ObjectiveKind kind :
         {ObjectiveKind::ewp, ObjectiveKind::mcp, ObjectiveKind::mvp, ObjectiveKind::mrp,
          ObjectiveKind::msrp, ObjectiveKind::mop, ObjectiveKind::bmop}) {
        if (name == objective_name(kind)) return kind;
    }
    return std::nullopt;
}

void PortfolioObjective::validate(std::size_t assets) const {
    switch (kind) {
    case ObjectiveKind::ewp:
        break;
    case ObjectiveKind::mcp:
        if (market_caps.size() != assets) {
            throw SolverError("MCP: need one market cap per asset");
        }
        for (double cap : market_caps) {
            if (!(cap > 0.0) || !std::isfinite(cap)) {
                throw SolverError("MCP: market caps must be positive and finite");
            }
        }
        break;
    case ObjectiveKind::mvp:
        if (!std::isfinite(target_return)) throw SolverError("MVP: non-finite target return");
        break;
    case ObjectiveKind::mrp:
        if (!(target_volatility > 0.0) || !std::isfinite(target_volatility)) {
            throw SolverError("MRP: target volatility must be positive and finite");
        }
        break;
    case ObjectiveKind::msrp:
        if (!std::isfinite(risk_free_rate)) throw SolverError("MSRP: non-finite risk-free rate");
        break;
    case ObjectiveKind::mop:
    case ObjectiveKind::bmop:
        if (!(risk_aversion > 0.0) || !std::isfinite(risk_aversion)) {
            throw SolverError(std::string(objective_name(kind)) +
                              ": risk aversion must be positive and finite");
        }
        break;
    }
}

PortfolioStats portfolio_stats(const Weights& weights, const ExpectedStats& stats,
                               double risk_free_rate) {
    if (weights.values.size() != stats.mean.size()) {
        throw SolverError("portfolio_stats: dimension mismatch");
    }
    PortfolioStats ps;
    ps.expected_return = weights.values.dot(stats.mean);
    ps.volatility = std::sqrt(std::max(0.0, weights.values.dot(stats.covariance * weights.values)));
    if (ps.volatility > 0.0) {
        ps.sharpe = (ps.expected_return - risk_free_rate) / ps.volatility;
    }
    return ps;
}

PortfolioResult build_portfolio(const PortfolioObjective& objective, const ExpectedStats& stats,
                                const WeightBounds& bounds, const SolverSettings& settings,
                                const AnnealSchedule& schedule, double risk_free_rate) {
    const Eigen::Index n = stats.mean.size();
    if (n < 1 || Eigen::Index(stats.tickers.size()) != n) {
        throw SolverError("build_portfolio: stats tickers do not match dimensions");
    }
    objective.validate(stats.tickers.size());

    switch (objective.kind) {
    case ObjectiveKind::ewp: {
        Weights w{stats.tickers, Eigen::VectorXd::Constant(n, 1.0 / double(n))};
        return with_stats(std::move(w), stats, risk_free_rate, {});
    }
    case ObjectiveKind::mcp: {
        Eigen::VectorXd caps =
            Eigen::Map<const Eigen::VectorXd>(objective.market_caps.data(), n);
        Weights w{stats.tickers, caps / caps.sum()};
        return with_stats(std::move(w), stats, risk_free_rate, {});
    }
    case ObjectiveKind::mvp: {
        SolveResult r = solve_mvp(stats, objective.target_return, bounds, settings);
        return with_stats(std::move(r.weights), stats, risk_free_rate, std::move(r.flags));
    }
    case ObjectiveKind::mrp: {
        SolveResult r = solve_mrp(stats, objective.target_volatility, bounds, settings);
        return with_stats(std::move(r.weights), stats, risk_free_rate, std::move(r.flags));
    }
    case ObjectiveKind::msrp: {
        SolveResult r = solve_msrp(stats, objective.risk_free_rate, bounds, settings);
        return with_stats(std::move(r.weights), stats, risk_free_rate, std::move(r.flags));
    }
    case ObjectiveKind::mop: {
        SolveResult r = solve_mop(stats, objective.risk_aversion, bounds, settings);
        return with_stats(std::move(r.weights), stats, risk_free_rate, std::move(r.flags));
    }
    case ObjectiveKind::bmop: {
        const QuboModel model = build_bmop(stats, objective.risk_aversion);
        const BinarySelection selection = anneal(model, schedule);
        NormalizedSelection normalized = selection_to_weights(selection, stats.tickers);
        std::vector<std::string> flags;
        if (normalized.zero_selection) flags.push_back("zero-selection-fallback");
        return with_stats(std::move(normalized.weights), stats, risk_free_rate,
                          std::move(flags));
    }
    }
    throw SolverError("build_portfolio: unknown objective kind");
}

std::vector<FrontierPoint> efficient_frontier(const ExpectedStats& stats,
                                              const WeightBounds& bounds,
                                              const SolverSettings& settings, int points) {
    if (points < 2) throw SolverError("efficient_frontier: need at least 2 points");

    const SolveResult gmv = solve_mvp(stats, std::nullopt, bounds, settings);
    const double r_low = stats.mean.dot(gmv.weights.values);
    const double r_high = stats.mean.dot(max_return_vertex(stats.mean, bounds));

    std::vector<double> targets(static_cast<std::size_t>(points));
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const double t = double(k) / double(targets.size() - 1);
        targets[k] = r_low + t * (r_high - r_low);
    }

    std::vector<FrontierPoint> frontier;
    frontier.reserve(targets.size());
    for (auto& solved : sweep_mvp(stats, targets, bounds, settings)) {
        FrontierPoint point;
        point.volatility = std::sqrt(std::max(0.0, solved.objective));
        point.expected_return = stats.mean.dot(solved.weights.values);
        point.weights = std::move(solved.weights);
        frontier.push_back(std::move(point));
    }
    return frontier;
}

} // namespace portopt
