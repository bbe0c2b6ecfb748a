#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "portopt/backtest.hpp"

namespace portopt {

/// Everything one run needs, loaded from a single JSON document. Rate-like
/// values are stored per period here; the file supplies them annualized
/// (`*_annual` keys) and load_config divides by 252 (returns, risk-free
/// rate) or sqrt(252) (volatilities). One top-level seed fans out to the
/// estimator and annealer substreams.
struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path prices_csv;
    std::vector<std::string> tickers;
    Date start_date;
    Date end_date;
    std::optional<std::filesystem::path> cache_dir;
    EstimatorConfig estimator;
    WeightBounds bounds{0.0, 1.0};
    SolverSettings settings;
    AnnealSchedule schedule;
    int train_periods = 40;
    int test_periods = 5;
    int step_periods = 0;
    int threads = 1;
    std::vector<PortfolioObjective> objectives;
    double risk_free_rate = 0.0;
    std::filesystem::path output_dir = "out";
    bool figures = true;

    /// Stores the seed and re-derives the estimator/annealer substreams.
    /// Used both at load time and for command-line overrides.
    void set_seed(std::uint64_t value);

    BacktestConfig backtest() const;
};

/// Parses and validates the JSON run configuration. Unknown keys anywhere in
/// the document are rejected with their full path, as are missing required
/// keys, type mismatches, malformed dates, and an unreadable prices file.
/// All failures throw ConfigError.
RunConfig load_config(const std::filesystem::path& path);

constexpr double kPeriodsPerYear = 252.0;

} // namespace portopt
