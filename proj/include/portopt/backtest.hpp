#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "portopt/market_data.hpp"
#include "portopt/portfolio.hpp"
#include "portopt/qubo.hpp"

namespace portopt {

/// Rolling-window evaluation parameters. Periods count rows of the returns
/// table, not calendar days. risk_free_rate is per period.
struct BacktestConfig {
    Date start_date;
    Date end_date;
    int train_periods = 40;
    int test_periods = 5;
    int step_periods = 0; // 0 selects test_periods, making test spans tile
    std::vector<PortfolioObjective> objectives;
    EstimatorConfig estimator;
    WeightBounds bounds;
    SolverSettings settings;
    AnnealSchedule schedule;
    double risk_free_rate = 0.0;
    int threads = 1;

    int step() const { return step_periods > 0 ? step_periods : test_periods; }
    void validate() const;
};

/// Half-open return-period index ranges of one window. Training covers
/// [train_begin, train_end), testing [train_end, test_end).
struct WindowPlan {
    int index = 0;
    int train_begin = 0;
    int train_end = 0;
    int test_end = 0;
    bool short_test = false; // final window truncated below test_periods
};

/// Offsets 0, step, 2*step, ... for as long as a full training span plus at
/// least one test period fits inside `return_periods`.
std::vector<WindowPlan> plan_windows(Eigen::Index return_periods, const BacktestConfig& config);

struct ObjectiveWindow {
    PortfolioResult portfolio;          // built on the training span
    std::vector<double> test_returns;   // w.r_t per test period, weights fixed
};

struct WindowResult {
    WindowPlan plan;
    Date train_first, train_last; // dates of the training return periods
    Date test_first, test_last;
    std::vector<ObjectiveWindow> per_objective;
};

struct ObjectiveSummary {
    std::string name;
    std::vector<double> daily_returns; // all windows' test returns, in order
    std::vector<double> cumulative;    // compounded from daily_returns
    double annualized_return = 0.0;    // mean daily * 252
    double annualized_volatility = 0.0; // sample stddev * sqrt(252)
    std::optional<double> sharpe;      // on annualized figures; unset at zero vol
    std::vector<std::string> flags;    // sorted union over windows
};

struct BacktestReport {
    std::vector<std::string> tickers;
    std::vector<Date> dates;           // dates of the concatenated test series
    std::vector<WindowResult> windows;
    std::vector<ObjectiveSummary> objectives;
    Eigen::MatrixXd correlation;       // cross-objective daily-return Pearson
};

/// Runs every window: estimate stats on the training span, build each
/// objective's portfolio, hold its weights fixed across the test span, and
/// record per-period returns w.r_t. Windows are independent and distributed
/// over config.threads workers; seeds derive from (window, objective) indices
/// so any thread count produces bit-identical output. A failing window aborts
/// the whole run, reporting its index.
BacktestReport run_backtest(const PriceTable& prices, const BacktestConfig& config);

/// Fills the per-objective summaries and the correlation matrix from the
/// windows already in `report`. Sharpe uses annualized figures:
/// (annualized_return - 252 * risk_free_rate) / annualized_volatility.
void summarize(BacktestReport& report, double risk_free_rate);

/// Artifact writers. Each file starts with `#` comment lines disclosing the
/// conventions in force (252-period annualization, fixed weights within each
/// test span, simulated annealing standing in for quantum hardware).
void write_series_csv(const BacktestReport& report, const ObjectiveSummary& objective,
                      const std::filesystem::path& path);
void write_summary_csv(const BacktestReport& report, const std::filesystem::path& path);
void write_weights_csv(const BacktestReport& report, const std::filesystem::path& path);

} // namespace portopt
