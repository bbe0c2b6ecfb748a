#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "portopt/backtest.hpp"
#include "portopt/config.hpp"
#include "portopt/errors.hpp"
#include "portopt/market_data.hpp"
#include "portopt/portfolio.hpp"
#include "portopt/report.hpp"
#include "portopt/text.hpp"

namespace {

using namespace portopt;

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool verbose = false;
};

void log(const CliOptions& options, const std::string& message) {
    if (options.verbose) std::cerr << message << '\n';
}

RunConfig prepare(const CliOptions& options) {
    RunConfig config = load_config(options.config_path);
    if (!options.out_dir.empty()) config.output_dir = options.out_dir;
    if (options.seed_given) config.set_seed(options.seed);
    if (const char* env = std::getenv("PORTOPT_CACHE_DIR"); env != nullptr && *env != '\0') {
        config.cache_dir = std::filesystem::path(env);
    }
    return config;
}

PriceTable load_clipped(const RunConfig& config, const CliOptions& options) {
    const PriceTable table = load_prices(config.prices_csv, config.tickers, config.cache_dir);
    const PriceTable clipped = table.clipped(config.start_date, config.end_date);
    log(options, "loaded " + std::to_string(clipped.dates.size()) + " aligned dates for " +
                     std::to_string(clipped.tickers.size()) + " tickers");
    return clipped;
}

void write_figure(const RunConfig& config, const std::string& stem,
                  const FigureArtifact& artifact) {
    write_file(config.output_dir / (stem + ".svg"), artifact.svg);
    write_file(config.output_dir / (stem + ".csv"), artifact.csv);
}

void emit_cumulative_figure(const RunConfig& config, const std::string& stem,
                            const std::string& title, const std::vector<std::string>& labels,
                            const std::vector<Date>& dates,
                            const std::vector<std::vector<double>>& series) {
    FigureSpec spec{FigureKind::cumulative_returns, title, labels};
    write_figure(config, stem, emit_figure(spec, SeriesData{dates, series}));
}

void emit_heatmap_figure(const RunConfig& config, const std::string& stem,
                         const std::string& title, const std::vector<std::string>& labels,
                         const Eigen::MatrixXd& matrix) {
    FigureSpec spec{FigureKind::correlation_heatmap, title, labels};
    write_figure(config, stem, emit_figure(spec, HeatmapData{matrix}));
}

/// Frontier plus asset markers and one portfolio marker per configured
/// objective, all computed on the same stats.
void emit_frontier_figure(const RunConfig& config, const std::string& stem,
                          const ExpectedStats& stats) {
    const auto frontier =
        efficient_frontier(stats, config.bounds, config.settings, config.settings.frontier_points);
    ScatterData data;
    for (const auto& point : frontier) {
        data.frontier_volatility.push_back(point.volatility);
        data.frontier_return.push_back(point.expected_return);
    }
    for (Eigen::Index i = 0; i < stats.mean.size(); ++i) {
        data.points.push_back({std::sqrt(stats.covariance(i, i)), stats.mean(i),
                               stats.tickers[std::size_t(i)], "asset"});
    }
    for (const auto& objective : config.objectives) {
        const PortfolioResult result = build_portfolio(
            objective, stats, config.bounds, config.settings, config.schedule,
            config.risk_free_rate);
        data.points.push_back({result.volatility, result.expected_return,
                               objective_name(objective.kind), "portfolio"});
    }
    FigureSpec spec{FigureKind::frontier_scatter, "Expected return vs. volatility", {}};
    write_figure(config, stem, emit_figure(spec, data));
}

int run_stats(const RunConfig& config, const CliOptions& options) {
    const PriceTable prices = load_clipped(config, options);
    const ReturnsTable returns = simple_returns(prices);
    const ReturnsTable cumulative = cumulative_returns(returns);

    if (config.figures) {
        std::vector<std::vector<double>> series(prices.tickers.size());
        std::vector<std::vector<double>> samples(prices.tickers.size());
        for (std::size_t i = 0; i < prices.tickers.size(); ++i) {
            const auto column = Eigen::Index(i);
            series[i].assign(cumulative.returns.col(column).begin(),
                             cumulative.returns.col(column).end());
            samples[i].assign(returns.returns.col(column).begin(),
                              returns.returns.col(column).end());
        }
        emit_cumulative_figure(config, "stats_cumulative_returns",
                               "Cumulative returns of assets", prices.tickers, cumulative.dates,
                               series);
        FigureSpec dist{FigureKind::return_distribution, "Distribution of daily asset returns",
                        prices.tickers};
        write_figure(config, "stats_return_distribution",
                     emit_figure(dist, DistributionData{samples}));
        emit_heatmap_figure(config, "stats_correlation", "Correlation of daily asset returns",
                            prices.tickers, correlation_matrix(returns));
    }
    log(options, "stats artifacts written to " + config.output_dir.string());
    return 0;
}

int run_optimize(const RunConfig& config, const CliOptions& options) {
    const PriceTable prices = load_clipped(config, options);
    const ExpectedStats stats = estimate(simple_returns(prices), config.estimator);

    std::string csv =
        "# per-period (daily) figures; annualize with x252 (return) / xsqrt(252) (volatility)\n"
        "# binary portfolios solved by simulated annealing (no quantum hardware)\n"
        "objective,expected_return,volatility,sharpe,flags";
    for (const auto& ticker : prices.tickers) csv += "," + ticker;
    csv += '\n';
    for (const auto& objective : config.objectives) {
        const PortfolioResult result = build_portfolio(
            objective, stats, config.bounds, config.settings, config.schedule,
            config.risk_free_rate);
        csv += objective_name(objective.kind);
        csv += ',';
        csv += fmt_double(result.expected_return);
        csv += ',';
        csv += fmt_double(result.volatility);
        csv += ',';
        csv += result.sharpe ? fmt_double(*result.sharpe) : std::string("undefined");
        csv += ',';
        for (std::size_t f = 0; f < result.flags.size(); ++f) {
            if (f > 0) csv += ';';
            csv += result.flags[f];
        }
        for (Eigen::Index i = 0; i < result.weights.values.size(); ++i) {
            csv += ',';
            csv += fmt_double(result.weights.values(i));
        }
        csv += '\n';
    }
    write_file(config.output_dir / "optimize_portfolios.csv", csv);
    log(options, "portfolio table written to " + config.output_dir.string());
    return 0;
}

int run_frontier(const RunConfig& config, const CliOptions& options) {
    const PriceTable prices = load_clipped(config, options);
    const ExpectedStats stats = estimate(simple_returns(prices), config.estimator);
    const auto frontier =
        efficient_frontier(stats, config.bounds, config.settings, config.settings.frontier_points);

    std::string csv = "volatility,expected_return";
    for (const auto& ticker : prices.tickers) csv += "," + ticker;
    csv += '\n';
    for (const auto& point : frontier) {
        csv += fmt_double(point.volatility);
        csv += ',';
        csv += fmt_double(point.expected_return);
        for (Eigen::Index i = 0; i < point.weights.values.size(); ++i) {
            csv += ',';
            csv += fmt_double(point.weights.values(i));
        }
        csv += '\n';
    }
    write_file(config.output_dir / "frontier_points.csv", csv);
    if (config.figures) emit_frontier_figure(config, "frontier_scatter", stats);
    log(options, "frontier artifacts written to " + config.output_dir.string());
    return 0;
}

int run_backtest_cmd(const RunConfig& config, const CliOptions& options) {
    const PriceTable prices = load_prices(config.prices_csv, config.tickers, config.cache_dir);
    const BacktestReport report = run_backtest(prices, config.backtest());
    log(options, "backtest finished: " + std::to_string(report.windows.size()) + " windows");

    for (const auto& objective : report.objectives) {
        write_series_csv(report, objective,
                         config.output_dir / ("backtest_series_" + objective.name + ".csv"));
    }
    write_summary_csv(report, config.output_dir / "backtest_summary.csv");
    write_weights_csv(report, config.output_dir / "backtest_weights.csv");

    if (config.figures) {
        std::vector<std::string> labels;
        std::vector<std::vector<double>> series;
        for (const auto& objective : report.objectives) {
            labels.push_back(objective.name);
            series.push_back(objective.cumulative);
        }
        emit_cumulative_figure(config, "backtest_cumulative_returns",
                               "Cumulative portfolio returns (out of sample)", labels,
                               report.dates, series);
        emit_heatmap_figure(config, "backtest_correlation",
                            "Correlation of daily portfolio returns", labels,
                            report.correlation);
        const PriceTable clipped = prices.clipped(config.start_date, config.end_date);
        emit_frontier_figure(config, "backtest_frontier",
                             estimate(simple_returns(clipped), config.estimator));
    }
    log(options, "backtest artifacts written to " + config.output_dir.string());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"portfolio construction, optimization, and backtesting"};
    app.require_subcommand(1);

    CliOptions options;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", options.config_path, "JSON run configuration")
            ->required();
        cmd->add_option("--out", options.out_dir, "output directory override");
        cmd->add_option("--seed", options.seed, "seed override")
            ->each([&](const std::string&) { options.seed_given = true; });
        cmd->add_flag("--verbose", options.verbose, "progress logging on stderr");
    };
    add_common(app.add_subcommand("stats", "asset statistics and figures"));
    add_common(app.add_subcommand("optimize", "one portfolio per configured objective"));
    add_common(app.add_subcommand("frontier", "efficient frontier sweep"));
    add_common(app.add_subcommand("backtest", "rolling-window evaluation"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const RunConfig config = prepare(options);
        if (command == "stats") return run_stats(config, options);
        if (command == "optimize") return run_optimize(config, options);
        if (command == "frontier") return run_frontier(config, options);
        return run_backtest_cmd(config, options);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return int(ExitCode::config);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return int(ExitCode::data);
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return int(ExitCode::solver);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return int(ExitCode::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return int(ExitCode::failure);
    }
}
