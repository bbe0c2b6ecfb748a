#include "portopt/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "portopt/errors.hpp"
#include "portopt/rng.hpp"
#include "portopt/text.hpp"

namespace portopt {
namespace {

ReturnsTable slice_rows(const ReturnsTable& table, int begin, int end) {
    ReturnsTable out;
    out.tickers = table.tickers;
    out.dates.assign(table.dates.begin() + begin, table.dates.begin() + end);
    out.returns = table.returns.middleRows(begin, end - begin);
    return out;
}

WindowResult run_window(const ReturnsTable& returns, const BacktestConfig& config,
                        const WindowPlan& plan) {
    WindowResult result;
    result.plan = plan;
    result.train_first = returns.dates[std::size_t(plan.train_begin)];
    result.train_last = returns.dates[std::size_t(plan.train_end - 1)];
    result.test_first = returns.dates[std::size_t(plan.train_end)];
    result.test_last = returns.dates[std::size_t(plan.test_end - 1)];

    EstimatorConfig estimator = config.estimator;
    estimator.seed = derive_seed(config.estimator.seed, {std::uint64_t(plan.index)});
    const ExpectedStats stats =
        estimate(slice_rows(returns, plan.train_begin, plan.train_end), estimator);

    result.per_objective.reserve(config.objectives.size());
    for (std::size_t o = 0; o < config.objectives.size(); ++o) {
        AnnealSchedule schedule = config.schedule;
        schedule.seed =
            derive_seed(config.schedule.seed, {std::uint64_t(plan.index), std::uint64_t(o)});
        ObjectiveWindow window;
        window.portfolio = build_portfolio(config.objectives[o], stats, config.bounds,
                                           config.settings, schedule, config.risk_free_rate);
        window.test_returns.reserve(std::size_t(plan.test_end - plan.train_end));
        for (int t = plan.train_end; t < plan.test_end; ++t) {
            window.test_returns.push_back(
                window.portfolio.weights.values.dot(returns.returns.row(t)));
        }
        result.per_objective.push_back(std::move(window));
    }
    return result;
}

/// Pearson correlation that tolerates constant columns (their off-diagonals
/// become 0) so a degenerate objective cannot abort reporting.
Eigen::MatrixXd lenient_correlation(const std::vector<ObjectiveSummary>& objectives) {
    const Eigen::Index k = Eigen::Index(objectives.size());
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(k, k);
    if (k == 0 || objectives.front().daily_returns.size() < 2) return corr;
    const std::size_t n = objectives.front().daily_returns.size();

    std::vector<std::vector<double>> centered(static_cast<std::size_t>(k));
    std::vector<double> norms(static_cast<std::size_t>(k), 0.0);
    for (std::size_t a = 0; a < std::size_t(k); ++a) {
        const auto& series = objectives[a].daily_returns;
        const double mean =
            std::accumulate(series.begin(), series.end(), 0.0) / double(n);
        centered[a].resize(n);
        for (std::size_t t = 0; t < n; ++t) centered[a][t] = series[t] - mean;
        norms[a] = std::sqrt(
            std::inner_product(centered[a].begin(), centered[a].end(), centered[a].begin(), 0.0));
    }
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = a + 1; b < k; ++b) {
            double value = 0.0;
            if (norms[std::size_t(a)] > 0.0 && norms[std::size_t(b)] > 0.0) {
                const double dot = std::inner_product(centered[std::size_t(a)].begin(),
                                                      centered[std::size_t(a)].end(),
                                                      centered[std::size_t(b)].begin(), 0.0);
                value = std::clamp(dot / (norms[std::size_t(a)] * norms[std::size_t(b)]), -1.0,
                                   1.0);
            }
            corr(a, b) = corr(b, a) = value;
        }
    }
    return corr;
}

std::string joined_flags(const std::vector<std::string>& flags) {
    std::string out;
    for (const auto& flag : flags) {
        if (!out.empty()) out += ';';
        out += flag;
    }
    return out;
}

const char* kConventionHeader =
    "# annualization: 252 periods/year (return x252, volatility xsqrt(252))\n"
    "# weights held fixed within each test span; portfolio return_t = w.r_t\n"
    "# binary portfolios solved by simulated annealing (no quantum hardware)\n";

} // namespace

void BacktestConfig::validate() const {
    if (!(start_date < end_date)) throw ConfigError("backtest: start_date must precede end_date");
    if (train_periods < 2) throw ConfigError("backtest: train_periods must be >= 2");
    if (test_periods < 1) throw ConfigError("backtest: test_periods must be >= 1");
    if (step_periods < 0) throw ConfigError("backtest: step_periods must be >= 1 (0 = default)");
    if (threads < 1) throw ConfigError("backtest: threads must be >= 1");
    if (objectives.empty()) throw ConfigError("backtest: no objectives configured");
}

std::vector<WindowPlan> plan_windows(Eigen::Index return_periods, const BacktestConfig& config) {
    config.validate();
    if (return_periods < config.train_periods + 1) {
        throw DataError("backtest: insufficient history: need at least " +
                        std::to_string(config.train_periods + 1) + " return periods, have " +
                        std::to_string(return_periods));
    }
    std::vector<WindowPlan> plans;
    const int periods = int(return_periods);
    for (int offset = 0; offset + config.train_periods + 1 <= periods;
         offset += config.step()) {
        WindowPlan plan;
        plan.index = int(plans.size());
        plan.train_begin = offset;
        plan.train_end = offset + config.train_periods;
        plan.test_end = std::min(plan.train_end + config.test_periods, periods);
        plan.short_test = plan.test_end - plan.train_end < config.test_periods;
        plans.push_back(plan);
    }
    return plans;
}

BacktestReport run_backtest(const PriceTable& prices, const BacktestConfig& config) {
    config.validate();
    const PriceTable clipped = prices.clipped(config.start_date, config.end_date);
    const ReturnsTable returns = simple_returns(clipped);
    const std::vector<WindowPlan> plans = plan_windows(returns.returns.rows(), config);

    std::vector<WindowResult> windows(plans.size());
    std::vector<std::exception_ptr> failures(plans.size());

    const auto process = [&](std::size_t w) {
        try {
            windows[w] = run_window(returns, config, plans[w]);
        } catch (...) {
            failures[w] = std::current_exception();
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(std::size_t(config.threads), plans.size());
    if (workers <= 1) {
        for (std::size_t w = 0; w < plans.size(); ++w) process(w);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (std::size_t w = next.fetch_add(1); w < plans.size();
                     w = next.fetch_add(1)) {
                    process(w);
                }
            });
        }
        for (auto& thread : pool) thread.join();
    }

    for (std::size_t w = 0; w < plans.size(); ++w) {
        if (!failures[w]) continue;
        const std::string where = "backtest window " + std::to_string(w) + ": ";
        try {
            std::rethrow_exception(failures[w]);
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        } catch (const SolverError& e) {
            throw SolverError(where + e.what());
        } catch (const std::exception& e) {
            throw SolverError(where + e.what());
        }
    }

    BacktestReport report;
    report.tickers = clipped.tickers;
    report.windows = std::move(windows);
    for (const auto& window : report.windows) {
        for (int t = window.plan.train_end; t < window.plan.test_end; ++t) {
            report.dates.push_back(returns.dates[std::size_t(t)]);
        }
    }

    // Duplicate objective kinds get ordinal suffixes so report rows stay
    // unambiguous.
    std::vector<int> kind_count(7, 0);
    for (const auto& objective : config.objectives) {
        ++kind_count[std::size_t(objective.kind)];
    }
    std::vector<int> kind_seen(7, 0);
    for (const auto& objective : config.objectives) {
        ObjectiveSummary summary;
        summary.name = objective_name(objective.kind);
        const auto kind_index = std::size_t(objective.kind);
        if (kind_count[kind_index] > 1) {
            summary.name += "-" + std::to_string(++kind_seen[kind_index]);
        }
        report.objectives.push_back(std::move(summary));
    }

    summarize(report, config.risk_free_rate);
    return report;
}

void summarize(BacktestReport& report, double risk_free_rate) {
    if (report.windows.empty()) throw SolverError("summarize: no completed windows");
    const bool short_final = report.windows.back().plan.short_test;

    for (std::size_t o = 0; o < report.objectives.size(); ++o) {
        ObjectiveSummary& summary = report.objectives[o];
        summary.daily_returns.clear();
        std::set<std::string> flags;
        for (const auto& window : report.windows) {
            const auto& obj = window.per_objective[o];
            summary.daily_returns.insert(summary.daily_returns.end(), obj.test_returns.begin(),
                                         obj.test_returns.end());
            flags.insert(obj.portfolio.flags.begin(), obj.portfolio.flags.end());
        }
        if (short_final) flags.insert("short-final-window");
        summary.flags.assign(flags.begin(), flags.end());

        summary.cumulative.clear();
        summary.cumulative.reserve(summary.daily_returns.size());
        double growth = 1.0;
        for (double r : summary.daily_returns) {
            growth *= 1.0 + r;
            summary.cumulative.push_back(growth - 1.0);
        }

        const std::size_t n = summary.daily_returns.size();
        const double mean =
            std::accumulate(summary.daily_returns.begin(), summary.daily_returns.end(), 0.0) /
            double(n);
        double variance = 0.0;
        if (n >= 2) {
            for (double r : summary.daily_returns) variance += (r - mean) * (r - mean);
            variance /= double(n - 1);
        }
        summary.annualized_return = mean * 252.0;
        summary.annualized_volatility = std::sqrt(variance * 252.0);
        if (summary.annualized_volatility > 0.0) {
            summary.sharpe = (summary.annualized_return - 252.0 * risk_free_rate) /
                             summary.annualized_volatility;
        } else {
            summary.sharpe.reset();
        }
    }
    report.correlation = lenient_correlation(report.objectives);
}

void write_series_csv(const BacktestReport& report, const ObjectiveSummary& objective,
                      const std::filesystem::path& path) {
    std::string out = kConventionHeader;
    out += "date,daily_return,cumulative_return\n";
    for (std::size_t t = 0; t < objective.daily_returns.size(); ++t) {
        out += report.dates[t].to_string();
        out += ',';
        out += fmt_double(objective.daily_returns[t]);
        out += ',';
        out += fmt_double(objective.cumulative[t]);
        out += '\n';
    }
    write_file(path, out);
}

void write_summary_csv(const BacktestReport& report, const std::filesystem::path& path) {
    std::string out = kConventionHeader;
    out += "objective,annualized_return,annualized_volatility,sharpe,windows,flags\n";
    for (const auto& objective : report.objectives) {
        out += objective.name;
        out += ',';
        out += fmt_double(objective.annualized_return);
        out += ',';
        out += fmt_double(objective.annualized_volatility);
        out += ',';
        out += objective.sharpe ? fmt_double(*objective.sharpe) : std::string("undefined");
        out += ',';
        out += std::to_string(report.windows.size());
        out += ',';
        out += joined_flags(objective.flags);
        out += '\n';
    }
    write_file(path, out);
}

void write_weights_csv(const BacktestReport& report, const std::filesystem::path& path) {
    std::string out = kConventionHeader;
    out += "window,objective";
    for (const auto& ticker : report.tickers) {
        out += ',';
        out += ticker;
    }
    out += '\n';
    for (const auto& window : report.windows) {
        for (std::size_t o = 0; o < report.objectives.size(); ++o) {
            out += std::to_string(window.plan.index);
            out += ',';
            out += report.objectives[o].name;
            const auto& values = window.per_objective[o].portfolio.weights.values;
            for (Eigen::Index i = 0; i < values.size(); ++i) {
                out += ',';
                out += fmt_double(values(i));
            }
            out += '\n';
        }
    }
    write_file(path, out);
}

} // namespace portopt
