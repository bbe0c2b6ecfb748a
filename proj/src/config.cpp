#include "portopt/config.hpp"

#include <cmath>
#include <initializer_list>

#include <json.hpp>

#include "portopt/errors.hpp"
#include "portopt/rng.hpp"
#include "portopt/text.hpp"

namespace portopt {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError("config: " + path + ": " + message);
}

void expect_object(const json& value, const std::string& path) {
    if (!value.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, unused] : obj.items()) {
        bool known = false;
        for (const char* name : allowed) {
            if (key == name) {
                known = true;
                break;
            }
        }
        if (!known) fail(path.empty() ? key : path + "." + key, "unknown key");
    }
}

double number_at(const json& obj, const std::string& path, const char* key, double fallback,
                 bool required = false) {
    if (!obj.contains(key)) {
        if (required) fail(path + "." + key, "required key missing");
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

int int_at(const json& obj, const std::string& path, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::string string_at(const json& obj, const std::string& path, const char* key,
                      bool required, const std::string& fallback = "") {
    if (!obj.contains(key)) {
        if (required) fail(path + "." + key, "required key missing");
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

Date date_at(const json& obj, const std::string& path, const char* key) {
    const std::string text = string_at(obj, path, key, true);
    const auto parsed = Date::parse(text);
    if (!parsed) fail(path + "." + key, "expected an ISO-8601 date, got '" + text + "'");
    return *parsed;
}

PortfolioObjective parse_objective(const json& obj, const std::string& path,
                                   std::size_t assets, double risk_free_rate) {
    expect_object(obj, path);
    const std::string kind_name = string_at(obj, path, "kind", true);
    const auto kind = objective_from_name(kind_name);
    if (!kind) fail(path + ".kind", "unknown objective '" + kind_name + "'");

    PortfolioObjective objective;
    objective.kind = *kind;
    switch (*kind) {
    case ObjectiveKind::ewp:
        reject_unknown(obj, path, {"kind"});
        break;
    case ObjectiveKind::mcp: {
        reject_unknown(obj, path, {"kind", "market_caps"});
        if (!obj.contains("market_caps")) fail(path + ".market_caps", "required key missing");
        const json& caps = obj.at("market_caps");
        if (!caps.is_array()) fail(path + ".market_caps", "expected an array");
        for (const json& cap : caps) {
            if (!cap.is_number()) fail(path + ".market_caps", "expected numbers");
            objective.market_caps.push_back(cap.get<double>());
        }
        if (objective.market_caps.size() != assets) {
            fail(path + ".market_caps", "expected one entry per ticker (" +
                                            std::to_string(assets) + ")");
        }
        break;
    }
    case ObjectiveKind::mvp:
        reject_unknown(obj, path, {"kind", "target_return_annual"});
        objective.target_return =
            number_at(obj, path, "target_return_annual", 0.0, true) / kPeriodsPerYear;
        break;
    case ObjectiveKind::mrp:
        reject_unknown(obj, path, {"kind", "target_volatility_annual"});
        objective.target_volatility =
            number_at(obj, path, "target_volatility_annual", 0.0, true) /
            std::sqrt(kPeriodsPerYear);
        break;
    case ObjectiveKind::msrp:
        reject_unknown(obj, path, {"kind"});
        objective.risk_free_rate = risk_free_rate;
        break;
    case ObjectiveKind::mop:
    case ObjectiveKind::bmop:
        reject_unknown(obj, path, {"kind", "risk_aversion"});
        objective.risk_aversion = number_at(obj, path, "risk_aversion", 1.0);
        break;
    }
    try {
        objective.validate(assets);
    } catch (const SolverError& e) {
        fail(path, e.what());
    }
    return objective;
}

} // namespace

void RunConfig::set_seed(std::uint64_t value) {
    seed = value;
    estimator.seed = derive_seed(seed, {1});
    schedule.seed = derive_seed(seed, {2});
}

BacktestConfig RunConfig::backtest() const {
    BacktestConfig config;
    config.start_date = start_date;
    config.end_date = end_date;
    config.train_periods = train_periods;
    config.test_periods = test_periods;
    config.step_periods = step_periods;
    config.objectives = objectives;
    config.estimator = estimator;
    config.bounds = bounds;
    config.settings = settings;
    config.schedule = schedule;
    config.risk_free_rate = risk_free_rate;
    config.threads = threads;
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    json root;
    try {
        root = json::parse(read_file(path));
    } catch (const IoError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    expect_object(root, "(root)");
    reject_unknown(root, "", {"seed", "data", "estimator", "bounds", "solver", "anneal",
                              "backtest", "objectives", "risk_free_rate_annual", "output"});

    RunConfig config;

    if (root.contains("seed")) {
        const json& seed = root.at("seed");
        if (!seed.is_number_unsigned()) fail("seed", "expected an unsigned integer");
        config.set_seed(seed.get<std::uint64_t>());
    } else {
        config.set_seed(0);
    }

    config.risk_free_rate =
        number_at(root, "(root)", "risk_free_rate_annual", 0.0) / kPeriodsPerYear;

    if (!root.contains("data")) fail("data", "required key missing");
    const json& data = root.at("data");
    expect_object(data, "data");
    reject_unknown(data, "data", {"prices_csv", "tickers", "start_date", "end_date",
                                  "cache_dir"});
    config.prices_csv = string_at(data, "data", "prices_csv", true);
    if (config.prices_csv.is_relative()) {
        config.prices_csv = path.parent_path() / config.prices_csv;
    }
    if (!std::filesystem::exists(config.prices_csv)) {
        fail("data.prices_csv", "file not found: " + config.prices_csv.string());
    }
    if (!data.contains("tickers")) fail("data.tickers", "required key missing");
    const json& tickers = data.at("tickers");
    if (!tickers.is_array() || tickers.empty()) {
        fail("data.tickers", "expected a nonempty array");
    }
    for (const json& ticker : tickers) {
        if (!ticker.is_string()) fail("data.tickers", "expected strings");
        config.tickers.push_back(ticker.get<std::string>());
    }
    config.start_date = date_at(data, "data", "start_date");
    config.end_date = date_at(data, "data", "end_date");
    if (!(config.start_date < config.end_date)) {
        fail("data.start_date", "must precede end_date");
    }
    if (data.contains("cache_dir")) {
        config.cache_dir = string_at(data, "data", "cache_dir", false);
    }

    if (root.contains("estimator")) {
        const json& est = root.at("estimator");
        expect_object(est, "estimator");
        reject_unknown(est, "estimator",
                       {"mode", "window_length", "sample_count", "half_life"});
        const std::string mode = string_at(est, "estimator", "mode", false, "full");
        if (mode == "full") {
            config.estimator.mode = EstimatorMode::full;
        } else if (mode == "random") {
            config.estimator.mode = EstimatorMode::random;
        } else if (mode == "weighted") {
            config.estimator.mode = EstimatorMode::weighted;
        } else {
            fail("estimator.mode", "expected full, random, or weighted");
        }
        config.estimator.window_length = int_at(est, "estimator", "window_length", 0);
        config.estimator.sample_count = int_at(est, "estimator", "sample_count", 32);
        config.estimator.half_life = number_at(est, "estimator", "half_life", 0.0);
        if (config.estimator.window_length < 0) fail("estimator.window_length", "must be >= 0");
        if (config.estimator.sample_count < 1) fail("estimator.sample_count", "must be >= 1");
        if (config.estimator.half_life < 0.0) fail("estimator.half_life", "must be >= 0");
    }

    if (root.contains("bounds")) {
        const json& bounds = root.at("bounds");
        expect_object(bounds, "bounds");
        reject_unknown(bounds, "bounds", {"lower", "upper"});
        config.bounds.lower = number_at(bounds, "bounds", "lower", 0.0);
        config.bounds.upper = number_at(bounds, "bounds", "upper", 1.0);
        if (!(config.bounds.lower >= 0.0) || !(config.bounds.upper <= 1.0) ||
            !(config.bounds.lower < config.bounds.upper)) {
            fail("bounds", "need 0 <= lower < upper <= 1");
        }
    }

    if (root.contains("solver")) {
        const json& solver = root.at("solver");
        expect_object(solver, "solver");
        reject_unknown(solver, "solver",
                       {"tolerance", "max_iterations", "penalty_growth", "frontier_points"});
        config.settings.tolerance = number_at(solver, "solver", "tolerance", 1e-9);
        config.settings.max_iterations = int_at(solver, "solver", "max_iterations", 50'000);
        config.settings.penalty_growth = number_at(solver, "solver", "penalty_growth", 10.0);
        config.settings.frontier_points = int_at(solver, "solver", "frontier_points", 50);
        if (!(config.settings.tolerance > 0.0)) fail("solver.tolerance", "must be > 0");
        if (config.settings.max_iterations < 1) fail("solver.max_iterations", "must be >= 1");
        if (!(config.settings.penalty_growth > 1.0)) {
            fail("solver.penalty_growth", "must be > 1");
        }
        if (config.settings.frontier_points < 2) fail("solver.frontier_points", "must be >= 2");
    }

    if (root.contains("anneal")) {
        const json& anneal = root.at("anneal");
        expect_object(anneal, "anneal");
        reject_unknown(anneal, "anneal", {"sweeps", "restarts", "beta_initial", "beta_final"});
        config.schedule.sweeps = int_at(anneal, "anneal", "sweeps", 2'000);
        config.schedule.restarts = int_at(anneal, "anneal", "restarts", 10);
        if (config.schedule.sweeps < 1) fail("anneal.sweeps", "must be >= 1");
        if (config.schedule.restarts < 1) fail("anneal.restarts", "must be >= 1");
        const bool has_initial = anneal.contains("beta_initial");
        const bool has_final = anneal.contains("beta_final");
        if (has_initial != has_final) {
            fail("anneal", "beta_initial and beta_final must be given together");
        }
        if (has_initial) {
            config.schedule.beta_initial = number_at(anneal, "anneal", "beta_initial", 0.0);
            config.schedule.beta_final = number_at(anneal, "anneal", "beta_final", 0.0);
            if (!(*config.schedule.beta_initial > 0.0) ||
                !(*config.schedule.beta_final > *config.schedule.beta_initial)) {
                fail("anneal", "need 0 < beta_initial < beta_final");
            }
        }
    }

    if (root.contains("backtest")) {
        const json& backtest = root.at("backtest");
        expect_object(backtest, "backtest");
        reject_unknown(backtest, "backtest",
                       {"train_periods", "test_periods", "step_periods", "threads"});
        config.train_periods = int_at(backtest, "backtest", "train_periods", 40);
        config.test_periods = int_at(backtest, "backtest", "test_periods", 5);
        config.step_periods = int_at(backtest, "backtest", "step_periods", 0);
        config.threads = int_at(backtest, "backtest", "threads", 1);
        if (config.train_periods < 2) fail("backtest.train_periods", "must be >= 2");
        if (config.test_periods < 1) fail("backtest.test_periods", "must be >= 1");
        if (config.step_periods < 0) fail("backtest.step_periods", "must be >= 0");
        if (config.threads < 1) fail("backtest.threads", "must be >= 1");
    }

    if (!root.contains("objectives")) fail("objectives", "required key missing");
    const json& objectives = root.at("objectives");
    if (!objectives.is_array() || objectives.empty()) {
        fail("objectives", "expected a nonempty array");
    }
    for (std::size_t i = 0; i < objectives.size(); ++i) {
        config.objectives.push_back(parse_objective(objectives.at(i),
                                                    "objectives[" + std::to_string(i) + "]",
                                                    config.tickers.size(),
                                                    config.risk_free_rate));
    }

    if (root.contains("output")) {
        const json& output = root.at("output");
        expect_object(output, "output");
        reject_unknown(output, "output", {"directory", "figures"});
        config.output_dir = string_at(output, "output", "directory", false, "out");
        if (output.contains("figures")) {
            const json& figures = output.at("figures");
            if (!figures.is_boolean()) fail("output.figures", "expected a boolean");
            config.figures = figures.get<bool>();
        }
    }

    return config;
}

} // namespace portopt
