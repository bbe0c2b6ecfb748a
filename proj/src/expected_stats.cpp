#include "portopt/expected_stats.hpp"

#include <algorithm>
#include <cmath>

#include "portopt/errors.hpp"
#include "portopt/rng.hpp"

namespace portopt {
namespace {

struct WindowStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

WindowStats stats_of_block(const Eigen::Ref<const Eigen::MatrixXd>& block) {
    const Eigen::Index k = block.rows();
    WindowStats out;
    out.mean = block.colwise().mean().transpose();
    const Eigen::MatrixXd centered = block.rowwise() - out.mean.transpose();
    out.covariance = centered.transpose() * centered / double(k - 1);
    return out;
}

struct ResolvedConfig {
    int window_length;
    int sample_count;
    double half_life;
};

ResolvedConfig resolve(const EstimatorConfig& config, Eigen::Index samples) {
    ResolvedConfig r;
    r.window_length =
        config.window_length > 0 ? config.window_length : std::max<int>(2, int(samples / 2));
    r.sample_count = config.sample_count;
    // Valid window end positions span [window_length-1, samples-1]; the
    // default half-life is half that span.
    const double stride_span = double(samples - r.window_length);
    r.half_life = config.half_life > 0.0 ? config.half_life : std::max(1.0, stride_span / 2.0);

    if (r.window_length < 2) throw SolverError("estimator: window_length must be >= 2");
    if (r.window_length > samples) {
        throw SolverError("estimator: window_length " + std::to_string(r.window_length) +
                          " exceeds sample length " + std::to_string(samples));
    }
    if (r.sample_count < 1) throw SolverError("estimator: sample_count must be >= 1");
    return r;
}

/// Window starts drawn uniformly from [0, samples - window_length].
std::vector<int> draw_starts(Eigen::Index samples, const ResolvedConfig& r, std::uint64_t seed) {
    Rng rng(seed);
    const std::uint64_t span = std::uint64_t(samples - r.window_length) + 1;
    std::vector<int> starts(static_cast<std::size_t>(r.sample_count));
    for (auto& s : starts) s = static_cast<int>(rng.below(span));
    return starts;
}

ExpectedStats finish(std::vector<std::string> tickers, Eigen::VectorXd mean,
                     Eigen::MatrixXd covariance) {
    ExpectedStats stats;
    stats.tickers = std::move(tickers);
    stats.mean = std::move(mean);
    stats.covariance = clip_to_psd(covariance);
    stats.validate();
    return stats;
}

} // namespace

void ExpectedStats::validate() const {
    const Eigen::Index n = mean.size();
    if (covariance.rows() != n || covariance.cols() != n) {
        throw SolverError("stats: covariance shape does not match mean length");
    }
    if (!mean.allFinite() || !covariance.allFinite()) {
        throw SolverError("stats: non-finite entries");
    }
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw SolverError("stats: covariance not symmetric");
    }
    if ((covariance.diagonal().array() < 0.0).any()) {
        throw SolverError("stats: negative variance on the diagonal");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance,
                                                       Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10) {
        throw SolverError("stats: covariance is not PSD");
    }
}

ExpectedStats estimate_full(const ReturnsTable& returns) {
    if (returns.returns.rows() < 2) {
        throw SolverError("estimator: need at least 2 return periods");
    }
    auto ws = stats_of_block(returns.returns);
    return finish(returns.tickers, std::move(ws.mean), std::move(ws.covariance));
}

ExpectedStats estimate_random(const ReturnsTable& returns, const EstimatorConfig& config) {
    const Eigen::Index samples = returns.returns.rows();
    const auto r = resolve(config, samples);
    const auto starts = draw_starts(samples, r, config.seed);

    std::vector<WindowStats> windows;
    windows.reserve(starts.size());
    for (int start : starts) {
        windows.push_back(stats_of_block(returns.returns.middleRows(start, r.window_length)));
    }

    const Eigen::Index n = returns.returns.cols();
    Eigen::VectorXd mean(n);
    Eigen::MatrixXd covariance(n, n);
    std::vector<double> probe(windows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t w = 0; w < windows.size(); ++w) probe[w] = windows[w].mean(i);
        mean(i) = median(probe);
        for (Eigen::Index j = i; j < n; ++j) {
            for (std::size_t w = 0; w < windows.size(); ++w) {
                probe[w] = windows[w].covariance(i, j);
            }
            const double m = median(probe);
            covariance(i, j) = m;
            covariance(j, i) = m;
        }
    }
    return finish(returns.tickers, std::move(mean), std::move(covariance));
}

ExpectedStats estimate_weighted(const ReturnsTable& returns, const EstimatorConfig& config) {
    const Eigen::Index samples = returns.returns.rows();
    const auto r = resolve(config, samples);
    const auto starts = draw_starts(samples, r, config.seed);

    const Eigen::Index n = returns.returns.cols();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd covariance = Eigen::MatrixXd::Zero(n, n);
    double total_weight = 0.0;
    for (int start : starts) {
        const auto ws = stats_of_block(returns.returns.middleRows(start, r.window_length));
        const int window_end = start + r.window_length - 1;
        const double age = double(samples - 1 - window_end);
        const double weight = std::exp2(-age / r.half_life);
        mean += weight * ws.mean;
        covariance += weight * ws.covariance;
        total_weight += weight;
    }
    mean /= total_weight;
    covariance /= total_weight;
    return finish(returns.tickers, std::move(mean), std::move(covariance));
}

ExpectedStats estimate(const ReturnsTable& returns, const EstimatorConfig& config) {
    switch (config.mode) {
        case EstimatorMode::full: return estimate_full(returns);
        case EstimatorMode::random: return estimate_random(returns, config);
        case EstimatorMode::weighted: return estimate_weighted(returns, config);
    }
    throw SolverError("estimator: unknown mode");
}

Eigen::MatrixXd clip_to_psd(const Eigen::MatrixXd& matrix) {
    Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd repaired =
        eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (repaired + repaired.transpose());
}

ExpectedStats ridged(const ExpectedStats& stats) {
    const Eigen::Index n = stats.mean.size();
    const double eps = 1e-8 * stats.covariance.trace() / double(n);
    ExpectedStats out = stats;
    out.covariance += eps * Eigen::MatrixXd::Identity(n, n);
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw SolverError("median of empty range");
    std::sort(values.begin(), values.end());
    const std::size_t k = values.size();
    if (k % 2 == 1) return values[k / 2];
    return 0.5 * (values[k / 2 - 1] + values[k / 2]);
}

} // namespace portopt
