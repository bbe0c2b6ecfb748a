#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "portopt/market_data.hpp"

namespace portopt {

/// Per-period expected-return vector and positive-semidefinite covariance.
struct ExpectedStats {
    std::vector<std::string> tickers;
    Eigen::VectorXd mean;       // length N
    Eigen::MatrixXd covariance; // N x N

    /// Throws SolverError if the matrix is asymmetric beyond 1e-12, has a
    /// negative diagonal, or an eigenvalue below -1e-10.
    void validate() const;
};

enum class EstimatorMode { full, random, weighted };

/// Controls the resampling estimators. Zero-valued window_length/half_life
/// select the documented defaults: window_length = max(2, samples/2),
/// half_life = half of the span of valid window end positions.
struct EstimatorConfig {
    EstimatorMode mode = EstimatorMode::full;
    int window_length = 0;
    int sample_count = 32;
    double half_life = 0.0;
    std::uint64_t seed = 0;
};

/// Sample mean and covariance (k-1 denominator) over the whole table.
ExpectedStats estimate_full(const ReturnsTable& returns);

/// Draws sample_count contiguous windows uniformly over valid start offsets,
/// computes per-window stats, and aggregates elementwise by median. The
/// aggregated covariance is repaired to PSD by eigenvalue clipping.
ExpectedStats estimate_random(const ReturnsTable& returns, const EstimatorConfig& config);

/// Same sampling as estimate_random, but windows are combined by a weighted
/// average with weight 2^(-age/half_life), age measured from the most recent
/// sample to the window's end.
ExpectedStats estimate_weighted(const ReturnsTable& returns, const EstimatorConfig& config);

/// Dispatch on config.mode.
ExpectedStats estimate(const ReturnsTable& returns, const EstimatorConfig& config);

/// Clips negative eigenvalues to zero and symmetrizes. No-op for matrices
/// that are already PSD.
Eigen::MatrixXd clip_to_psd(const Eigen::MatrixXd& matrix);

/// Covariance conditioning fallback: adds eps*I with
/// eps = 1e-8 * trace(cov) / N. Solvers request this when they detect a
/// singular covariance; results using it carry a "ridge-repaired" flag.
ExpectedStats ridged(const ExpectedStats& stats);

/// Median with the usual average-of-middles convention for even lengths.
double median(std::vector<double> values);

} // namespace portopt
