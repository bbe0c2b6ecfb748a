#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "portopt/expected_stats.hpp"
#include "portopt/optimizer.hpp"

namespace portopt {

/// Binary energy function E(x) = sum_i Q_ii x_i + sum_{i<j} Q_ij x_i x_j.
/// Stored dense with the strictly-lower triangle zero: the diagonal holds the
/// linear biases and the upper triangle the pairwise couplings.
struct QuboModel {
    Eigen::MatrixXd coefficients;

    Eigen::Index size() const { return coefficients.rows(); }

    /// Throws SolverError if non-square, non-finite, or the strictly-lower
    /// triangle is nonzero.
    void validate() const;
};

struct BinarySelection {
    std::vector<int> bits; // each 0 or 1
};

/// Simulated-annealing schedule. When either beta is unset both are scaled
/// from the model: beta_initial = 1/max|dE| (largest possible single-flip
/// move) and beta_final = 100/min nonzero |Q|, the latter clamped below at
/// 1e-9 * max|dE| so a tiny stray coefficient cannot freeze the schedule.
struct AnnealSchedule {
    int sweeps = 2'000;
    int restarts = 10;
    std::optional<double> beta_initial;
    std::optional<double> beta_final;
    std::uint64_t seed = 0;
};

/// Maps expected stats to the binary selection model: picking asset i
/// contributes -lambda*mean_i + var_i on the diagonal (x_i^2 = x_i folds the
/// quadratic self-term in) and 2*cov_ij per selected pair, since the source
/// objective sums over ordered pairs while E(x) sums i<j once.
QuboModel build_bmop(const ExpectedStats& stats, double risk_aversion);

double energy(const QuboModel& model, const BinarySelection& x);

/// Single-flip Metropolis annealing: per restart, random start bits; per
/// sweep, every bit proposed once in shuffled order with acceptance
/// min(1, exp(-beta*dE)); beta interpolates geometrically across sweeps.
/// Returns the lowest-energy state seen over all restarts, with the all-zero
/// state as the incumbent baseline. Restart r draws its whole stream from
/// (seed, r), so any parallel execution matches the sequential result.
BinarySelection anneal(const QuboModel& model, const AnnealSchedule& schedule);

/// Global minimizer by Gray-code enumeration, N <= 24. Ties break toward the
/// smallest bit vector read as a big-endian integer (bits[0] most
/// significant).
BinarySelection exhaustive_min(const QuboModel& model);

struct NormalizedSelection {
    Weights weights;
    bool zero_selection = false; // no bit set; equal-weight fallback applied
};

/// Equal weight 1/k over the k selected assets. An empty selection falls back
/// to 1/N over everything so a backtest window always yields a portfolio.
NormalizedSelection selection_to_weights(const BinarySelection& x,
                                         const std::vector<std::string>& tickers);

/// Debug text form: first line `N`, then one `i j value` line per nonzero
/// coefficient (row-major, 17 significant digits).
std::string qubo_to_text(const QuboModel& model);
QuboModel qubo_from_text(const std::string& text);

} // namespace portopt
