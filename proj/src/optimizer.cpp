#include "portopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "portopt/errors.hpp"

namespace portopt {
namespace {

constexpr int kPenaltyRounds = 8;

void add_flag(std::vector<std::string>& flags, const std::string& flag) {
    if (std::find(flags.begin(), flags.end(), flag) == flags.end()) flags.push_back(flag);
}

/// Eigen-decomposition summary used for step sizes and singularity checks.
struct SigmaInfo {
    double lambda_max = 0.0;
    bool singular = false;
};

SigmaInfo analyze(const Eigen::MatrixXd& sigma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
    SigmaInfo info;
    info.lambda_max = std::max(0.0, eig.eigenvalues().maxCoeff());
    const double floor = 1e-12 * sigma.trace() / double(sigma.rows());
    info.singular = eig.eigenvalues().minCoeff() < floor;
    return info;
}

void check_inputs(const ExpectedStats& stats, const WeightBounds& bounds) {
    if (!stats.mean.allFinite() || !stats.covariance.allFinite()) {
        throw SolverError("solver: non-finite stats");
    }
    if (stats.covariance.rows() != stats.mean.size() ||
        stats.covariance.cols() != stats.mean.size()) {
        throw SolverError("solver: covariance shape does not match mean length");
    }
    bounds.validate(stats.mean.size());
}

Eigen::VectorXd start_point(Eigen::Index n, const WeightBounds& bounds) {
    return project_simplex_box(Eigen::VectorXd::Constant(n, 1.0 / double(n)), bounds.lower,
                               bounds.upper);
}

struct ProjectionEvent {
    double tau;
    int32_t index;
    bool enters; // true: leaves the upper clamp, false: reaches the lower clamp
};

/// Body of project_simplex_box with caller-owned scratch and output buffers.
///
/// Solves sum_i clip(v_i - tau, lower, upper) = 1 for tau. The left side is
/// non-increasing and piecewise linear with breakpoints at v_i - upper and
/// v_i - lower; walk them in order, tracking how many coordinates sit at
/// the upper bound, in the linear regime, or at the lower bound.
void project_simplex_box_into(const Eigen::VectorXd& point, double lower, double upper,
                              std::vector<ProjectionEvent>& heap_events, Eigen::VectorXd& out) {
    const Eigen::Index n = point.size();

    // This sits inside the gradient-descent hot loop, so small problems sort
    // on the stack and nothing here allocates.
    ProjectionEvent stack_events[64];
    ProjectionEvent* events = stack_events;
    if (2 * n > 64) {
        heap_events.resize(static_cast<std::size_t>(2 * n));
        events = heap_events.data();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        events[2 * i] = {point(i) - upper, int32_t(i), true};
        events[2 * i + 1] = {point(i) - lower, int32_t(i), false};
    }
    std::sort(events, events + 2 * n,
              [](const ProjectionEvent& a, const ProjectionEvent& b) { return a.tau < b.tau; });

    Eigen::Index at_upper = n, in_linear = 0, at_lower = 0;
    double linear_sum = 0.0; // sum of v_i over coordinates in the linear regime
    double tau = events[0].tau;
    bool found = false;
    for (Eigen::Index k = 0; k < 2 * n; ++k) {
        const ProjectionEvent& event = events[k];
        if (in_linear > 0) {
            const double f_here = double(at_upper) * upper +
                                  (linear_sum - double(in_linear) * event.tau) +
                                  double(at_lower) * lower;
            if (f_here <= 1.0) {
                tau = (double(at_upper) * upper + linear_sum + double(at_lower) * lower - 1.0) /
                      double(in_linear);
                found = true;
                break;
            }
        } else {
            const double f_flat = double(at_upper) * upper + double(at_lower) * lower;
            if (f_flat <= 1.0) {
                tau = event.tau;
                found = true;
                break;
            }
        }
        if (event.enters) {
            --at_upper;
            ++in_linear;
            linear_sum += point(event.index);
        } else {
            --in_linear;
            linear_sum -= point(event.index);
            ++at_lower;
        }
    }
    if (!found) {
        // All coordinates clamped low: feasibility (n*lower <= 1) makes this
        // the n*lower == 1 corner.
        tau = events[2 * n - 1].tau;
    }
    out = (point.array().min(upper + tau).max(lower + tau) - tau).matrix();
}

/// Projected gradient descent with fixed step 1/L. Stops when an iterate
/// moves less than `tol` in every coordinate. `gradient(x, g)` writes the
/// gradient at x into g; all buffers are reused so the loop never allocates.
template <typename Gradient>
Eigen::VectorXd pgd(Eigen::VectorXd w, Gradient&& gradient, double lipschitz,
                    const WeightBounds& bounds, const SolverSettings& settings) {
    const double step = 1.0 / std::max(lipschitz, 1e-300);
    Eigen::VectorXd trial(w.size());
    Eigen::VectorXd next(w.size());
    std::vector<ProjectionEvent> events;
    for (int it = 0; it < settings.max_iterations; ++it) {
        gradient(w, trial);
        trial = w - step * trial;
        project_simplex_box_into(trial, bounds.lower, bounds.upper, events, next);
        const double shift = (next - w).cwiseAbs().maxCoeff();
        w.swap(next);
        if (shift <= settings.tolerance) break;
    }
    return w;
}

/// Minimize w'Sigma w [+ rho * max(0, target - w.r)^2 ramped over rounds].
Eigen::VectorXd mvp_core(const Eigen::MatrixXd& sigma, const SigmaInfo& info,
                         const Eigen::VectorXd& means, std::optional<double> target_return,
                         const WeightBounds& bounds, const SolverSettings& settings,
                         Eigen::VectorXd w0) {
    if (!target_return) {
        return pgd(
            std::move(w0),
            [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g.noalias() = 2.0 * sigma.lazyProduct(x); },
            2.0 * info.lambda_max, bounds, settings);
    }

    const double target = *target_return;
    const double r_norm2 = means.squaredNorm();
    if (r_norm2 == 0.0) return w0; // target already vetted as attainable, so w.r = 0 >= target

    double rho = std::max(info.lambda_max, 1e-12 * r_norm2) / r_norm2;
    Eigen::VectorXd w = std::move(w0);
    for (int round = 0; round < kPenaltyRounds; ++round) {
        const auto gradient = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            g.noalias() = 2.0 * sigma.lazyProduct(x);
            const double gap = target - means.dot(x);
            if (gap > 0.0) g -= (2.0 * rho * gap) * means;
        };
        Eigen::VectorXd next = pgd(w, gradient, 2.0 * info.lambda_max + 2.0 * rho * r_norm2,
                                   bounds, settings);
        const bool settled = (next - w).cwiseAbs().maxCoeff() <= settings.tolerance &&
                             means.dot(next) >= target - settings.tolerance;
        w = std::move(next);
        if (settled && round > 0) break;
        rho *= settings.penalty_growth;
    }
    return w;
}

struct Prepared {
    Eigen::MatrixXd sigma; // possibly ridged copy used for iterations
    SigmaInfo info;
    std::vector<std::string> flags;
};

Prepared prepare(const ExpectedStats& stats) {
    Prepared p;
    p.info = analyze(stats.covariance);
    if (p.info.singular) {
        p.sigma = ridged(stats).covariance;
        p.info = analyze(p.sigma);
        add_flag(p.flags, "ridge-repaired");
    } else {
        p.sigma = stats.covariance;
    }
    return p;
}

SolveResult finish(const ExpectedStats& stats, Eigen::VectorXd w, double objective,
                   std::vector<std::string> flags) {
    SolveResult result;
    result.weights.tickers = stats.tickers;
    result.weights.values = std::move(w);
    result.objective = objective;
    result.flags = std::move(flags);
    return result;
}

bool lexicographically_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) != b(i)) return a(i) < b(i);
    }
    return false;
}

} // namespace

void WeightBounds::validate(Eigen::Index assets) const {
    if (!(lower >= 0.0) || !(lower < 1.0) || !(upper > 0.0) || !(upper <= 1.0) ||
        !(lower < upper)) {
        throw SolverError("bounds: need 0 <= lower < upper <= 1");
    }
    const double n = double(assets);
    if (n * lower > 1.0 + 1e-12 || n * upper < 1.0 - 1e-12) {
        throw SolverError("bounds: simplex intersection empty for N=" + std::to_string(assets));
    }
}

void validate_weights(const Weights& weights, const WeightBounds& bounds) {
    const auto& w = weights.values;
    if (std::abs(w.sum() - 1.0) > 1e-8) throw SolverError("weights: sum differs from 1");
    if ((w.array() < -1e-9).any()) throw SolverError("weights: negative entry");
    if ((w.array() < bounds.lower - 1e-9).any() || (w.array() > bounds.upper + 1e-9).any()) {
        throw SolverError("weights: outside bounds");
    }
}

Eigen::VectorXd project_simplex_box(const Eigen::VectorXd& point, double lower, double upper) {
    std::vector<ProjectionEvent> events;
    Eigen::VectorXd out;
    project_simplex_box_into(point, lower, upper, events, out);
    return out;
}

Eigen::VectorXd max_return_vertex(const Eigen::VectorXd& means, const WeightBounds& bounds) {
    const Eigen::Index n = means.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return means(a) > means(b); });

    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, bounds.lower);
    double budget = 1.0 - double(n) * bounds.lower;
    for (Eigen::Index i : order) {
        if (budget <= 0.0) break;
        const double add = std::min(bounds.upper - bounds.lower, budget);
        w(i) += add;
        budget -= add;
    }
    return w;
}

SolveResult solve_mvp(const ExpectedStats& stats, std::optional<double> target_return,
                      const WeightBounds& bounds, const SolverSettings& settings) {
    check_inputs(stats, bounds);
    Prepared p = prepare(stats);

    if (target_return) {
        const Eigen::VectorXd vertex = max_return_vertex(stats.mean, bounds);
        const double max_return = stats.mean.dot(vertex);
        if (*target_return > max_return + 1e-12 * (1.0 + std::abs(max_return))) {
            add_flag(p.flags, "return-infeasible");
            return finish(stats, vertex, vertex.dot(stats.covariance * vertex),
                          std::move(p.flags));
        }
    }

    Eigen::VectorXd w = mvp_core(p.sigma, p.info, stats.mean, target_return, bounds, settings,
                                 start_point(stats.mean.size(), bounds));
    const double objective = w.dot(stats.covariance * w);
    return finish(stats, std::move(w), objective, std::move(p.flags));
}

SolveResult solve_mrp(const ExpectedStats& stats, double target_volatility,
                      const WeightBounds& bounds, const SolverSettings& settings) {
    check_inputs(stats, bounds);
    if (!(target_volatility > 0.0)) throw SolverError("MRP: target volatility must be > 0");
    Prepared p = prepare(stats);
    const double v2 = target_volatility * target_volatility;

    // The unconstrained maximum of the linear objective is the greedy vertex;
    // if it already sits inside the variance ball it is globally optimal.
    const Eigen::VectorXd vertex = max_return_vertex(stats.mean, bounds);
    if (vertex.dot(stats.covariance * vertex) <= v2 * (1.0 + 1e-12)) {
        return finish(stats, vertex, stats.mean.dot(vertex), std::move(p.flags));
    }

    Eigen::VectorXd gmv = mvp_core(p.sigma, p.info, stats.mean, std::nullopt, bounds, settings,
                                   start_point(stats.mean.size(), bounds));
    if (gmv.dot(stats.covariance * gmv) > v2 * (1.0 + 1e-9)) {
        add_flag(p.flags, "volatility-infeasible");
        return finish(stats, gmv, stats.mean.dot(gmv), std::move(p.flags));
    }

    // max w.r - rho*max(0, w'Sw - V^2)^2, starting from the feasible GMV.
    // On the simplex |Sigma w| <= lambda_max, which gives the Lipschitz bound
    // 12 * rho * lambda_max^2 for the penalty gradient.
    const double lmax = std::max(p.info.lambda_max, 1e-300);
    double rho = (stats.mean.norm() + 1e-30) / (lmax * lmax);
    Eigen::VectorXd w = gmv;
    for (int round = 0; round < kPenaltyRounds; ++round) {
        const auto gradient = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            g.noalias() = p.sigma.lazyProduct(x);
            const double excess = x.dot(g) - v2;
            if (excess > 0.0) {
                g *= 4.0 * rho * excess;
                g -= stats.mean;
            } else {
                g = -stats.mean;
            }
        };
        w = pgd(std::move(w), gradient, 12.0 * rho * lmax * lmax, bounds, settings);
        rho *= settings.penalty_growth;
    }
    return finish(stats, std::move(w), stats.mean.dot(w), std::move(p.flags));
}

SolveResult solve_mop(const ExpectedStats& stats, double risk_aversion,
                      const WeightBounds& bounds, const SolverSettings& settings) {
    check_inputs(stats, bounds);
    if (!(risk_aversion > 0.0)) throw SolverError("MOP: risk aversion must be > 0");
    Prepared p = prepare(stats);

    Eigen::VectorXd w;
    if (p.info.lambda_max == 0.0) {
        w = max_return_vertex(stats.mean, bounds); // objective is purely linear
    } else {
        const auto gradient = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            g.noalias() = 2.0 * p.sigma.lazyProduct(x);
            g -= risk_aversion * stats.mean;
        };
        w = pgd(start_point(stats.mean.size(), bounds), gradient, 2.0 * p.info.lambda_max,
                bounds, settings);
    }
    const double objective =
        w.dot(stats.covariance * w) - risk_aversion * stats.mean.dot(w);
    return finish(stats, std::move(w), objective, std::move(p.flags));
}

std::vector<SolveResult> sweep_mvp(const ExpectedStats& stats,
                                   const std::vector<double>& targets,
                                   const WeightBounds& bounds, const SolverSettings& settings) {
    check_inputs(stats, bounds);
    Prepared p = prepare(stats);
    const Eigen::VectorXd vertex = max_return_vertex(stats.mean, bounds);
    const double max_return = stats.mean.dot(vertex);

    std::vector<SolveResult> results;
    results.reserve(targets.size());
    Eigen::VectorXd warm = start_point(stats.mean.size(), bounds);
    for (double target : targets) {
        std::vector<std::string> flags = p.flags;
        if (target > max_return + 1e-12 * (1.0 + std::abs(max_return))) {
            add_flag(flags, "return-infeasible");
            results.push_back(finish(stats, vertex, vertex.dot(stats.covariance * vertex),
                                     std::move(flags)));
            continue;
        }
        warm = mvp_core(p.sigma, p.info, stats.mean, target, bounds, settings, warm);
        results.push_back(
            finish(stats, warm, warm.dot(stats.covariance * warm), std::move(flags)));
    }
    return results;
}

namespace {

std::vector<double> uniform_targets(double lo, double hi, int points) {
    std::vector<double> targets(static_cast<std::size_t>(points));
    for (std::size_t k = 0; k < targets.size(); ++k) {
        targets[k] = lo + (double(k) / double(points - 1)) * (hi - lo);
    }
    return targets;
}

struct SharpeBest {
    SolveResult result;
    double sharpe = 0.0;
    double volatility = 0.0;
    double target = 0.0; // the sweep target that produced the incumbent
    bool found = false;
};

void keep_best_sharpe(const ExpectedStats& stats, double risk_free_rate,
                      const std::vector<double>& targets,
                      const std::vector<SolveResult>& candidates, SharpeBest& best) {
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const SolveResult& candidate = candidates[k];
        const double variance =
            candidate.weights.values.dot(stats.covariance * candidate.weights.values);
        if (!(variance > 0.0)) continue; // Sharpe undefined at zero volatility
        const double vol = std::sqrt(variance);
        const double sharpe = (stats.mean.dot(candidate.weights.values) - risk_free_rate) / vol;
        const bool better =
            !best.found || sharpe > best.sharpe ||
            (sharpe == best.sharpe &&
             (vol < best.volatility ||
              (vol == best.volatility &&
               lexicographically_less(candidate.weights.values, best.result.weights.values))));
        if (better) {
            best.result = candidate;
            best.sharpe = sharpe;
            best.volatility = vol;
            best.target = targets[k];
            best.found = true;
        }
    }
}

} // namespace

SolveResult solve_msrp(const ExpectedStats& stats, double risk_free_rate,
                       const WeightBounds& bounds, const SolverSettings& settings) {
    check_inputs(stats, bounds);
    if (settings.frontier_points < 2) throw SolverError("MSRP: frontier_points must be >= 2");

    std::vector<std::string> flags;
    if ((stats.mean.array() <= risk_free_rate).all()) add_flag(flags, "degenerate");

    const SolveResult gmv = solve_mvp(stats, std::nullopt, bounds, settings);
    const double r_low = stats.mean.dot(gmv.weights.values);
    const double r_high = stats.mean.dot(max_return_vertex(stats.mean, bounds));

    std::vector<double> targets = uniform_targets(r_low, r_high, settings.frontier_points);
    SharpeBest best;
    keep_best_sharpe(stats, risk_free_rate, targets, sweep_mvp(stats, targets, bounds, settings),
                     best);
    if (!best.found) {
        throw SolverError("MSRP: degenerate portfolio, zero volatility everywhere");
    }

    // The coarse sweep brackets the tangency return to within one spacing.
    // Sharpe error grows with the square of that spacing, so three zoom
    // rounds around the incumbent (each cutting the bracket 4x) tighten the
    // ratio ~4000x over the sweep alone at the cost of 27 warm solves.
    double spacing = (r_high - r_low) / double(settings.frontier_points - 1);
    for (int round = 0; round < 3 && spacing > 0.0; ++round) {
        const double lo = std::max(r_low, best.target - spacing);
        const double hi = std::min(r_high, best.target + spacing);
        if (!(hi > lo)) break;
        targets = uniform_targets(lo, hi, 9);
        keep_best_sharpe(stats, risk_free_rate, targets,
                         sweep_mvp(stats, targets, bounds, settings), best);
        spacing = (hi - lo) / 8.0;
    }

    SolveResult result = std::move(best.result);
    result.objective = best.sharpe;
    for (const auto& flag : flags) add_flag(result.flags, flag);
    return result;
}

} // namespace portopt
