#include "portopt/qubo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "portopt/errors.hpp"
#include "portopt/rng.hpp"
#include "portopt/text.hpp"

namespace portopt {
namespace {

void check_selection(const QuboModel& model, const BinarySelection& x) {
    if (Eigen::Index(x.bits.size()) != model.size()) {
        throw SolverError("qubo: selection size does not match model");
    }
    for (int bit : x.bits) {
        if (bit != 0 && bit != 1) throw SolverError("qubo: selection entries must be 0 or 1");
    }
}

/// Energy change from flipping bit i in the current state: the coupling field
/// of the other set bits plus the linear bias, signed by the flip direction.
double flip_delta(const QuboModel& model, const std::vector<int>& bits, Eigen::Index i) {
    const auto& q = model.coefficients;
    double field = q(i, i);
    for (Eigen::Index j = 0; j < i; ++j) field += q(j, i) * bits[std::size_t(j)];
    for (Eigen::Index j = i + 1; j < model.size(); ++j) field += q(i, j) * bits[std::size_t(j)];
    return bits[std::size_t(i)] == 0 ? field : -field;
}

struct BetaRange {
    double initial;
    double final;
};

BetaRange resolve_betas(const QuboModel& model, const AnnealSchedule& schedule) {
    if (schedule.beta_initial && schedule.beta_final) {
        if (!(*schedule.beta_initial > 0.0) || !(*schedule.beta_final > *schedule.beta_initial)) {
            throw SolverError("anneal: need 0 < beta_initial < beta_final");
        }
        return {*schedule.beta_initial, *schedule.beta_final};
    }
    const auto& q = model.coefficients;
    double max_move = 0.0, min_nonzero = 0.0;
    for (Eigen::Index i = 0; i < model.size(); ++i) {
        double row = std::abs(q(i, i));
        for (Eigen::Index j = 0; j < i; ++j) row += std::abs(q(j, i));
        for (Eigen::Index j = i + 1; j < model.size(); ++j) row += std::abs(q(i, j));
        max_move = std::max(max_move, row);
        for (Eigen::Index j = i; j < model.size(); ++j) {
            const double a = std::abs(q(i, j));
            if (a > 0.0 && (min_nonzero == 0.0 || a < min_nonzero)) min_nonzero = a;
        }
    }
    if (max_move == 0.0) return {1.0, 100.0}; // flat landscape, scale is arbitrary
    return {1.0 / max_move, 100.0 / std::max(min_nonzero, 1e-9 * max_move)};
}

} // namespace

void QuboModel::validate() const {
    if (coefficients.rows() != coefficients.cols() || coefficients.rows() < 1) {
        throw SolverError("qubo: coefficient matrix must be square and nonempty");
    }
    if (!coefficients.allFinite()) throw SolverError("qubo: non-finite coefficient");
    for (Eigen::Index i = 0; i < size(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if (coefficients(i, j) != 0.0) {
                throw SolverError("qubo: strictly-lower triangle must be zero");
            }
        }
    }
}

QuboModel build_bmop(const ExpectedStats& stats, double risk_aversion) {
    if (!stats.mean.allFinite() || !stats.covariance.allFinite() ||
        !std::isfinite(risk_aversion)) {
        throw SolverError("bmop: non-finite stats");
    }
    const Eigen::Index n = stats.mean.size();
    QuboModel model;
    model.coefficients = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        model.coefficients(i, i) = -risk_aversion * stats.mean(i) + stats.covariance(i, i);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            model.coefficients(i, j) = 2.0 * stats.covariance(i, j);
        }
    }
    return model;
}

double energy(const QuboModel& model, const BinarySelection& x) {
    check_selection(model, x);
    double total = 0.0;
    for (Eigen::Index i = 0; i < model.size(); ++i) {
        if (!x.bits[std::size_t(i)]) continue;
        total += model.coefficients(i, i);
        for (Eigen::Index j = i + 1; j < model.size(); ++j) {
            if (x.bits[std::size_t(j)]) total += model.coefficients(i, j);
        }
    }
    return total;
}

BinarySelection anneal(const QuboModel& model, const AnnealSchedule& schedule) {
    model.validate();
    if (schedule.sweeps < 1 || schedule.restarts < 1) {
        throw SolverError("anneal: sweeps and restarts must be >= 1");
    }
    const BetaRange beta = resolve_betas(model, schedule);
    const Eigen::Index n = model.size();

    // The all-zero state (energy exactly 0) is the incumbent, so the result
    // can never be worse than leaving every asset unselected.
    BinarySelection best;
    best.bits.assign(std::size_t(n), 0);
    double best_energy = 0.0;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (int restart = 0; restart < schedule.restarts; ++restart) {
        Rng rng(derive_seed(schedule.seed, {std::uint64_t(restart)}));
        BinarySelection x;
        x.bits.resize(std::size_t(n));
        for (auto& bit : x.bits) bit = int(rng.next_u64() & 1u);
        double current = energy(model, x);

        const auto consider = [&](double tracked) {
            if (tracked < best_energy) {
                const double exact = energy(model, x); // drop incremental drift
                if (exact < best_energy) {
                    best_energy = exact;
                    best = x;
                }
            }
        };
        consider(current);

        const double ratio = beta.final / beta.initial;
        for (int sweep = 0; sweep < schedule.sweeps; ++sweep) {
            const double frac =
                schedule.sweeps == 1 ? 0.0 : double(sweep) / double(schedule.sweeps - 1);
            const double b = beta.initial * std::pow(ratio, frac);
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            rng.shuffle(order);
            for (Eigen::Index i : order) {
                const double delta = flip_delta(model, x.bits, i);
                if (delta <= 0.0 || rng.uniform01() < std::exp(-b * delta)) {
                    x.bits[std::size_t(i)] ^= 1;
                    current += delta;
                    consider(current);
                }
            }
        }
    }
    return best;
}

BinarySelection exhaustive_min(const QuboModel& model) {
    model.validate();
    const Eigen::Index n = model.size();
    if (n > 24) throw SolverError("exhaustive_min: N > 24 exceeds the enumeration budget");

    BinarySelection x;
    x.bits.assign(std::size_t(n), 0);
    BinarySelection best = x;
    double best_energy = 0.0;         // all-zero state
    std::uint32_t best_value = 0;     // bits read big-endian, the tie-break key
    std::uint32_t value = 0;
    double tracked = 0.0;

    // Gray-code walk: step k flips bit countr_zero(k), so each state is one
    // flip from its predecessor and the energy updates in O(N). Candidates
    // are re-evaluated from scratch before they replace the incumbent, which
    // keeps accumulated drift out of the final comparison.
    double guard = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        guard += std::abs(model.coefficients(i, i));
        for (Eigen::Index j = i + 1; j < n; ++j) guard += std::abs(model.coefficients(i, j));
    }
    guard = 1e-6 * guard; // > worst-case drift of 2^24 incremental updates

    const std::uint64_t states = std::uint64_t(1) << n;
    for (std::uint64_t k = 1; k < states; ++k) {
        const int i = std::countr_zero(k);
        tracked += flip_delta(model, x.bits, i);
        x.bits[std::size_t(i)] ^= 1;
        value ^= std::uint32_t(1) << (n - 1 - i);
        if (tracked <= best_energy + guard) {
            const double exact = energy(model, x);
            if (exact < best_energy || (exact == best_energy && value < best_value)) {
                best_energy = exact;
                best_value = value;
                best = x;
            }
        }
    }
    return best;
}

NormalizedSelection selection_to_weights(const BinarySelection& x,
                                         const std::vector<std::string>& tickers) {
    if (x.bits.size() != tickers.size()) {
        throw SolverError("selection_to_weights: ticker count does not match selection");
    }
    const std::size_t n = x.bits.size();
    const auto selected =
        std::size_t(std::count(x.bits.begin(), x.bits.end(), 1));

    NormalizedSelection out;
    out.weights.tickers = tickers;
    out.weights.values = Eigen::VectorXd::Zero(Eigen::Index(n));
    if (selected == 0) {
        out.weights.values.setConstant(1.0 / double(n));
        out.zero_selection = true;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (x.bits[i]) out.weights.values(Eigen::Index(i)) = 1.0 / double(selected);
    }
    return out;
}

std::string qubo_to_text(const QuboModel& model) {
    std::string out = std::to_string(model.size());
    out += '\n';
    for (Eigen::Index i = 0; i < model.size(); ++i) {
        for (Eigen::Index j = i; j < model.size(); ++j) {
            const double q = model.coefficients(i, j);
            if (q == 0.0) continue;
            out += std::to_string(i);
            out += ' ';
            out += std::to_string(j);
            out += ' ';
            out += fmt_double17(q);
            out += '\n';
        }
    }
    return out;
}

QuboModel qubo_from_text(const std::string& text) {
    std::istringstream in(text);
    Eigen::Index n = 0;
    if (!(in >> n) || n < 1) throw SolverError("qubo text: bad size line");
    QuboModel model;
    model.coefficients = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index i = 0, j = 0;
    std::string value;
    while (in >> i >> j >> value) {
        if (i < 0 || j < i || j >= n) throw SolverError("qubo text: index out of range");
        const auto parsed = parse_double(value);
        if (!parsed) throw SolverError("qubo text: bad coefficient '" + value + "'");
        model.coefficients(i, j) = *parsed;
    }
    if (!in.eof()) throw SolverError("qubo text: trailing garbage");
    return model;
}

} // namespace portopt
