#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "portopt/dates.hpp"

namespace portopt {

/// Price history of a single asset. Dates strictly increasing, prices
/// strictly positive, at least two observations.
struct PriceSeries {
    std::string ticker;
    std::vector<Date> dates;
    std::vector<double> prices;

    /// Throws DataError if an invariant is broken.
    void validate() const;
};

/// Date-aligned price matrix: one row per date on which every asset has an
/// observation, one column per ticker.
struct PriceTable {
    std::vector<std::string> tickers;
    std::vector<Date> dates;
    Eigen::MatrixXd prices; // T x N

    void validate() const;

    /// Rows with start <= date <= end. Throws DataError if fewer than two
    /// rows remain.
    PriceTable clipped(const Date& start, const Date& end) const;
};

/// Simple per-period returns. Each return is stamped with the later date of
/// its price pair, so there are T-1 rows for a T-row PriceTable.
struct ReturnsTable {
    std::vector<std::string> tickers;
    std::vector<Date> dates;
    Eigen::MatrixXd returns; // (T-1) x N
};

/// Inner-join alignment: keeps exactly the dates present in every series.
PriceTable align_inner(const std::vector<PriceSeries>& series);

/// Loads and aligns prices for the requested tickers from a CSV file with
/// header `date,<ticker1>,<ticker2>,...`. Empty cells mean no observation.
/// When cache_dir is set, the parsed table is cached keyed by the file's
/// content hash and the requested ticker list; cached and fresh loads are
/// bit-identical.
PriceTable load_prices(const std::filesystem::path& path,
                       const std::vector<std::string>& tickers,
                       const std::optional<std::filesystem::path>& cache_dir = {});

/// Writes a PriceTable back out under the same CSV schema load_prices reads.
void write_prices_csv(const PriceTable& table, const std::filesystem::path& path);

ReturnsTable simple_returns(const PriceTable& prices);

/// Compounded growth: entry (t, i) = prod_{s<=t}(1 + r_{s,i}) - 1.
ReturnsTable cumulative_returns(const ReturnsTable& returns);

/// Pearson correlation of the return columns. Unit diagonal exactly;
/// throws DataError naming the ticker if a column has zero variance.
Eigen::MatrixXd correlation_matrix(const ReturnsTable& returns);

} // namespace portopt
