#include "portopt/market_data.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "portopt/errors.hpp"
#include "portopt/text.hpp"

namespace portopt {
namespace {

constexpr std::string_view kCacheVersion = "portopt-pricetable-v1";

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xCBF29CE484222325ULL) {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

std::string read_data_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line_no,
                            const std::string& what) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::filesystem::path cache_file(const std::filesystem::path& dir, std::uint64_t key) {
    char name[32];
    std::snprintf(name, sizeof(name), "prices-%016llx.tbl",
                  static_cast<unsigned long long>(key));
    return dir / name;
}

std::optional<PriceTable> read_cache(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line) || line != kCacheVersion) return std::nullopt;

    PriceTable table;
    std::size_t n = 0, t = 0;
    if (!(in >> n >> t)) return std::nullopt;
    in.ignore();
    table.tickers.resize(n);
    for (auto& ticker : table.tickers) {
        if (!std::getline(in, ticker)) return std::nullopt;
    }
    table.dates.resize(t);
    table.prices.resize(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < t; ++r) {
        if (!std::getline(in, line)) return std::nullopt;
        const auto cells = split_csv_line(line);
        if (cells.size() != n + 1) return std::nullopt;
        const auto date = Date::parse(cells[0]);
        if (!date) return std::nullopt;
        table.dates[r] = *date;
        for (std::size_t c = 0; c < n; ++c) {
            const auto value = parse_double(cells[c + 1]);
            if (!value) return std::nullopt;
            table.prices(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *value;
        }
    }
    return table;
}

void write_cache(const std::filesystem::path& file, const PriceTable& table) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    // Unique temp name plus rename keeps concurrent readers safe: they only
    // ever see complete files.
    static std::atomic<unsigned> counter{0};
    const auto tmp = file.string() + ".tmp." +
                     std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
                     "." + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) return; // cache is best-effort
        out << kCacheVersion << '\n'
            << table.tickers.size() << ' ' << table.dates.size() << '\n';
        for (const auto& ticker : table.tickers) out << ticker << '\n';
        for (Eigen::Index r = 0; r < table.prices.rows(); ++r) {
            out << table.dates[static_cast<std::size_t>(r)].to_string();
            for (Eigen::Index c = 0; c < table.prices.cols(); ++c) {
                out << ',' << fmt_double(table.prices(r, c));
            }
            out << '\n';
        }
    }
    std::filesystem::rename(tmp, file, ec);
    if (ec) std::filesystem::remove(tmp, ec);
}

} // namespace

void PriceSeries::validate() const {
    if (dates.size() != prices.size()) {
        throw DataError("price series '" + ticker + "': date/price length mismatch");
    }
    if (dates.size() < 2) {
        throw DataError("price series '" + ticker + "': fewer than 2 observations");
    }
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (i > 0 && !(dates[i - 1] < dates[i])) {
            throw DataError("price series '" + ticker + "': dates not strictly increasing");
        }
        if (!(prices[i] > 0.0)) {
            throw DataError("price series '" + ticker + "': non-positive price on " +
                            dates[i].to_string());
        }
    }
}

void PriceTable::validate() const {
    const auto t = static_cast<Eigen::Index>(dates.size());
    const auto n = static_cast<Eigen::Index>(tickers.size());
    if (prices.rows() != t || prices.cols() != n) {
        throw DataError("price table: matrix shape does not match dates/tickers");
    }
    if (t < 2 || n < 1) throw DataError("price table: needs T >= 2 and N >= 1");
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) {
            throw DataError("price table: dates not strictly increasing");
        }
    }
    if (!(prices.array() > 0.0).all()) {
        throw DataError("price table: non-positive price");
    }
}

PriceTable PriceTable::clipped(const Date& start, const Date& end) const {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (!(dates[i] < start) && !(end < dates[i])) keep.push_back(i);
    }
    if (keep.size() < 2) {
        throw DataError("price table: fewer than 2 dates between " + start.to_string() +
                        " and " + end.to_string());
    }
    PriceTable out;
    out.tickers = tickers;
    out.dates.reserve(keep.size());
    out.prices.resize(static_cast<Eigen::Index>(keep.size()), prices.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        out.dates.push_back(dates[keep[r]]);
        out.prices.row(static_cast<Eigen::Index>(r)) =
            prices.row(static_cast<Eigen::Index>(keep[r]));
    }
    return out;
}

PriceTable align_inner(const std::vector<PriceSeries>& series) {
    if (series.empty()) throw DataError("alignment: no series given");

    // Intersection of all date vectors; each series is strictly increasing.
    std::vector<Date> shared(series.front().dates);
    for (std::size_t s = 1; s < series.size(); ++s) {
        std::vector<Date> next;
        std::set_intersection(shared.begin(), shared.end(), series[s].dates.begin(),
                              series[s].dates.end(), std::back_inserter(next));
        shared = std::move(next);
    }
    if (shared.size() < 2) throw DataError("alignment: fewer than 2 aligned dates");

    PriceTable table;
    table.dates = shared;
    table.prices.resize(static_cast<Eigen::Index>(shared.size()),
                        static_cast<Eigen::Index>(series.size()));
    for (std::size_t s = 0; s < series.size(); ++s) {
        table.tickers.push_back(series[s].ticker);
        std::size_t cursor = 0;
        for (std::size_t r = 0; r < shared.size(); ++r) {
            while (series[s].dates[cursor] < shared[r]) ++cursor;
            table.prices(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) =
                series[s].prices[cursor];
        }
    }
    table.validate();
    return table;
}

PriceTable load_prices(const std::filesystem::path& path,
                       const std::vector<std::string>& tickers,
                       const std::optional<std::filesystem::path>& cache_dir) {
    if (tickers.empty()) throw DataError("no tickers requested");
    if (!std::filesystem::exists(path)) {
        throw DataError("missing file: " + path.string());
    }
    const std::string content = read_data_file(path);

    std::optional<std::filesystem::path> entry;
    if (cache_dir) {
        std::uint64_t key = fnv1a(content);
        key = fnv1a(kCacheVersion, key);
        for (const auto& ticker : tickers) {
            key = fnv1a(ticker, key);
            key = fnv1a(",", key);
        }
        entry = cache_file(*cache_dir, key);
        if (auto cached = read_cache(*entry)) return *std::move(cached);
    }

    // Header row: date,<ticker1>,<ticker2>,...
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) malformed(path, 1, "empty file");
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "date") {
        malformed(path, line_no, "header must start with 'date'");
    }
    std::unordered_map<std::string, std::size_t> column_of;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (!column_of.emplace(header[c], c).second) {
            malformed(path, line_no, "duplicate ticker column '" + header[c] + "'");
        }
    }
    std::vector<std::size_t> wanted;
    for (const auto& ticker : tickers) {
        const auto it = column_of.find(ticker);
        if (it == column_of.end()) {
            throw DataError(path.string() + ": unknown ticker '" + ticker + "'");
        }
        wanted.push_back(it->second);
    }

    std::vector<PriceSeries> series(tickers.size());
    for (std::size_t s = 0; s < tickers.size(); ++s) series[s].ticker = tickers[s];

    std::optional<Date> previous;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            malformed(path, line_no, "expected " + std::to_string(header.size()) +
                                         " cells, got " + std::to_string(cells.size()));
        }
        const auto date = Date::parse(cells[0]);
        if (!date) malformed(path, line_no, "bad date '" + cells[0] + "'");
        if (previous && !(*previous < *date)) {
            malformed(path, line_no, "dates not strictly increasing");
        }
        previous = *date;
        for (std::size_t s = 0; s < wanted.size(); ++s) {
            const std::string& cell = cells[wanted[s]];
            if (cell.empty()) continue; // no observation for this ticker that day
            const auto value = parse_double(cell);
            if (!value || !std::isfinite(*value)) {
                malformed(path, line_no, "bad price '" + cell + "'");
            }
            if (!(*value > 0.0)) {
                malformed(path, line_no, "non-positive price for '" + tickers[s] + "'");
            }
            series[s].dates.push_back(*date);
            series[s].prices.push_back(*value);
        }
    }
    for (const auto& s : series) {
        if (s.dates.empty()) {
            throw DataError(path.string() + ": ticker '" + s.ticker + "' has no observations");
        }
    }

    PriceTable table = align_inner(series);
    if (entry) write_cache(*entry, table);
    return table;
}

void write_prices_csv(const PriceTable& table, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "date";
    for (const auto& ticker : table.tickers) out << ',' << ticker;
    out << '\n';
    for (Eigen::Index r = 0; r < table.prices.rows(); ++r) {
        out << table.dates[static_cast<std::size_t>(r)].to_string();
        for (Eigen::Index c = 0; c < table.prices.cols(); ++c) {
            out << ',' << fmt_double(table.prices(r, c));
        }
        out << '\n';
    }
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

ReturnsTable simple_returns(const PriceTable& prices) {
    prices.validate();
    ReturnsTable out;
    out.tickers = prices.tickers;
    out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
    const Eigen::Index t = prices.prices.rows();
    out.returns = (prices.prices.bottomRows(t - 1).array() /
                       prices.prices.topRows(t - 1).array() -
                   1.0)
                      .matrix();
    return out;
}

ReturnsTable cumulative_returns(const ReturnsTable& returns) {
    ReturnsTable out;
    out.tickers = returns.tickers;
    out.dates = returns.dates;
    out.returns.resizeLike(returns.returns);
    for (Eigen::Index c = 0; c < returns.returns.cols(); ++c) {
        double growth = 1.0;
        for (Eigen::Index r = 0; r < returns.returns.rows(); ++r) {
            growth *= 1.0 + returns.returns(r, c);
            out.returns(r, c) = growth - 1.0;
        }
    }
    return out;
}

Eigen::MatrixXd correlation_matrix(const ReturnsTable& returns) {
    const Eigen::Index k = returns.returns.rows();
    const Eigen::Index n = returns.returns.cols();
    if (k < 2) throw DataError("correlation needs at least 2 return periods");

    const Eigen::RowVectorXd mean = returns.returns.colwise().mean();
    const Eigen::MatrixXd centered = returns.returns.rowwise() - mean;
    const Eigen::VectorXd var =
        centered.array().square().colwise().sum().transpose() / double(k - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(var(i) > 0.0)) {
            throw DataError("degenerate asset '" + returns.tickers[static_cast<std::size_t>(i)] +
                            "': zero return variance");
        }
    }

    Eigen::MatrixXd corr(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        corr(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double cov = centered.col(i).dot(centered.col(j)) / double(k - 1);
            const double r = std::clamp(cov / std::sqrt(var(i) * var(j)), -1.0, 1.0);
            corr(i, j) = r;
            corr(j, i) = r;
        }
    }
    return corr;
}

} // namespace portopt
