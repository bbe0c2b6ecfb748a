#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "portopt/market_data.hpp"

namespace portopt {

/// One synthetic asset: a geometric walk with i.i.d. per-period returns
/// mean + volatility * z, z approximately standard normal.
struct FixtureAsset {
    std::string ticker;
    double start_price = 100.0;
    double mean = 0.0;
    double volatility = 0.0;
};

/// Deterministic price history over consecutive calendar days starting at
/// `start`. Each asset draws from its own substream of `seed`, so the series
/// are independent and stable under reordering or adding assets.
PriceTable synthetic_prices(const std::vector<FixtureAsset>& assets, int periods,
                            std::uint64_t seed, Date start = {2015, 1, 1});

/// The committed demonstration universe: 2000 return periods over four
/// assets with well-separated risk/return profiles — a low-risk bond proxy,
/// a high-mean equity proxy, a middling mid-cap proxy, and a speculative
/// high-volatility loser. data/synthetic_prices.csv holds exactly this table.
PriceTable bundled_fixture();

} // namespace portopt
