#include "portopt/fixture.hpp"

#include "portopt/errors.hpp"
#include "portopt/rng.hpp"

namespace portopt {

PriceTable synthetic_prices(const std::vector<FixtureAsset>& assets, int periods,
                            std::uint64_t seed, Date start) {
    if (assets.empty() || periods < 1) {
        throw DataError("fixture: need at least one asset and one period");
    }
    PriceTable table;
    table.dates.reserve(std::size_t(periods) + 1);
    Date day = start;
    for (int t = 0; t <= periods; ++t) {
        table.dates.push_back(day);
        day = day.next();
    }
    table.prices.resize(periods + 1, Eigen::Index(assets.size()));
    for (std::size_t a = 0; a < assets.size(); ++a) {
        const FixtureAsset& asset = assets[a];
        table.tickers.push_back(asset.ticker);
        Rng rng(derive_seed(seed, {std::uint64_t(a)}));
        double price = asset.start_price;
        table.prices(0, Eigen::Index(a)) = price;
        for (int t = 1; t <= periods; ++t) {
            price *= 1.0 + asset.mean + asset.volatility * rng.normal();
            table.prices(t, Eigen::Index(a)) = price;
        }
    }
    table.validate();
    return table;
}

PriceTable bundled_fixture() {
    const std::vector<FixtureAsset> assets = {
        {"BND", 100.0, 1.5e-4, 8.0e-4},
        {"EQT", 150.0, 2.2e-3, 4.5e-3},
        {"MID", 80.0, 7.0e-4, 5.0e-3},
        {"SPC", 30.0, -3.0e-4, 2.0e-2},
    };
    return synthetic_prices(assets, 2000, 20150102u, {2015, 1, 1});
}

} // namespace portopt
