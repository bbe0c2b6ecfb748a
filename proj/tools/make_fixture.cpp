// Regenerates the committed synthetic price history. The output is fully
// determined by the generator in src/fixture.cpp; rerunning must reproduce
// data/synthetic_prices.csv byte for byte.
#include <iostream>

#include "portopt/fixture.hpp"
#include "portopt/market_data.hpp"

int main(int argc, char** argv) {
    const std::filesystem::path out = argc > 1 ? argv[1] : "data/synthetic_prices.csv";
    try {
        portopt::write_prices_csv(portopt::bundled_fixture(), out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cout << "wrote " << out.string() << '\n';
    return 0;
}
