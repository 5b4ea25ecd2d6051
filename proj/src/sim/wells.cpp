#include "ruq/sim/wells.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>

#include "ruq/core/error.hpp"
#include "ruq/core/rng.hpp"

namespace ruq::sim {

void WellSet::validate(const Grid& grid) const
{
    std::set<std::pair<int, int>> seen;
    auto check_cell = [&](int i, int j, const char* kind) {
        if (!grid.contains(i, j))
            throw InvalidArgument(std::string(kind) + " at (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") is outside the grid");
        if (!seen.emplace(i, j).second)
            throw InvalidArgument("two wells share cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
    };
    for (const auto& w : injectors) {
        check_cell(w.i, w.j, "injector");
        if (!(w.rate >= 0.0) || !std::isfinite(w.rate)) throw InvalidArgument("injector rate must be >= 0");
    }
    for (const auto& w : producers) {
        check_cell(w.i, w.j, "producer");
        if (!(w.well_index >= 0.0) || !std::isfinite(w.well_index) || !std::isfinite(w.bhp))
            throw InvalidArgument("producer needs a finite bhp and well index >= 0");
    }
}

double peaceman_well_index(const Grid& grid, double well_radius)
{
    return 2.0 * std::numbers::pi * grid.depth / std::log(0.2 * grid.dx / well_radius);
}

double volume_rate(const Grid& grid, double rate_pv_per_1000d) { return rate_pv_per_1000d * grid.pore_volume() / 1000.0; }

WellSet random_wellset(const Grid& grid, std::uint64_t seed, const WellSetOptions& options)
{
    const int total = options.injectors + options.producers;
    if (options.injectors < 0 || options.producers < 0 || static_cast<std::size_t>(total) > grid.cells())
        throw InvalidArgument("random_wellset: invalid well counts");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, grid.cells() - 1);
    std::set<std::size_t> used;
    std::vector<std::size_t> cells;
    while (static_cast<int>(cells.size()) < total) {
        const std::size_t c = pick(rng);
        if (used.insert(c).second) cells.push_back(c);
    }
    WellSet ws;
    const double rate = options.injectors > 0 ? options.total_injection_pv / options.injectors : 0.0;
    const double wi = peaceman_well_index(grid);
    for (int w = 0; w < total; ++w) {
        const int i = static_cast<int>(cells[static_cast<std::size_t>(w)] % static_cast<std::size_t>(grid.nx));
        const int j = static_cast<int>(cells[static_cast<std::size_t>(w)] / static_cast<std::size_t>(grid.nx));
        if (w < options.injectors)
            ws.injectors.push_back({i, j, rate});
        else
            ws.producers.push_back({i, j, options.bhp, wi});
    }
    return ws;
}

} // namespace ruq::sim
