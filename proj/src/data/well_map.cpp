#include "ruq/data/well_map.hpp"

#include "ruq/core/error.hpp"

namespace ruq::data {

ScalarField encode_well_map(const sim::WellSet& wells, double t_days, const Grid& grid)
{
    if (!(t_days > 0.0 && t_days <= 1000.0))
        throw InvalidArgument("encode_well_map: time must be in (0, 1000] days, got " + std::to_string(t_days));
    wells.validate(grid);
    std::vector<double> v(grid.cells(), 0.0);
    const double value = t_days / 1000.0;
    for (const auto& w : wells.injectors) v[grid.index(w.i, w.j)] = value;
    for (const auto& w : wells.producers) v[grid.index(w.i, w.j)] = -value;
    return ScalarField(grid, std::move(v));
}

} // namespace ruq::data
