#include "ruq/core/grid.hpp"

#include <cmath>
#include <string>

#include "ruq/core/error.hpp"

namespace ruq {

Grid Grid::make(int nx, int ny, double dx, double dy, double porosity, double depth)
{
    if (nx < 2 || ny < 2) throw InvalidArgument("grid needs nx >= 2 and ny >= 2");
    if (!(dx > 0.0) || !(dy > 0.0) || !(depth > 0.0) || !std::isfinite(dx) || !std::isfinite(dy) ||
        !std::isfinite(depth))
        throw InvalidArgument("grid cell sizes and depth must be positive");
    if (!(porosity > 0.0) || porosity > 1.0) throw InvalidArgument("grid porosity must lie in (0, 1]");
    return Grid{nx, ny, dx, dy, porosity, depth};
}

Grid Grid::square(int n)
{
    constexpr double domain = 1280.0;
    return make(n, n, domain / n, domain / n, 0.2, 10.0);
}

void require_divisible(const Grid& grid, int levels)
{
    const int m = 1 << levels;
    if (grid.nx % m != 0 || grid.ny % m != 0)
        throw InvalidArgument("grid " + std::to_string(grid.nx) + "x" + std::to_string(grid.ny) +
                              " is not divisible by " + std::to_string(m));
}

} // namespace ruq
