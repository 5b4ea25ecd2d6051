#pragma once

#include <cstddef>

namespace ruq {

/// Uniform 2-D cell-centered grid. Cell (i, j) lives at index i + j * nx.
struct Grid {
    int nx = 0;
    int ny = 0;
    double dx = 0.0;       // m
    double dy = 0.0;       // m
    double porosity = 0.0; // (0, 1]
    double depth = 0.0;    // layer thickness, m

    /// Validated constructor; throws InvalidArgument.
    static Grid make(int nx, int ny, double dx, double dy, double porosity, double depth);

    /// Square desk-scale grid spanning a fixed 1280 m x 1280 m domain,
    /// 10 m thick, porosity 0.2.
    static Grid square(int n);

    std::size_t cells() const noexcept { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    std::size_t index(int i, int j) const noexcept
    {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * static_cast<std::size_t>(nx);
    }
    bool contains(int i, int j) const noexcept { return i >= 0 && j >= 0 && i < nx && j < ny; }

    double cell_volume() const noexcept { return dx * dy * depth; }
    double cell_pore_volume() const noexcept { return porosity * cell_volume(); }
    double pore_volume() const noexcept { return cell_pore_volume() * static_cast<double>(cells()); }

    bool operator==(const Grid&) const = default;
};

/// Throws InvalidArgument unless nx and ny are both divisible by 2^levels.
void require_divisible(const Grid& grid, int levels);

} // namespace ruq
