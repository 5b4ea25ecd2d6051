#pragma once

#include <cstdint>
#include <vector>

#include "ruq/core/grid.hpp"

namespace ruq::sim {

/// Rate-controlled injector; rate in pore volumes per 1000 days.
struct Injector {
    int i = 0;
    int j = 0;
    double rate = 0.0;
};

/// Bottom-hole-pressure producer; the cell coupling is well_index * k_cell.
struct Producer {
    int i = 0;
    int j = 0;
    double bhp = 150.0; // bar
    double well_index = 0.0;
};

struct WellSet {
    std::vector<Injector> injectors;
    std::vector<Producer> producers;

    /// Throws InvalidArgument on out-of-grid or duplicate cells, negative rates or well indices.
    void validate(const Grid& grid) const;

    bool empty() const noexcept { return injectors.empty() && producers.empty(); }
};

/// Peaceman index 2*pi*depth / ln(0.2 * dx / r_w) (multiplied by the cell permeability when assembled).
double peaceman_well_index(const Grid& grid, double well_radius = 0.1);

/// Pore-volume rate (PV per 1000 days) to reservoir volume rate (m^3/day).
double volume_rate(const Grid& grid, double rate_pv_per_1000d);

struct WellSetOptions {
    int injectors = 10;
    int producers = 6;
    double total_injection_pv = 0.4; // over 1000 days, split evenly across injectors
    double bhp = 150.0;
};

/// Random distinct well locations drawn from `seed`.
WellSet random_wellset(const Grid& grid, std::uint64_t seed, const WellSetOptions& options = {});

} // namespace ruq::sim
