#pragma once

#include <vector>

#include "ruq/core/field.hpp"
#include "ruq/sim/wells.hpp"

namespace ruq::sim {

/// Per-cell well volume rates (m^3/day). Injection carries S = 1; positive production
/// removes fluid at the cell saturation, negative production injects S = 0.
struct WellRates {
    std::vector<double> injection;
    std::vector<double> production;
};

WellRates well_rates(const WellSet& wells, const ScalarField& pressure, const ScalarField& perm_md);

/// Largest dt (days) with dt * max_cell(outflow / pore_volume) <= cfl.
double max_stable_dt(const FaceField& flux, const WellRates& rates, const Grid& grid, double cfl = 0.9);

struct TransportStep {
    ScalarField saturation;
    double injected = 0.0; // m^3 of S=1 fluid entering through wells
    double produced = 0.0; // m^3 of S=1 fluid leaving through wells
    double clamped = 0.0;  // m^3 removed by clamping to [0, 1] (negative if added)
};

/// First-order upwind explicit update of unit-mobility transport.
/// Throws InvalidArgument if dt violates the CFL bound.
TransportStep advance_saturation(const ScalarField& saturation, const FaceField& flux, const WellRates& rates,
                                 double dt, const Grid& grid, double cfl = 0.9);

} // namespace ruq::sim
