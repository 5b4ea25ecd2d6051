#pragma once

#include <vector>

#include "ruq/core/field.hpp"
#include "ruq/geostat/gaussian_field.hpp"
#include "ruq/sim/wells.hpp"

namespace ruq::sim {

struct Schedule {
    std::vector<double> report_days{250.0, 500.0, 750.0, 1000.0};
    double pressure_step_days = 25.0;
    double initial_pressure = 150.0;
    double cfl = 0.9;
    double solver_tolerance = 1e-10;
};

struct Snapshot {
    double time = 0.0; // days
    ScalarField saturation;
    ScalarField pressure; // bar
};

/// Cumulative volume bookkeeping at a report time (m^3).
struct MassBalance {
    double time = 0.0;
    double stored = 0.0;
    double injected = 0.0;
    double produced = 0.0;
    double clamped = 0.0;

    /// |stored - injected + produced| / injected (absolute when nothing was injected).
    double relative_error() const noexcept;
};

struct SimulationResult {
    std::vector<Snapshot> snapshots;
    std::vector<MassBalance> balance;
    int pressure_solves = 0;
    int transport_steps = 0;
    int solver_iterations = 0;
};

/// IMPES loop from S = 0, P = initial pressure: solve pressure every pressure step,
/// then advance saturation with CFL sub-steps; snapshots at each report day.
SimulationResult run_simulation(const geostat::PermField& perm, const WellSet& wells, const Grid& grid,
                                const Schedule& schedule = {});

} // namespace ruq::sim
