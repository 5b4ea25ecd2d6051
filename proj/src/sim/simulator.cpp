#include "ruq/sim/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "ruq/core/error.hpp"
#include "ruq/sim/pressure.hpp"
#include "ruq/sim/transport.hpp"

namespace ruq::sim {

double MassBalance::relative_error() const noexcept
{
    const double err = std::abs(stored - injected + produced);
    return injected > 0.0 ? err / injected : err;
}

SimulationResult run_simulation(const geostat::PermField& perm, const WellSet& wells, const Grid& grid,
                                const Schedule& schedule)
{
    if (!(perm.field.grid() == grid)) throw InvalidArgument("run_simulation: permeability grid mismatch");
    wells.validate(grid);
    if (schedule.report_days.empty()) throw InvalidArgument("run_simulation: empty report schedule");
    if (!(schedule.pressure_step_days > 0.0)) throw InvalidArgument("run_simulation: pressure step must be > 0");
    for (std::size_t k = 0; k < schedule.report_days.size(); ++k) {
        if (!(schedule.report_days[k] > (k ? schedule.report_days[k - 1] : 0.0)))
            throw InvalidArgument("run_simulation: report days must be positive and strictly increasing");
    }

    const FaceField trans = transmissibilities(perm);
    const LinearSystem sys = assemble_pressure(trans, wells, perm.field, {true, schedule.initial_pressure});
    SolveOptions solve;
    solve.tolerance = schedule.solver_tolerance;
    solve.initial_guess = schedule.initial_pressure;

    SimulationResult result;
    ScalarField s = ScalarField::constant(grid, 0.0);
    ScalarField p = ScalarField::constant(grid, schedule.initial_pressure);
    MassBalance totals;
    double t = 0.0;

    for (double report : schedule.report_days) {
        while (t < report - 1e-9) {
            const double step_end = std::min(t + schedule.pressure_step_days, report);
            SolveStats stats;
            p = solve_pressure(sys, solve, &stats);
            ++result.pressure_solves;
            result.solver_iterations += stats.iterations;

            const FaceField flux = darcy_fluxes(p, trans);
            const WellRates rates = well_rates(wells, p, perm.field);
            const double span = step_end - t;
            const double dt_max = max_stable_dt(flux, rates, grid, schedule.cfl);
            const int substeps = std::isfinite(dt_max) ? std::max(1, static_cast<int>(std::ceil(span / dt_max))) : 1;
            const double dt = span / substeps;
            for (int k = 0; k < substeps; ++k) {
                TransportStep step = advance_saturation(s, flux, rates, dt, grid, schedule.cfl);
                s = std::move(step.saturation);
                totals.injected += step.injected;
                totals.produced += step.produced;
                totals.clamped += step.clamped;
                ++result.transport_steps;
            }
            t = step_end;
        }
        totals.time = report;
        totals.stored = s.sum() * grid.cell_pore_volume();
        result.balance.push_back(totals);
        result.snapshots.push_back(Snapshot{report, s, p});
    }
    return result;
}

} // namespace ruq::sim
