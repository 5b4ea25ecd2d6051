#include "ruq/sim/transport.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "ruq/core/error.hpp"

namespace ruq::sim {

WellRates well_rates(const WellSet& wells, const ScalarField& pressure, const ScalarField& perm)
{
    const Grid& g = pressure.grid();
    if (!(perm.grid() == g)) throw InvalidArgument("well_rates: grid mismatch");
    WellRates rates{std::vector<double>(g.cells(), 0.0), std::vector<double>(g.cells(), 0.0)};
    for (const auto& w : wells.injectors) rates.injection[g.index(w.i, w.j)] += volume_rate(g, w.rate);
    for (const auto& w : wells.producers) {
        const std::size_t c = g.index(w.i, w.j);
        rates.production[c] += w.well_index * perm[c] * (pressure[c] - w.bhp);
    }
    return rates;
}

namespace {

/// Total volume rate leaving each cell through faces and wells.
std::vector<double> cell_outflow(const FaceField& flux, const WellRates& rates, const Grid& g)
{
    std::vector<double> out(g.cells(), 0.0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t c = g.index(i, j);
            double o = std::max(-flux.x_face(i, j), 0.0) + std::max(flux.x_face(i + 1, j), 0.0) +
                       std::max(-flux.y_face(i, j), 0.0) + std::max(flux.y_face(i, j + 1), 0.0);
            o += std::max(rates.production[c], 0.0);
            out[c] = o;
        }
    }
    return out;
}

} // namespace

double max_stable_dt(const FaceField& flux, const WellRates& rates, const Grid& grid, double cfl)
{
    const auto out = cell_outflow(flux, rates, grid);
    const double worst = *std::max_element(out.begin(), out.end());
    if (worst <= 0.0) return std::numeric_limits<double>::infinity();
    return cfl * grid.cell_pore_volume() / worst;
}

TransportStep advance_saturation(const ScalarField& saturation, const FaceField& flux, const WellRates& rates,
                                 double dt, const Grid& g, double cfl)
{
    if (!(saturation.grid() == g) || !(flux.grid() == g)) throw InvalidArgument("advance_saturation: grid mismatch");
    if (rates.injection.size() != g.cells() || rates.production.size() != g.cells())
        throw InvalidArgument("advance_saturation: well rates do not match grid");
    if (!(dt >= 0.0)) throw InvalidArgument("advance_saturation: dt must be >= 0");

    const double pv = g.cell_pore_volume();
    const auto out = cell_outflow(flux, rates, g);
    const double worst = *std::max_element(out.begin(), out.end());
    if (dt * worst / pv > cfl * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "CFL violated: dt " << dt << " exceeds stable step " << cfl * pv / worst;
        throw InvalidArgument(os.str());
    }

    const auto s = saturation.values();
    std::vector<double> next(g.cells());
    TransportStep step;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t c = g.index(i, j);
            // Net upwinded inflow of S through the four faces.
            double net = 0.0;
            auto face = [&](double f_in, std::size_t other) {
                // f_in > 0: flow from `other` into c.
                net += f_in > 0.0 ? f_in * s[other] : f_in * s[c];
            };
            if (i > 0) face(flux.x_face(i, j), g.index(i - 1, j));
            if (i + 1 < g.nx) face(-flux.x_face(i + 1, j), g.index(i + 1, j));
            if (j > 0) face(flux.y_face(i, j), g.index(i, j - 1));
            if (j + 1 < g.ny) face(-flux.y_face(i, j + 1), g.index(i, j + 1));

            const double inj = rates.injection[c];
            const double prod = rates.production[c];
            const double produced = prod > 0.0 ? prod * s[c] : 0.0; // prod < 0 injects S = 0
            net += inj - produced;
            step.injected += inj * dt;
            step.produced += produced * dt;

            const double raw = s[c] + dt * net / pv;
            const double clipped = std::clamp(raw, 0.0, 1.0);
            step.clamped += (raw - clipped) * pv;
            next[c] = clipped;
        }
    }
    step.saturation = ScalarField(g, std::move(next));
    return step;
}

} // namespace ruq::sim
