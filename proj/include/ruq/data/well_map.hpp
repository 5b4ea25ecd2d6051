#pragma once

#include "ruq/core/field.hpp"
#include "ruq/sim/wells.hpp"

namespace ruq::data {

/// Signed-days image of a well set: +t/1000 on injector cells, -t/1000 on
/// producer cells, 0 elsewhere. Throws InvalidArgument unless 0 < t <= 1000.
ScalarField encode_well_map(const sim::WellSet& wells, double t_days, const Grid& grid);

} // namespace ruq::data
