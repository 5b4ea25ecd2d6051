#pragma once

#include <json.hpp>

#include "ruq/core/grid.hpp"
#include "ruq/data/dataset.hpp"

namespace ruq::data {

nlohmann::json to_json(const Grid& g);
Grid grid_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NormStats& s);
NormStats norm_stats_from_json(const nlohmann::json& j);

} // namespace ruq::data
