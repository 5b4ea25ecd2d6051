#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ruq/core/tensor.hpp"

namespace ruq::nn {

/// Named tensors plus a JSON header in one file: "RUQC", u32 header length, the
/// UTF-8 JSON header, then one tensor record (the dataset tensor format) per entry
/// in header order. The header gains an "entries" array of names.
struct Checkpoint {
    nlohmann::json header;
    std::vector<std::pair<std::string, Tensor<float>>> entries;

    const Tensor<float>& at(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws FormatError on malformed files.
Checkpoint read_checkpoint(const std::filesystem::path& path);

} // namespace ruq::nn
