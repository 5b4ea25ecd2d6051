#pragma once

#include <filesystem>
#include <iosfwd>

#include "ruq/core/field.hpp"
#include "ruq/core/tensor.hpp"

namespace ruq::data {

// File layout: "RUQ1", u32 rank, rank x u32 dims, row-major f32 payload; all little-endian.

/// Largest accepted rank; anything above is treated as a corrupt header.
inline constexpr std::uint32_t max_tensor_rank = 8;

void write_tensor(std::ostream& out, const Tensor<float>& t);
void write_tensor(const std::filesystem::path& path, const Tensor<float>& t);

/// Throws FormatError (bad_magic, truncated, dim_overflow, degenerate_shape, io).
Tensor<float> read_tensor(std::istream& in);
Tensor<float> read_tensor(const std::filesystem::path& path);

/// (ny, nx) float tensor of a field; values are rounded to f32.
Tensor<float> field_to_tensor(const ScalarField& f);

/// Inverse of field_to_tensor. Throws InvalidArgument on shape mismatch.
ScalarField tensor_to_field(const Tensor<float>& t, const Grid& grid);

/// Field with every value rounded to the nearest f32, so it survives a file roundtrip bitwise.
ScalarField round_to_float(const ScalarField& f);

} // namespace ruq::data
