#include "ruq/core/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ruq/core/error.hpp"

namespace ruq {

namespace {

template <class T>
void check_finite(std::span<const T> values, const char* what)
{
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k]))
            throw InvalidArgument(std::string(what) + ": non-finite value at index " + std::to_string(k));
    }
}

} // namespace

void require_finite(std::span<const double> values, const char* what) { check_finite(values, what); }
void require_finite(std::span<const float> values, const char* what) { check_finite(values, what); }

ScalarField::ScalarField(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values))
{
    if (values_.size() != grid_.cells())
        throw InvalidArgument("scalar field size " + std::to_string(values_.size()) + " does not match grid (" +
                              std::to_string(grid_.cells()) + " cells)");
    require_finite(values_, "scalar field");
}

ScalarField ScalarField::constant(const Grid& grid, double value)
{
    return ScalarField(grid, std::vector<double>(grid.cells(), value));
}

double ScalarField::min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }
double ScalarField::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

FaceField::FaceField(const Grid& grid, std::vector<double> x_faces, std::vector<double> y_faces)
    : grid_(grid), x_(std::move(x_faces)), y_(std::move(y_faces))
{
    const auto nx = static_cast<std::size_t>(grid.nx);
    const auto ny = static_cast<std::size_t>(grid.ny);
    if (x_.size() != (nx + 1) * ny || y_.size() != nx * (ny + 1))
        throw InvalidArgument("face field sizes do not match grid");
    require_finite(x_, "face field (x)");
    require_finite(y_, "face field (y)");
    for (int j = 0; j < grid.ny; ++j) {
        if (x_[x_index(grid, 0, j)] != 0.0 || x_[x_index(grid, grid.nx, j)] != 0.0)
            throw InvalidArgument("face field: nonzero boundary x-face");
    }
    for (int i = 0; i < grid.nx; ++i) {
        if (y_[y_index(grid, i, 0)] != 0.0 || y_[y_index(grid, i, grid.ny)] != 0.0)
            throw InvalidArgument("face field: nonzero boundary y-face");
    }
}

FaceField FaceField::zeros(const Grid& grid)
{
    const auto nx = static_cast<std::size_t>(grid.nx);
    const auto ny = static_cast<std::size_t>(grid.ny);
    return FaceField(grid, std::vector<double>((nx + 1) * ny, 0.0), std::vector<double>(nx * (ny + 1), 0.0));
}

ScalarField field_linear_combine(double a, const ScalarField& f, double b, const ScalarField& g)
{
    if (!(f.grid() == g.grid())) throw InvalidArgument("field_linear_combine: grid mismatch");
    std::vector<double> out(f.size());
    const auto fv = f.values();
    const auto gv = g.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a * fv[k] + b * gv[k];
    return ScalarField(f.grid(), std::move(out));
}

} // namespace ruq
