#pragma once

#include <span>
#include <vector>

#include "ruq/core/grid.hpp"

namespace ruq {

/// Cell-centered real field, row-major (i + j * nx). Immutable after construction.
class ScalarField {
public:
    ScalarField() = default;

    /// Throws InvalidArgument on size mismatch or non-finite values.
    ScalarField(const Grid& grid, std::vector<double> values);

    static ScalarField constant(const Grid& grid, double value);

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    double at(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
    std::size_t size() const noexcept { return values_.size(); }

    double min() const;
    double max() const;
    double sum() const;

    bool operator==(const ScalarField&) const = default;

private:
    Grid grid_{};
    std::vector<double> values_;
};

/// Face-centered values. x_faces holds (nx+1)*ny entries indexed i + j*(nx+1),
/// where face i separates cells i-1 and i; y_faces holds nx*(ny+1) entries
/// indexed i + j*nx, where face j separates cells j-1 and j.
/// Boundary faces are always zero (no-flow).
class FaceField {
public:
    FaceField() = default;

    /// Throws InvalidArgument on size mismatch, non-finite values or a nonzero boundary face.
    FaceField(const Grid& grid, std::vector<double> x_faces, std::vector<double> y_faces);

    static FaceField zeros(const Grid& grid);

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> x_faces() const noexcept { return x_; }
    std::span<const double> y_faces() const noexcept { return y_; }

    /// Face between cells (i-1, j) and (i, j); i in [0, nx].
    double x_face(int i, int j) const noexcept { return x_[static_cast<std::size_t>(i + j * (grid_.nx + 1))]; }
    /// Face between cells (i, j-1) and (i, j); j in [0, ny].
    double y_face(int i, int j) const noexcept { return y_[static_cast<std::size_t>(i + j * grid_.nx)]; }

    static std::size_t x_index(const Grid& g, int i, int j) { return static_cast<std::size_t>(i + j * (g.nx + 1)); }
    static std::size_t y_index(const Grid& g, int i, int j) { return static_cast<std::size_t>(i + j * g.nx); }

private:
    Grid grid_{};
    std::vector<double> x_;
    std::vector<double> y_;
};

/// Elementwise a*f + b*g. Throws InvalidArgument on grid mismatch.
ScalarField field_linear_combine(double a, const ScalarField& f, double b, const ScalarField& g);

/// Throws InvalidArgument if any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);
void require_finite(std::span<const float> values, const char* what);

} // namespace ruq
