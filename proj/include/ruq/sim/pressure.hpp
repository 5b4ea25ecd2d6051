#pragma once

#include <optional>
#include <vector>

#include "ruq/core/field.hpp"
#include "ruq/geostat/gaussian_field.hpp"
#include "ruq/sim/wells.hpp"

namespace ruq::sim {

/// Dirichlet constraint p[cell] = value, applied by the solver.
struct Pin {
    std::size_t cell = 0;
    double value = 150.0;
};

/// Symmetric sparse system in compressed-row layout.
struct LinearSystem {
    Grid grid;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> cols;
    std::vector<double> values;
    std::vector<double> rhs;
    std::optional<Pin> pin;

    std::size_t rows() const noexcept { return rhs.size(); }
    /// A(r, c), zero when not stored.
    double at(std::size_t r, std::size_t c) const noexcept;
    void multiply(const double* x, double* y) const noexcept;
};

/// Face transmissibilities T = harmonic_mean(k_L, k_R) * area / distance; boundary faces 0.
/// Takes raw permeability (mD) so blocking faces (k = 0) can be represented.
FaceField transmissibilities(const ScalarField& perm_md);
FaceField transmissibilities(const geostat::PermField& perm);

struct AssembleOptions {
    bool auto_pin = true;         // pin cell (0,0) when no producer exists
    double pin_pressure = 150.0;  // bar
};

/// 5-point finite-volume pressure system. Injectors add their volume rate to the
/// right-hand side; producers add WI*k to the diagonal and WI*k*bhp to the rhs.
/// Throws InvalidArgument if there is injection, no producer and pinning is disabled.
LinearSystem assemble_pressure(const FaceField& trans, const WellSet& wells, const ScalarField& perm_md,
                               const AssembleOptions& options = {});

struct SolveOptions {
    double tolerance = 1e-8; // on ||b - A p|| / ||b||
    int max_iterations = 0;  // 0: 10 * n
    double initial_guess = 150.0;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. Throws NumericalError on non-convergence.
ScalarField solve_pressure(const LinearSystem& sys, const SolveOptions& options = {}, SolveStats* stats = nullptr);

/// Face flux T * (p_left - p_right); positive means flow toward +x / +y.
FaceField darcy_fluxes(const ScalarField& pressure, const FaceField& trans);

} // namespace ruq::sim
