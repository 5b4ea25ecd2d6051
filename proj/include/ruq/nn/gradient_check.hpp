#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ruq/core/tensor.hpp"
#include "ruq/nn/param_set.hpp"

namespace ruq::nn {

/// A tensor whose entries are perturbed, paired with the analytic gradient of the loss.
struct GradTarget {
    std::string name;
    Tensor<double>* value = nullptr;
    Tensor<double> analytic;
};

struct GradCheckOptions {
    double h = 1e-5;
    /// Entries checked per tensor; 0 checks all of them, otherwise a seeded random subset.
    std::size_t max_per_tensor = 0;
    std::uint64_t seed = 0;
    /// Richardson extrapolation levels over steps h, h/2, h/4, ... Level 1 is
    /// (4 D(h/2) - D(h)) / 3 and cancels the h^2 error term; each further level cancels
    /// the next even power.
    int richardson = 0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst; // "name[index]" of the worst entry
    std::size_t checked = 0;
};

/// Central differences of `loss` against the analytic gradients. The relative error of an
/// entry is |a - n| / max(|a|, |n|, floor), where floor is 1e-4 times the largest analytic
/// magnitude among checked entries. Entries whose true gradient is zero (a conv bias
/// feeding batch norm, say) otherwise compare 1e-15 against difference noise of
/// eps * |L| / h. Every value is restored afterwards.
GradCheckResult gradient_check(std::vector<GradTarget>& targets, const std::function<double()>& loss,
                               const GradCheckOptions& options = {});

/// Targets for every parameter of `ps`, with the analytic gradient copied from Param::grad.
void append_targets(ParamSet<double>& ps, std::vector<GradTarget>& targets);

} // namespace ruq::nn
