#pragma once

#include "ruq/nn/param_set.hpp"

namespace ruq::nn {

struct AdamOptions {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Decoupled decay: w <- w - lr * weight_decay * w. Use 2 * lambda for a lambda * ||w||^2 penalty.
    double weight_decay = 0.0;
};

/// One bias-corrected Adam update of every parameter in `ps` from its gradient.
/// `step` is the 1-based update count shared by all parameter sets of a model.
template <class T>
void adam_step(ParamSet<T>& ps, const AdamOptions& options, long step);

} // namespace ruq::nn
