#include "ruq/nn/adam.hpp"

#include <cmath>

namespace ruq::nn {

template <class T>
void adam_step(ParamSet<T>& ps, const AdamOptions& o, long step)
{
    if (step < 1) throw InvalidArgument("adam_step: step count starts at 1");
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(step));
    for (auto& p : ps.params()) {
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double g = p.grad[k];
            const double m = o.beta1 * p.m[k] + (1.0 - o.beta1) * g;
            const double v = o.beta2 * p.v[k] + (1.0 - o.beta2) * g * g;
            p.m[k] = static_cast<T>(m);
            p.v[k] = static_cast<T>(v);
            const double w = p.value[k];
            const double update = (m / c1) / (std::sqrt(v / c2) + o.eps) + o.weight_decay * w;
            p.value[k] = static_cast<T>(w - o.lr * update);
        }
    }
}

template void adam_step(ParamSet<float>&, const AdamOptions&, long);
template void adam_step(ParamSet<double>&, const AdamOptions&, long);

} // namespace ruq::nn
