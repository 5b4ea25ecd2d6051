#include "ruq/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ruq/core/rng.hpp"

namespace ruq::nn {

GradCheckResult gradient_check(std::vector<GradTarget>& targets, const std::function<double()>& loss,
                               const GradCheckOptions& o)
{
    struct Entry {
        std::size_t target;
        std::size_t index;
        double numeric;
    };
    std::vector<Entry> entries;
    Rng rng(o.seed);
    for (std::size_t t = 0; t < targets.size(); ++t) {
        auto& tg = targets[t];
        if (tg.value == nullptr || tg.analytic.shape() != tg.value->shape())
            throw InvalidArgument("gradient_check: target " + tg.name + " has mismatched analytic gradient");
        std::vector<std::size_t> idx(tg.value->size());
        std::iota(idx.begin(), idx.end(), 0);
        if (o.max_per_tensor > 0 && idx.size() > o.max_per_tensor) {
            for (std::size_t k = 0; k < o.max_per_tensor; ++k) {
                std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
                std::swap(idx[k], idx[pick(rng)]);
            }
            idx.resize(o.max_per_tensor);
        }
        for (std::size_t i : idx) {
            double& v = (*tg.value)[i];
            const double saved = v;
            auto central = [&](double h) {
                v = saved + h;
                const double up = loss();
                v = saved - h;
                const double down = loss();
                v = saved;
                return (up - down) / (2.0 * h);
            };
            // Richardson table over steps h, h/2, h/4, ...; each level cancels the next even power of h.
            std::vector<double> row{central(o.h)};
            double step = o.h;
            for (int level = 1; level <= o.richardson; ++level) {
                step *= 0.5;
                std::vector<double> next{central(step)};
                double f = 4.0;
                for (std::size_t q = 0; q < row.size(); ++q, f *= 4.0)
                    next.push_back((f * next[q] - row[q]) / (f - 1.0));
                row = std::move(next);
            }
            entries.push_back({t, i, row.back()});
        }
    }

    double scale = 0.0;
    for (const auto& e : entries) scale = std::max(scale, std::abs(targets[e.target].analytic[e.index]));
    const double floor = std::max(1e-4 * scale, 1e-300);

    GradCheckResult r;
    r.checked = entries.size();
    for (const auto& e : entries) {
        const double a = targets[e.target].analytic[e.index];
        const double rel = std::abs(a - e.numeric) / std::max({std::abs(a), std::abs(e.numeric), floor});
        if (rel >= r.max_rel_error) {
            r.max_rel_error = rel;
            r.worst = targets[e.target].name + "[" + std::to_string(e.index) + "]";
        }
    }
    return r;
}

void append_targets(ParamSet<double>& ps, std::vector<GradTarget>& targets)
{
    for (auto& p : ps.params()) targets.push_back({p.name, &p.value, p.grad});
}

} // namespace ruq::nn
