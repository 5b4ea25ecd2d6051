#include "ruq/nn/param_set.hpp"

namespace ruq::nn {

template <class T>
Param<T>& ParamSet<T>::add(const std::string& name, Tensor<T> init)
{
    const std::string full = full_name(name);
    for (const auto& p : params_)
        if (p.name == full) throw InvalidArgument("ParamSet: duplicate parameter " + full);
    Param<T> p;
    p.name = full;
    p.grad = Tensor<T>::zeros(init.shape());
    p.m = Tensor<T>::zeros(init.shape());
    p.v = Tensor<T>::zeros(init.shape());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    return params_.back();
}

template <class T>
Buffer<T>& ParamSet<T>::add_buffer(const std::string& name, Tensor<T> init)
{
    const std::string full = full_name(name);
    for (const auto& b : buffers_)
        if (b.name == full) throw InvalidArgument("ParamSet: duplicate buffer " + full);
    buffers_.push_back({full, std::move(init)});
    return buffers_.back();
}

template <class T>
void ParamSet<T>::zero_grad()
{
    for (auto& p : params_) p.grad.fill(T(0));
}

template <class T>
std::size_t ParamSet<T>::count() const noexcept
{
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

template <class T>
double ParamSet<T>::squared_norm() const noexcept
{
    double s = 0.0;
    for (const auto& p : params_)
        for (T v : p.value.data()) s += static_cast<double>(v) * static_cast<double>(v);
    return s;
}

template class ParamSet<float>;
template class ParamSet<double>;

} // namespace ruq::nn
