#pragma once

#include <cstddef>
#include <deque>
#include <string>

#include "ruq/core/tensor.hpp"

namespace ruq::nn {

/// Trainable tensor with its gradient and Adam moments (all the same shape).
template <class T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;
    Tensor<T> v;
};

/// Non-trainable state such as batch-norm running statistics.
template <class T>
struct Buffer {
    std::string name;
    Tensor<T> value;
};

/// Ordered collection of named parameters and buffers. Elements never move once
/// added, so layers may keep pointers into the set.
template <class T>
class ParamSet {
public:
    explicit ParamSet(std::string prefix = {}) : prefix_(std::move(prefix)) {}
    ParamSet(const ParamSet&) = delete;
    ParamSet& operator=(const ParamSet&) = delete;
    ParamSet(ParamSet&&) = default;
    ParamSet& operator=(ParamSet&&) = default;

    /// Registers `prefix.name`; throws InvalidArgument on a duplicate name.
    Param<T>& add(const std::string& name, Tensor<T> init);
    Buffer<T>& add_buffer(const std::string& name, Tensor<T> init);

    std::deque<Param<T>>& params() noexcept { return params_; }
    const std::deque<Param<T>>& params() const noexcept { return params_; }
    std::deque<Buffer<T>>& buffers() noexcept { return buffers_; }
    const std::deque<Buffer<T>>& buffers() const noexcept { return buffers_; }
    const std::string& prefix() const noexcept { return prefix_; }

    void zero_grad();

    /// Number of trainable scalars.
    std::size_t count() const noexcept;

    /// Sum of squares of all trainable values.
    double squared_norm() const noexcept;

    /// Copies values, moments and buffers from a set with identical names and shapes.
    template <class U>
    void copy_from(const ParamSet<U>& other);

private:
    std::string full_name(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

    std::string prefix_;
    std::deque<Param<T>> params_;
    std::deque<Buffer<T>> buffers_;
};

template <class T>
template <class U>
void ParamSet<T>::copy_from(const ParamSet<U>& other)
{
    if (other.params().size() != params_.size() || other.buffers().size() != buffers_.size())
        throw InvalidArgument("ParamSet::copy_from: layout mismatch");
    for (std::size_t k = 0; k < params_.size(); ++k) {
        const auto& src = other.params()[k];
        auto& dst = params_[k];
        if (src.name != dst.name || src.value.shape() != dst.value.shape())
            throw InvalidArgument("ParamSet::copy_from: parameter mismatch at " + dst.name);
        dst.value = src.value.template cast<T>();
        dst.m = src.m.template cast<T>();
        dst.v = src.v.template cast<T>();
    }
    for (std::size_t k = 0; k < buffers_.size(); ++k) {
        const auto& src = other.buffers()[k];
        if (src.name != buffers_[k].name || src.value.shape() != buffers_[k].value.shape())
            throw InvalidArgument("ParamSet::copy_from: buffer mismatch at " + buffers_[k].name);
        buffers_[k].value = src.value.template cast<T>();
    }
}

} // namespace ruq::nn
