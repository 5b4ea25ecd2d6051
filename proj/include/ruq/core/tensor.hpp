#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ruq/core/error.hpp"

namespace ruq {

using Shape = std::vector<std::size_t>;

std::size_t shape_product(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor. 4-D tensors are (batch, channels, height, width).
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    /// Throws InvalidArgument when product(shape) != data.size() or data is not finite.
    Tensor(Shape shape, std::vector<T> data);

    static Tensor zeros(Shape shape)
    {
        Tensor t;
        t.data_.assign(shape_product(shape), T(0));
        t.shape_ = std::move(shape);
        return t;
    }

    static Tensor filled(Shape shape, T value)
    {
        Tensor t = zeros(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    // 4-D accessors.
    std::size_t n() const { return shape_.at(0); }
    std::size_t c() const { return shape_.at(1); }
    std::size_t h() const { return shape_.at(2); }
    std::size_t w() const { return shape_.at(3); }

    std::span<const T> data() const noexcept { return data_; }
    std::span<T> data() noexcept { return data_; }
    T* ptr() noexcept { return data_.data(); }
    const T* ptr() const noexcept { return data_.data(); }
    T operator[](std::size_t k) const noexcept { return data_[k]; }
    T& operator[](std::size_t k) noexcept { return data_[k]; }

    T& at4(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) noexcept
    {
        return data_[((b * shape_[1] + ch) * shape_[2] + y) * shape_[3] + x];
    }
    T at4(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const noexcept
    {
        return data_[((b * shape_[1] + ch) * shape_[2] + y) * shape_[3] + x];
    }

    /// Same data, new shape of equal product.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const noexcept;
    void require_finite(const char* what) const;

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }
    void add_(const Tensor& other);
    void scale_(T factor);

    template <class U>
    Tensor<U> cast() const
    {
        Tensor<U> out = Tensor<U>::zeros(shape_);
        for (std::size_t k = 0; k < data_.size(); ++k) out[k] = static_cast<U>(data_[k]);
        return out;
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

/// Concatenate 4-D tensors along the channel axis, preserving per-input order.
/// Throws InvalidArgument on batch/spatial mismatch or empty input.
template <class T>
Tensor<T> tensor_concat_channels(std::span<const Tensor<T>> ts);

template <class T>
Tensor<T> tensor_concat_channels(std::initializer_list<Tensor<T>> ts)
{
    std::vector<Tensor<T>> v(ts);
    return tensor_concat_channels<T>(std::span<const Tensor<T>>(v));
}

/// Channels [begin, begin + count) of a 4-D tensor.
template <class T>
Tensor<T> tensor_slice_channels(const Tensor<T>& t, std::size_t begin, std::size_t count);

/// Rows [begin, begin + count) of the batch axis of a 4-D tensor.
template <class T>
Tensor<T> tensor_slice_batch(const Tensor<T>& t, std::size_t begin, std::size_t count);

/// Stack equal-shape 4-D tensors along the batch axis.
template <class T>
Tensor<T> tensor_stack_batch(std::span<const Tensor<T>> ts);

} // namespace ruq
