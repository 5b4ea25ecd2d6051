#include "ruq/core/tensor.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace ruq {

std::size_t shape_product(const Shape& shape)
{
    std::size_t p = 1;
    for (auto d : shape) {
        if (d != 0 && p > std::numeric_limits<std::size_t>::max() / d) throw InvalidArgument("tensor shape overflows");
        p *= d;
    }
    return p;
}

std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "," : "") << shape[k];
    os << ')';
    return os.str();
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_product(shape_) != data_.size())
        throw InvalidArgument("tensor shape " + shape_string(shape_) + " does not match " +
                              std::to_string(data_.size()) + " values");
    require_finite("tensor");
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const
{
    if (shape_product(shape) != data_.size())
        throw InvalidArgument("reshape " + shape_string(shape_) + " -> " + shape_string(shape));
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

template <class T>
bool Tensor<T>::all_finite() const noexcept
{
    for (T v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

template <class T>
void Tensor<T>::require_finite(const char* what) const
{
    for (std::size_t k = 0; k < data_.size(); ++k) {
        if (!std::isfinite(data_[k]))
            throw InvalidArgument(std::string(what) + ": non-finite value at index " + std::to_string(k));
    }
}

template <class T>
void Tensor<T>::add_(const Tensor& other)
{
    if (other.shape_ != shape_) throw InvalidArgument("add: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
}

template <class T>
void Tensor<T>::scale_(T factor)
{
    for (auto& v : data_) v *= factor;
}

template <class T>
Tensor<T> tensor_concat_channels(std::span<const Tensor<T>> ts)
{
    if (ts.empty()) throw InvalidArgument("concat: no inputs");
    const Tensor<T>& first = ts.front();
    if (first.rank() != 4) throw InvalidArgument("concat: tensors must be 4-D");
    if (ts.size() == 1) return first;
    std::size_t channels = 0;
    for (const auto& t : ts) {
        if (t.rank() != 4 || t.n() != first.n() || t.h() != first.h() || t.w() != first.w())
            throw InvalidArgument("concat: batch/spatial mismatch " + shape_string(t.shape()) + " vs " +
                                  shape_string(first.shape()));
        channels += t.c();
    }
    const std::size_t plane = first.h() * first.w();
    Tensor<T> out = Tensor<T>::zeros({first.n(), channels, first.h(), first.w()});
    T* dst = out.ptr();
    for (std::size_t b = 0; b < first.n(); ++b) {
        for (const auto& t : ts) {
            const std::size_t block = t.c() * plane;
            std::memcpy(dst, t.ptr() + b * block, block * sizeof(T));
            dst += block;
        }
    }
    return out;
}

template <class T>
Tensor<T> tensor_slice_channels(const Tensor<T>& t, std::size_t begin, std::size_t count)
{
    if (t.rank() != 4 || begin + count > t.c()) throw InvalidArgument("slice_channels: out of range");
    const std::size_t plane = t.h() * t.w();
    Tensor<T> out = Tensor<T>::zeros({t.n(), count, t.h(), t.w()});
    for (std::size_t b = 0; b < t.n(); ++b)
        std::memcpy(out.ptr() + b * count * plane, t.ptr() + (b * t.c() + begin) * plane, count * plane * sizeof(T));
    return out;
}

template <class T>
Tensor<T> tensor_slice_batch(const Tensor<T>& t, std::size_t begin, std::size_t count)
{
    if (t.rank() != 4 || begin + count > t.n()) throw InvalidArgument("slice_batch: out of range");
    const std::size_t item = t.c() * t.h() * t.w();
    Tensor<T> out = Tensor<T>::zeros({count, t.c(), t.h(), t.w()});
    std::memcpy(out.ptr(), t.ptr() + begin * item, count * item * sizeof(T));
    return out;
}

template <class T>
Tensor<T> tensor_stack_batch(std::span<const Tensor<T>> ts)
{
    if (ts.empty()) throw InvalidArgument("stack: no inputs");
    const auto& first = ts.front();
    if (first.rank() != 4) throw InvalidArgument("stack: tensors must be 4-D");
    std::size_t total = 0;
    for (const auto& t : ts) {
        if (t.rank() != 4 || t.c() != first.c() || t.h() != first.h() || t.w() != first.w())
            throw InvalidArgument("stack: shape mismatch");
        total += t.n();
    }
    Tensor<T> out = Tensor<T>::zeros({total, first.c(), first.h(), first.w()});
    T* dst = out.ptr();
    for (const auto& t : ts) {
        std::memcpy(dst, t.ptr(), t.size() * sizeof(T));
        dst += t.size();
    }
    return out;
}

#define RUQ_INSTANTIATE(T)                                                                  \
    template class Tensor<T>;                                                               \
    template Tensor<T> tensor_concat_channels<T>(std::span<const Tensor<T>>);               \
    template Tensor<T> tensor_slice_channels<T>(const Tensor<T>&, std::size_t, std::size_t); \
    template Tensor<T> tensor_slice_batch<T>(const Tensor<T>&, std::size_t, std::size_t);    \
    template Tensor<T> tensor_stack_batch<T>(std::span<const Tensor<T>>);

RUQ_INSTANTIATE(float)
RUQ_INSTANTIATE(double)

#undef RUQ_INSTANTIATE

} // namespace ruq
