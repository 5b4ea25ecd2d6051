#include "ruq/nn/layers.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "ruq/simd/gemm.hpp"

namespace ruq::nn {
namespace {

void require_4d(const Shape& s, const char* who)
{
    if (s.size() != 4) throw InvalidArgument(std::string(who) + ": expected a 4-D tensor, got " + shape_string(s));
}

// Unfolds x (B, C, H, W) into cols (C*k*k, B*Ho*Wo) with zero padding.
template <class T>
void im2col(const T* x, int B, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, T* cols)
{
    const std::size_t ncol = static_cast<std::size_t>(B) * Ho * Wo;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* row = cols + (static_cast<std::size_t>(c) * k * k + static_cast<std::size_t>(ky) * k + kx) * ncol;
                for (int b = 0; b < B; ++b) {
                    const T* plane = x + (static_cast<std::size_t>(b) * C + c) * H * W;
                    for (int oy = 0; oy < Ho; ++oy) {
                        T* out = row + (static_cast<std::size_t>(b) * Ho + oy) * Wo;
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= H) {
                            std::fill(out, out + Wo, T(0));
                            continue;
                        }
                        const T* src = plane + static_cast<std::size_t>(iy) * W;
                        if (stride == 1) {
                            // Valid ox range: 0 <= ox - pad + kx < W.
                            const int lo = std::max(0, pad - kx);
                            const int hi = std::min(Wo, W + pad - kx);
                            std::fill(out, out + lo, T(0));
                            if (hi > lo) std::memcpy(out + lo, src + lo - pad + kx, sizeof(T) * static_cast<std::size_t>(hi - lo));
                            std::fill(out + std::max(hi, lo), out + Wo, T(0));
                        } else {
                            for (int ox = 0; ox < Wo; ++ox) {
                                const int ix = ox * stride - pad + kx;
                                out[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
                            }
                        }
                    }
                }
            }
}

// Adjoint of im2col: accumulates cols back into dx (which must be zeroed).
template <class T>
void col2im(const T* cols, int B, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, T* dx)
{
    const std::size_t ncol = static_cast<std::size_t>(B) * Ho * Wo;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* row = cols + (static_cast<std::size_t>(c) * k * k + static_cast<std::size_t>(ky) * k + kx) * ncol;
                for (int b = 0; b < B; ++b) {
                    T* plane = dx + (static_cast<std::size_t>(b) * C + c) * H * W;
                    for (int oy = 0; oy < Ho; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= H) continue;
                        const T* in = row + (static_cast<std::size_t>(b) * Ho + oy) * Wo;
                        T* dst = plane + static_cast<std::size_t>(iy) * W;
                        if (stride == 1) {
                            const int lo = std::max(0, pad - kx);
                            const int hi = std::min(Wo, W + pad - kx);
                            for (int ox = lo; ox < hi; ++ox) dst[ox - pad + kx] += in[ox];
                        } else {
                            for (int ox = 0; ox < Wo; ++ox) {
                                const int ix = ox * stride - pad + kx;
                                if (ix >= 0 && ix < W) dst[ix] += in[ox];
                            }
                        }
                    }
                }
            }
}

} // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <class T>
Conv2d<T>::Conv2d(ParamSet<T>& ps, const std::string& name, int in, int out, int kernel, int stride, int pad, Rng& rng)
    : in_(in), out_(out), k_(kernel), stride_(stride), pad_(pad)
{
    if (in < 1 || out < 1) throw InvalidArgument("Conv2d: channel counts must be positive");
    if (kernel != 1 && kernel != 3) throw InvalidArgument("Conv2d: kernel must be 1 or 3");
    if (stride != 1 && stride != 2) throw InvalidArgument("Conv2d: stride must be 1 or 2");
    if (pad < 0) throw InvalidArgument("Conv2d: negative padding");
    const std::size_t fan_in = static_cast<std::size_t>(in) * kernel * kernel;
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    auto w = Tensor<T>::zeros({static_cast<std::size_t>(out), static_cast<std::size_t>(in),
                               static_cast<std::size_t>(kernel), static_cast<std::size_t>(kernel)});
    for (auto& v : w.data()) v = static_cast<T>(normal(rng));
    w_ = &ps.add(name + ".weight", std::move(w));
    b_ = &ps.add(name + ".bias", Tensor<T>::zeros({static_cast<std::size_t>(out)}));
}

template <class T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Mode)
{
    require_4d(x.shape(), "Conv2d");
    if (x.c() != static_cast<std::size_t>(in_))
        throw InvalidArgument("Conv2d: expected " + std::to_string(in_) + " input channels, got " + shape_string(x.shape()));
    const int B = static_cast<int>(x.n()), H = static_cast<int>(x.h()), W = static_cast<int>(x.w());
    // Standard floor convention: a 3x3, stride-2, pad-1 convolution halves even extents.
    if (H + 2 * pad_ < k_ || W + 2 * pad_ < k_)
        throw InvalidArgument("Conv2d: input " + shape_string(x.shape()) + " smaller than the kernel");
    ho_ = (H + 2 * pad_ - k_) / stride_ + 1;
    wo_ = (W + 2 * pad_ - k_) / stride_ + 1;
    x_shape_ = x.shape();

    const int K = in_ * k_ * k_;
    const int ncol = B * ho_ * wo_;
    cols_.resize(static_cast<std::size_t>(K) * ncol);
    im2col(x.ptr(), B, in_, H, W, k_, stride_, pad_, ho_, wo_, cols_.data());

    auto y = Tensor<T>::zeros({x.n(), static_cast<std::size_t>(out_), static_cast<std::size_t>(ho_), static_cast<std::size_t>(wo_)});
    const std::size_t plane = static_cast<std::size_t>(ho_) * wo_;
    if (B == 1) {
        simd::gemm_nn(out_, ncol, K, w_->value.ptr(), K, cols_.data(), ncol, y.ptr(), ncol, false);
    } else {
        scratch_.resize(static_cast<std::size_t>(out_) * ncol);
        simd::gemm_nn(out_, ncol, K, w_->value.ptr(), K, cols_.data(), ncol, scratch_.data(), ncol, false);
        for (int b = 0; b < B; ++b)
            for (int o = 0; o < out_; ++o)
                std::memcpy(y.ptr() + (static_cast<std::size_t>(b) * out_ + o) * plane,
                            scratch_.data() + static_cast<std::size_t>(o) * ncol + b * plane, sizeof(T) * plane);
    }
    for (int b = 0; b < B; ++b)
        for (int o = 0; o < out_; ++o) {
            T* dst = y.ptr() + (static_cast<std::size_t>(b) * out_ + o) * plane;
            const T bias = b_->value[static_cast<std::size_t>(o)];
            for (std::size_t q = 0; q < plane; ++q) dst[q] += bias;
        }
    return y;
}

template <class T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy)
{
    if (cols_.empty()) throw InvalidArgument("Conv2d::backward: no cached forward");
    const int B = static_cast<int>(x_shape_[0]), H = static_cast<int>(x_shape_[2]), W = static_cast<int>(x_shape_[3]);
    if (dy.shape() != Shape{x_shape_[0], static_cast<std::size_t>(out_), static_cast<std::size_t>(ho_), static_cast<std::size_t>(wo_)})
        throw InvalidArgument("Conv2d::backward: gradient shape " + shape_string(dy.shape()) + " does not match output");
    const int K = in_ * k_ * k_;
    const int ncol = B * ho_ * wo_;
    const std::size_t plane = static_cast<std::size_t>(ho_) * wo_;

    // dy as (out, B*Ho*Wo).
    std::vector<T> dyr(static_cast<std::size_t>(out_) * ncol);
    for (int b = 0; b < B; ++b)
        for (int o = 0; o < out_; ++o)
            std::memcpy(dyr.data() + static_cast<std::size_t>(o) * ncol + b * plane,
                        dy.ptr() + (static_cast<std::size_t>(b) * out_ + o) * plane, sizeof(T) * plane);

    for (int o = 0; o < out_; ++o) {
        T s = 0;
        const T* row = dyr.data() + static_cast<std::size_t>(o) * ncol;
        for (int q = 0; q < ncol; ++q) s += row[q];
        b_->grad[static_cast<std::size_t>(o)] += s;
    }
    simd::gemm_nt(out_, K, ncol, dyr.data(), ncol, cols_.data(), ncol, w_->grad.ptr(), K, true, scratch_);

    std::vector<T> dcols(static_cast<std::size_t>(K) * ncol);
    simd::gemm_tn(K, ncol, out_, w_->value.ptr(), K, dyr.data(), ncol, dcols.data(), ncol, false, scratch_);
    auto dx = Tensor<T>::zeros(x_shape_);
    col2im(dcols.data(), B, in_, H, W, k_, stride_, pad_, ho_, wo_, dx.ptr());
    return dx;
}

template <class T>
void Conv2d<T>::walk(std::vector<LayerInfo>& out) const
{
    out.push_back({"conv", in_, out_, k_, w_->value.size() + b_->value.size()});
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <class T>
BatchNorm2d<T>::BatchNorm2d(ParamSet<T>& ps, const std::string& name, int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps)
{
    if (channels < 1) throw InvalidArgument("BatchNorm2d: channels must be positive");
    if (!(eps > 0.0)) throw InvalidArgument("BatchNorm2d: epsilon must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("BatchNorm2d: momentum must be in [0, 1)");
    const auto c = static_cast<std::size_t>(channels);
    gamma_ = &ps.add(name + ".gamma", Tensor<T>::filled({c}, T(1)));
    beta_ = &ps.add(name + ".beta", Tensor<T>::zeros({c}));
    mean_ = &ps.add_buffer(name + ".running_mean", Tensor<T>::zeros({c}));
    var_ = &ps.add_buffer(name + ".running_var", Tensor<T>::filled({c}, T(1)));
}

template <class T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode)
{
    require_4d(x.shape(), "BatchNorm2d");
    if (x.c() != static_cast<std::size_t>(channels_))
        throw InvalidArgument("BatchNorm2d: expected " + std::to_string(channels_) + " channels, got " + shape_string(x.shape()));
    const std::size_t B = x.n(), C = x.c(), plane = x.h() * x.w();
    const std::size_t n = B * plane;
    if (mode == Mode::train && n < 2)
        throw InvalidArgument("BatchNorm2d: train mode needs at least 2 values per channel, got " + shape_string(x.shape()));
    mode_ = mode;
    xhat_ = Tensor<T>::zeros(x.shape());
    inv_std_.assign(C, T(0));
    auto y = Tensor<T>::zeros(x.shape());

    for (std::size_t c = 0; c < C; ++c) {
        double mean = 0.0, var = 0.0;
        if (mode == Mode::train) {
            for (std::size_t b = 0; b < B; ++b) {
                const T* p = x.ptr() + (b * C + c) * plane;
                for (std::size_t q = 0; q < plane; ++q) mean += p[q];
            }
            mean /= static_cast<double>(n);
            for (std::size_t b = 0; b < B; ++b) {
                const T* p = x.ptr() + (b * C + c) * plane;
                for (std::size_t q = 0; q < plane; ++q) var += (p[q] - mean) * (p[q] - mean);
            }
            var /= static_cast<double>(n);
            auto& rm = mean_->value[c];
            auto& rv = var_->value[c];
            rm = static_cast<T>(momentum_ * rm + (1.0 - momentum_) * mean);
            rv = static_cast<T>(momentum_ * rv + (1.0 - momentum_) * var * static_cast<double>(n) / static_cast<double>(n - 1));
        } else {
            mean = mean_->value[c];
            var = var_->value[c];
        }
        const T inv = static_cast<T>(1.0 / std::sqrt(var + eps_));
        inv_std_[c] = inv;
        const T g = gamma_->value[c], bt = beta_->value[c], m = static_cast<T>(mean);
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * plane;
            for (std::size_t q = 0; q < plane; ++q) {
                const T h = (x[off + q] - m) * inv;
                xhat_[off + q] = h;
                y[off + q] = g * h + bt;
            }
        }
    }
    return y;
}

template <class T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& dy)
{
    if (dy.shape() != xhat_.shape()) throw InvalidArgument("BatchNorm2d::backward: gradient shape mismatch");
    const std::size_t B = dy.n(), C = dy.c(), plane = dy.h() * dy.w();
    const double n = static_cast<double>(B * plane);
    auto dx = Tensor<T>::zeros(dy.shape());
    for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * plane;
            for (std::size_t q = 0; q < plane; ++q) {
                sum_dy += dy[off + q];
                sum_dy_xhat += dy[off + q] * xhat_[off + q];
            }
        }
        gamma_->grad[c] += static_cast<T>(sum_dy_xhat);
        beta_->grad[c] += static_cast<T>(sum_dy);
        const double g = gamma_->value[c], inv = inv_std_[c];
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * plane;
            if (mode_ == Mode::train) {
                const double k = g * inv / n;
                for (std::size_t q = 0; q < plane; ++q)
                    dx[off + q] = static_cast<T>(k * (n * dy[off + q] - sum_dy - xhat_[off + q] * sum_dy_xhat));
            } else {
                for (std::size_t q = 0; q < plane; ++q) dx[off + q] = static_cast<T>(g * inv * dy[off + q]);
            }
        }
    }
    return dx;
}

template <class T>
void BatchNorm2d<T>::walk(std::vector<LayerInfo>& out) const
{
    out.push_back({"batchnorm", channels_, channels_, 0, gamma_->value.size() + beta_->value.size()});
}

// ---------------------------------------------------------------------------
// Elementwise and resampling

template <class T>
Tensor<T> relu(const Tensor<T>& x)
{
    auto y = Tensor<T>::zeros(x.shape());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] > T(0) ? x[k] : T(0);
    return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy)
{
    if (y.shape() != dy.shape()) throw InvalidArgument("relu_backward: shape mismatch");
    auto dx = Tensor<T>::zeros(dy.shape());
    for (std::size_t k = 0; k < dy.size(); ++k) dx[k] = y[k] > T(0) ? dy[k] : T(0);
    return dx;
}

template <class T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, Mode)
{
    y_ = relu(x);
    return y_;
}

template <class T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& dy)
{
    return relu_backward(y_, dy);
}

template <class T>
void ReLU<T>::walk(std::vector<LayerInfo>& out) const
{
    out.push_back({"relu", 0, 0, 0, 0});
}

template <class T>
Tensor<T> nearest_upsample_x2(const Tensor<T>& x)
{
    require_4d(x.shape(), "nearest_upsample_x2");
    const std::size_t H = x.h(), W = x.w();
    auto y = Tensor<T>::zeros({x.n(), x.c(), 2 * H, 2 * W});
    for (std::size_t p = 0; p < x.n() * x.c(); ++p) {
        const T* src = x.ptr() + p * H * W;
        T* dst = y.ptr() + p * 4 * H * W;
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                const T v = src[i * W + j];
                dst[(2 * i) * 2 * W + 2 * j] = v;
                dst[(2 * i) * 2 * W + 2 * j + 1] = v;
                dst[(2 * i + 1) * 2 * W + 2 * j] = v;
                dst[(2 * i + 1) * 2 * W + 2 * j + 1] = v;
            }
    }
    return y;
}

template <class T>
Tensor<T> nearest_upsample_x2_backward(const Tensor<T>& dy)
{
    require_4d(dy.shape(), "nearest_upsample_x2_backward");
    if (dy.h() % 2 || dy.w() % 2) throw InvalidArgument("nearest_upsample_x2_backward: odd extent");
    const std::size_t H = dy.h() / 2, W = dy.w() / 2;
    auto dx = Tensor<T>::zeros({dy.n(), dy.c(), H, W});
    for (std::size_t p = 0; p < dy.n() * dy.c(); ++p) {
        const T* src = dy.ptr() + p * 4 * H * W;
        T* dst = dx.ptr() + p * H * W;
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j)
                dst[i * W + j] = src[(2 * i) * 2 * W + 2 * j] + src[(2 * i) * 2 * W + 2 * j + 1] +
                                 src[(2 * i + 1) * 2 * W + 2 * j] + src[(2 * i + 1) * 2 * W + 2 * j + 1];
    }
    return dx;
}

template <class T>
Tensor<T> Upsample2x<T>::forward(const Tensor<T>& x, Mode)
{
    return nearest_upsample_x2(x);
}

template <class T>
Tensor<T> Upsample2x<T>::backward(const Tensor<T>& dy)
{
    return nearest_upsample_x2_backward(dy);
}

template <class T>
void Upsample2x<T>::walk(std::vector<LayerInfo>& out) const
{
    out.push_back({"upsample", 0, 0, 0, 0});
}

namespace {

// Source index of padded coordinate p in [0, n + 2w) for mirror padding.
inline int reflect(int p, int w, int n)
{
    int i = p - w;
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return i;
}

} // namespace

template <class T>
Tensor<T> reflection_pad(const Tensor<T>& x, int width)
{
    require_4d(x.shape(), "reflection_pad");
    const int H = static_cast<int>(x.h()), W = static_cast<int>(x.w());
    if (width < 0 || width >= H || width >= W)
        throw InvalidArgument("reflection_pad: width " + std::to_string(width) + " must be below the spatial extent");
    const int Hp = H + 2 * width, Wp = W + 2 * width;
    auto y = Tensor<T>::zeros({x.n(), x.c(), static_cast<std::size_t>(Hp), static_cast<std::size_t>(Wp)});
    for (std::size_t p = 0; p < x.n() * x.c(); ++p) {
        const T* src = x.ptr() + p * static_cast<std::size_t>(H * W);
        T* dst = y.ptr() + p * static_cast<std::size_t>(Hp * Wp);
        for (int i = 0; i < Hp; ++i) {
            const int si = reflect(i, width, H);
            for (int j = 0; j < Wp; ++j) dst[i * Wp + j] = src[si * W + reflect(j, width, W)];
        }
    }
    return y;
}

template <class T>
Tensor<T> reflection_pad_backward(const Tensor<T>& dy, int width)
{
    require_4d(dy.shape(), "reflection_pad_backward");
    const int Hp = static_cast<int>(dy.h()), Wp = static_cast<int>(dy.w());
    const int H = Hp - 2 * width, W = Wp - 2 * width;
    if (width < 0 || width >= H || width >= W) throw InvalidArgument("reflection_pad_backward: bad width");
    auto dx = Tensor<T>::zeros({dy.n(), dy.c(), static_cast<std::size_t>(H), static_cast<std::size_t>(W)});
    for (std::size_t p = 0; p < dy.n() * dy.c(); ++p) {
        const T* src = dy.ptr() + p * static_cast<std::size_t>(Hp * Wp);
        T* dst = dx.ptr() + p * static_cast<std::size_t>(H * W);
        for (int i = 0; i < Hp; ++i) {
            const int si = reflect(i, width, H);
            for (int j = 0; j < Wp; ++j) dst[si * W + reflect(j, width, W)] += src[i * Wp + j];
        }
    }
    return dx;
}

template <class T>
Tensor<T> ReflectionPad<T>::forward(const Tensor<T>& x, Mode)
{
    x_shape_ = x.shape();
    return reflection_pad(x, width_);
}

template <class T>
Tensor<T> ReflectionPad<T>::backward(const Tensor<T>& dy)
{
    return reflection_pad_backward(dy, width_);
}

template <class T>
void ReflectionPad<T>::walk(std::vector<LayerInfo>& out) const
{
    out.push_back({"reflection_pad", 0, 0, width_, 0});
}

// ---------------------------------------------------------------------------
// Composites

template <class T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, Mode mode)
{
    if (layers_.empty()) return x;
    Tensor<T> h = layers_.front()->forward(x, mode);
    for (std::size_t k = 1; k < layers_.size(); ++k) h = layers_[k]->forward(h, mode);
    return h;
}

template <class T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& dy)
{
    if (layers_.empty()) return dy;
    Tensor<T> g = layers_.back()->backward(dy);
    for (std::size_t k = layers_.size() - 1; k-- > 0;) g = layers_[k]->backward(g);
    return g;
}

template <class T>
void Sequential<T>::walk(std::vector<LayerInfo>& out) const
{
    if (!kind_.empty() && kind_ != "residual_branch") out.push_back({kind_, 0, 0, 0, 0});
    for (const auto& l : layers_) l->walk(out);
}

template <class T>
ResidualBlock<T>::ResidualBlock(ParamSet<T>& ps, const std::string& name, int channels, Rng& rng) : channels_(channels)
{
    branch_.template emplace<Conv2d<T>>(ps, name + ".conv1", channels, channels, 3, 1, 1, rng);
    branch_.template emplace<BatchNorm2d<T>>(ps, name + ".bn1", channels);
    branch_.template emplace<ReLU<T>>();
    branch_.template emplace<Conv2d<T>>(ps, name + ".conv2", channels, channels, 3, 1, 1, rng);
    branch_.template emplace<BatchNorm2d<T>>(ps, name + ".bn2", channels);
}

template <class T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x, Mode mode)
{
    require_4d(x.shape(), "ResidualBlock");
    if (x.c() != static_cast<std::size_t>(channels_))
        throw InvalidArgument("ResidualBlock: expected " + std::to_string(channels_) + " channels, got " + shape_string(x.shape()));
    Tensor<T> y = branch_.forward(x, mode);
    y.add_(x);
    return y;
}

template <class T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& dy)
{
    Tensor<T> dx = branch_.backward(dy);
    dx.add_(dy);
    return dx;
}

template <class T>
void ResidualBlock<T>::walk(std::vector<LayerInfo>& out) const
{
    out.push_back({"residual", channels_, channels_, 3, 0});
    branch_.walk(out);
}

template <class T>
std::unique_ptr<Sequential<T>> make_conv_block(ParamSet<T>& ps, const std::string& name, int in, int out, Rng& rng)
{
    auto s = std::make_unique<Sequential<T>>("conv_block");
    s->template emplace<Conv2d<T>>(ps, name + ".conv", in, out, 3, 2, 1, rng);
    s->template emplace<BatchNorm2d<T>>(ps, name + ".bn", out);
    s->template emplace<ReLU<T>>();
    return s;
}

template <class T>
std::unique_ptr<Sequential<T>> make_up_conv(ParamSet<T>& ps, const std::string& name, int in, int out, Rng& rng)
{
    auto s = std::make_unique<Sequential<T>>("up_conv");
    s->template emplace<Upsample2x<T>>();
    s->template emplace<ReflectionPad<T>>(1);
    s->template emplace<Conv2d<T>>(ps, name + ".conv", in, out, 3, 1, 0, rng);
    s->template emplace<BatchNorm2d<T>>(ps, name + ".bn", out);
    s->template emplace<ReLU<T>>();
    return s;
}

std::size_t walk_param_count(const std::vector<LayerInfo>& walk)
{
    std::size_t n = 0;
    for (const auto& l : walk) n += l.params;
    return n;
}

#define RUQ_INSTANTIATE(T)                                                                                    \
    template class Conv2d<T>;                                                                                 \
    template class BatchNorm2d<T>;                                                                            \
    template class ReLU<T>;                                                                                   \
    template class Upsample2x<T>;                                                                             \
    template class ReflectionPad<T>;                                                                          \
    template class Sequential<T>;                                                                             \
    template class ResidualBlock<T>;                                                                          \
    template Tensor<T> relu(const Tensor<T>&);                                                                \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> nearest_upsample_x2(const Tensor<T>&);                                                 \
    template Tensor<T> nearest_upsample_x2_backward(const Tensor<T>&);                                        \
    template Tensor<T> reflection_pad(const Tensor<T>&, int);                                                 \
    template Tensor<T> reflection_pad_backward(const Tensor<T>&, int);                                        \
    template std::unique_ptr<Sequential<T>> make_conv_block(ParamSet<T>&, const std::string&, int, int, Rng&); \
    template std::unique_ptr<Sequential<T>> make_up_conv(ParamSet<T>&, const std::string&, int, int, Rng&);

RUQ_INSTANTIATE(float)
RUQ_INSTANTIATE(double)

} // namespace ruq::nn
