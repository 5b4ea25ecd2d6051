#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ruq/core/rng.hpp"
#include "ruq/core/tensor.hpp"
#include "ruq/nn/param_set.hpp"

namespace ruq::nn {

enum class Mode { train, eval };

/// One entry of a layer walk, used for parameter accounting.
struct LayerInfo {
    std::string kind; // "conv", "batchnorm", "relu", "upsample", "reflection_pad", "residual", ...
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    std::size_t params = 0;
};

/// Layer with cached forward state. backward() must follow the matching forward()
/// and accumulates parameter gradients; it returns the gradient w.r.t. the input.
template <class T>
class Module {
public:
    virtual ~Module() = default;
    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
    virtual void walk(std::vector<LayerInfo>& out) const = 0;
};

enum class Padding { zero, reflection };

/// 2-D cross-correlation, weights (out, in, k, k), bias (out). Zero padding of width `pad`.
template <class T>
class Conv2d final : public Module<T> {
public:
    /// He-normal (fan-in) weights drawn from rng, zero bias.
    Conv2d(ParamSet<T>& ps, const std::string& name, int in, int out, int kernel, int stride, int pad, Rng& rng);

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void walk(std::vector<LayerInfo>& out) const override;

    Param<T>& weight() noexcept { return *w_; }
    Param<T>& bias() noexcept { return *b_; }
    int stride() const noexcept { return stride_; }
    int pad() const noexcept { return pad_; }

private:
    Param<T>* w_;
    Param<T>* b_;
    int in_, out_, k_, stride_, pad_;
    Shape x_shape_;
    int ho_ = 0, wo_ = 0;
    std::vector<T> cols_;
    std::vector<T> scratch_;
};

/// Per-channel batch normalization. Running statistics follow
/// r <- momentum * r + (1 - momentum) * batch, with the unbiased batch variance.
template <class T>
class BatchNorm2d final : public Module<T> {
public:
    BatchNorm2d(ParamSet<T>& ps, const std::string& name, int channels, double momentum = 0.9, double eps = 1e-5);

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void walk(std::vector<LayerInfo>& out) const override;

    Param<T>& gamma() noexcept { return *gamma_; }
    Param<T>& beta() noexcept { return *beta_; }
    Tensor<T>& running_mean() noexcept { return mean_->value; }
    Tensor<T>& running_var() noexcept { return var_->value; }

    /// Normalized input of the last forward (before gamma/beta).
    const Tensor<T>& normalized() const noexcept { return xhat_; }

private:
    Param<T>* gamma_;
    Param<T>* beta_;
    Buffer<T>* mean_;
    Buffer<T>* var_;
    int channels_;
    double momentum_, eps_;
    Mode mode_ = Mode::train;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
};

template <class T>
class ReLU final : public Module<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void walk(std::vector<LayerInfo>& out) const override;

private:
    Tensor<T> y_;
};

/// Nearest-neighbour x2: every pixel becomes a 2x2 block.
template <class T>
class Upsample2x final : public Module<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void walk(std::vector<LayerInfo>& out) const override;
};

/// Mirror padding without edge repetition: [a b c] -> [b a b c b] at width 1.
template <class T>
class ReflectionPad final : public Module<T> {
public:
    explicit ReflectionPad(int width) : width_(width) {}
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void walk(std::vector<LayerInfo>& out) const override;

private:
    int width_;
    Shape x_shape_;
};

// Stateless functional forms used by the layers and by tests.
template <class T> Tensor<T> relu(const Tensor<T>& x);
template <class T> Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy);
template <class T> Tensor<T> nearest_upsample_x2(const Tensor<T>& x);
template <class T> Tensor<T> nearest_upsample_x2_backward(const Tensor<T>& dy);
template <class T> Tensor<T> reflection_pad(const Tensor<T>& x, int width);
template <class T> Tensor<T> reflection_pad_backward(const Tensor<T>& dy, int width);

/// Runs child modules in order.
template <class T>
class Sequential final : public Module<T> {
public:
    Sequential() = default;
    explicit Sequential(std::string kind) : kind_(std::move(kind)) {}

    template <class M, class... Args>
    M& emplace(Args&&... args)
    {
        auto m = std::make_unique<M>(std::forward<Args>(args)...);
        M& ref = *m;
        layers_.push_back(std::move(m));
        return ref;
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void walk(std::vector<LayerInfo>& out) const override;

    std::size_t size() const noexcept { return layers_.size(); }
    Module<T>& operator[](std::size_t k) { return *layers_[k]; }

private:
    std::string kind_;
    std::vector<std::unique_ptr<Module<T>>> layers_;
};

/// y = x + BN(Conv(ReLU(BN(Conv(x))))), 3x3 convolutions with zero padding 1; no
/// activation after the sum.
template <class T>
class ResidualBlock final : public Module<T> {
public:
    ResidualBlock(ParamSet<T>& ps, const std::string& name, int channels, Rng& rng);

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void walk(std::vector<LayerInfo>& out) const override;

    Sequential<T>& branch() noexcept { return branch_; }
    int channels() const noexcept { return channels_; }

private:
    int channels_;
    Sequential<T> branch_{"residual_branch"};
};

/// Downsampling block: conv 3x3 stride 2 (zero padding 1), BN, ReLU.
template <class T>
std::unique_ptr<Sequential<T>> make_conv_block(ParamSet<T>& ps, const std::string& name, int in, int out, Rng& rng);

/// Upsampling block: nearest x2, reflection pad 1, conv 3x3 (no padding), BN, ReLU.
template <class T>
std::unique_ptr<Sequential<T>> make_up_conv(ParamSet<T>& ps, const std::string& name, int in, int out, Rng& rng);

/// Sum of LayerInfo::params over a walk.
std::size_t walk_param_count(const std::vector<LayerInfo>& walk);

} // namespace ruq::nn
