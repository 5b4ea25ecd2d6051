#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ruq/data/dataset.hpp"
#include "ruq/nn/layers.hpp"

namespace ruq::vunet {

using nn::Mode;

enum class Variant { normal, reversed };

std::string to_string(Variant v);
/// Throws InvalidArgument for anything but "normal" or "reversed".
Variant parse_variant(const std::string& s);

inline constexpr int levels = 4;        // stride-2 stages; bottleneck at N / 16
inline constexpr int lowres_blocks = 3; // per encoder and in the decoder

struct VUNetConfig {
    int n = 32;
    int base_channels = 8; // channel schedule base * {1, 2, 4, 8, 16}
    Variant variant = Variant::normal;
    bool no_inter_res = false;
    bool no_lowres_res = false;

    /// Throws InvalidArgument unless n is a positive multiple of 16 and base_channels >= 1.
    void validate() const;
    int channels(int level) const noexcept { return base_channels << level; }

    bool operator==(const VUNetConfig&) const = default;
};

/// Desk-scale default width for an n x n grid.
int default_base_channels(int n);

/// Encoder stack: 1x1 "nin" conv to base channels, then per level an optional
/// residual block followed by a stride-2 conv block, then the low-resolution
/// residual blocks. Skips are the activations entering each conv block.
template <class T>
class Encoder {
public:
    Encoder(nn::ParamSet<T>& ps, const VUNetConfig& cfg, int inputs, Rng& rng);

    struct Output {
        Tensor<T> bottleneck;
        std::array<Tensor<T>, levels> skips; // level l has base * 2^l channels at N / 2^l
    };

    Output forward(const Tensor<T>& x, Mode mode);
    /// d_skips may be null when the skips were not consumed.
    void backward(const Tensor<T>& d_bottleneck, const std::array<Tensor<T>, levels>* d_skips);
    void walk(std::vector<nn::LayerInfo>& out) const;

private:
    int inputs_;
    std::unique_ptr<nn::Conv2d<T>> nin_;
    std::array<std::unique_ptr<nn::ResidualBlock<T>>, levels> inres_;
    std::array<std::unique_ptr<nn::Sequential<T>>, levels> down_;
    std::vector<std::unique_ptr<nn::ResidualBlock<T>>> lowres_;
};

/// Decoder: low-resolution residual blocks on the concatenated bottleneck, then per
/// level an up-conv, concatenation [up-conv output, skip], and an optional residual
/// block; a final 3x3 conv maps to the two output channels (S, P).
template <class T>
class Decoder {
public:
    Decoder(nn::ParamSet<T>& ps, const VUNetConfig& cfg, Rng& rng);

    Tensor<T> forward(const Tensor<T>& bottleneck, const std::array<Tensor<T>, levels>& skips, Mode mode);

    struct Grads {
        Tensor<T> bottleneck;
        std::array<Tensor<T>, levels> skips;
    };
    Grads backward(const Tensor<T>& dy);
    void walk(std::vector<nn::LayerInfo>& out) const;

private:
    std::vector<std::unique_ptr<nn::ResidualBlock<T>>> lowres_;
    std::array<std::unique_ptr<nn::Sequential<T>>, levels> up_;
    std::array<std::unique_ptr<nn::ResidualBlock<T>>, levels> inres_;
    std::array<std::size_t, levels> up_channels_{};
    std::unique_ptr<nn::Conv2d<T>> out_;
};

/// Control-guided V-UNet. theta parameterizes the control encoder E (input y'),
/// phi the appearance encoder F (input y, S, P), psi the decoder D.
template <class T>
class Model {
public:
    Model(const VUNetConfig& cfg, std::uint64_t seed);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    /// obs: (B, 3, N, N) normalized [y, S, P]; control: (B, 1, N, N) normalized y'.
    /// Returns (B, 2, N, N) normalized [S', P'].
    Tensor<T> forward(const Tensor<T>& obs, const Tensor<T>& control, Mode mode);

    /// Accumulates parameter gradients for d(loss)/d(output) from the last forward.
    void backward(const Tensor<T>& d_out);

    void zero_grad();
    std::size_t param_count() const noexcept { return theta.count() + phi.count() + psi.count(); }
    std::vector<nn::LayerInfo> walk() const;
    const VUNetConfig& config() const noexcept { return cfg_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::array<nn::ParamSet<T>*, 3> param_sets() noexcept { return {&theta, &phi, &psi}; }
    std::array<const nn::ParamSet<T>*, 3> param_sets() const noexcept { return {&theta, &phi, &psi}; }

    nn::ParamSet<T> theta{"E"};
    nn::ParamSet<T> phi{"F"};
    nn::ParamSet<T> psi{"D"};
    data::NormStats stats{};
    long adam_steps = 0;
    int epochs_trained = 0;

private:
    VUNetConfig cfg_;
    std::uint64_t seed_;
    std::unique_ptr<Encoder<T>> enc_e_;
    std::unique_ptr<Encoder<T>> enc_f_;
    std::unique_ptr<Decoder<T>> dec_;
    std::size_t bottleneck_channels_ = 0;
};

/// Closed-form trainable parameter count of a configuration (no model is built).
std::size_t expected_param_count(const VUNetConfig& cfg);

} // namespace ruq::vunet
