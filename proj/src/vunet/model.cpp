#include "ruq/vunet/model.hpp"

#include <span>

namespace ruq::vunet {

using nn::LayerInfo;

std::string to_string(Variant v)
{
    return v == Variant::normal ? "normal" : "reversed";
}

Variant parse_variant(const std::string& s)
{
    if (s == "normal") return Variant::normal;
    if (s == "reversed") return Variant::reversed;
    throw InvalidArgument("unknown variant '" + s + "' (expected normal or reversed)");
}

void VUNetConfig::validate() const
{
    if (n < 16 || n % 16 != 0)
        throw InvalidArgument("VUNetConfig: grid size must be a positive multiple of 16, got " + std::to_string(n));
    if (base_channels < 1)
        throw InvalidArgument("VUNetConfig: base_channels must be >= 1");
}

int default_base_channels(int n)
{
    return n >= 128 ? 8 : 4;
}

namespace {

std::string level_name(const char* what, int l)
{
    return std::string(what) + std::to_string(l);
}

} // namespace

// ---------------------------------------------------------------- encoder

template <class T>
Encoder<T>::Encoder(nn::ParamSet<T>& ps, const VUNetConfig& cfg, int inputs, Rng& rng) : inputs_(inputs)
{
    nin_ = std::make_unique<nn::Conv2d<T>>(ps, "nin", inputs, cfg.channels(0), 1, 1, 0, rng);
    for (int l = 0; l < levels; ++l) {
        if (!cfg.no_inter_res)
            inres_[l] = std::make_unique<nn::ResidualBlock<T>>(ps, level_name("res", l), cfg.channels(l), rng);
        down_[l] = nn::make_conv_block(ps, level_name("down", l), cfg.channels(l), cfg.channels(l + 1), rng);
    }
    if (!cfg.no_lowres_res)
        for (int k = 0; k < lowres_blocks; ++k)
            lowres_.push_back(
                std::make_unique<nn::ResidualBlock<T>>(ps, level_name("low", k), cfg.channels(levels), rng));
}

template <class T>
typename Encoder<T>::Output Encoder<T>::forward(const Tensor<T>& x, Mode mode)
{
    if (x.rank() != 4 || x.c() != static_cast<std::size_t>(inputs_))
        throw InvalidArgument("Encoder: expected " + std::to_string(inputs_) + " input channels, got " +
                              shape_string(x.shape()));
    Output out;
    Tensor<T> h = nin_->forward(x, mode);
    for (int l = 0; l < levels; ++l) {
        if (inres_[l]) h = inres_[l]->forward(h, mode);
        out.skips[l] = h;
        h = down_[l]->forward(h, mode);
    }
    for (auto& b : lowres_) h = b->forward(h, mode);
    out.bottleneck = std::move(h);
    return out;
}

template <class T>
void Encoder<T>::backward(const Tensor<T>& d_bottleneck, const std::array<Tensor<T>, levels>* d_skips)
{
    Tensor<T> d = d_bottleneck;
    for (auto it = lowres_.rbegin(); it != lowres_.rend(); ++it) d = (*it)->backward(d);
    for (int l = levels - 1; l >= 0; --l) {
        d = down_[l]->backward(d);
        if (d_skips) d.add_((*d_skips)[l]);
        if (inres_[l]) d = inres_[l]->backward(d);
    }
    nin_->backward(d);
}

template <class T>
void Encoder<T>::walk(std::vector<LayerInfo>& out) const
{
    nin_->walk(out);
    for (int l = 0; l < levels; ++l) {
        if (inres_[l]) inres_[l]->walk(out);
        down_[l]->walk(out);
    }
    for (const auto& b : lowres_) b->walk(out);
}

// ---------------------------------------------------------------- decoder

template <class T>
Decoder<T>::Decoder(nn::ParamSet<T>& ps, const VUNetConfig& cfg, Rng& rng)
{
    const int bottleneck = 2 * cfg.channels(levels);
    if (!cfg.no_lowres_res)
        for (int k = 0; k < lowres_blocks; ++k)
            lowres_.push_back(std::make_unique<nn::ResidualBlock<T>>(ps, level_name("low", k), bottleneck, rng));
    int in = bottleneck;
    for (int l = levels - 1; l >= 0; --l) {
        up_[l] = nn::make_up_conv(ps, level_name("up", l), in, cfg.channels(l), rng);
        up_channels_[l] = static_cast<std::size_t>(cfg.channels(l));
        if (!cfg.no_inter_res)
            inres_[l] = std::make_unique<nn::ResidualBlock<T>>(ps, level_name("res", l), 2 * cfg.channels(l), rng);
        in = 2 * cfg.channels(l);
    }
    out_ = std::make_unique<nn::Conv2d<T>>(ps, "out", in, 2, 3, 1, 1, rng);
    // Start from a zero prediction; random output weights leave noise that a few
    // hundred small Adam steps cannot remove.
    out_->weight().value.fill(T(0));
}

template <class T>
Tensor<T> Decoder<T>::forward(const Tensor<T>& bottleneck, const std::array<Tensor<T>, levels>& skips, Mode mode)
{
    Tensor<T> h = bottleneck;
    for (auto& b : lowres_) h = b->forward(h, mode);
    for (int l = levels - 1; l >= 0; --l) {
        h = up_[l]->forward(h, mode);
        h = tensor_concat_channels<T>({h, skips[l]});
        if (inres_[l]) h = inres_[l]->forward(h, mode);
    }
    return out_->forward(h, mode);
}

template <class T>
typename Decoder<T>::Grads Decoder<T>::backward(const Tensor<T>& dy)
{
    Grads g;
    Tensor<T> d = out_->backward(dy);
    for (int l = 0; l < levels; ++l) {
        if (inres_[l]) d = inres_[l]->backward(d);
        const std::size_t cu = up_channels_[l];
        g.skips[l] = tensor_slice_channels(d, cu, d.c() - cu);
        d = up_[l]->backward(tensor_slice_channels(d, 0, cu));
    }
    for (auto it = lowres_.rbegin(); it != lowres_.rend(); ++it) d = (*it)->backward(d);
    g.bottleneck = std::move(d);
    return g;
}

template <class T>
void Decoder<T>::walk(std::vector<LayerInfo>& out) const
{
    for (const auto& b : lowres_) b->walk(out);
    for (int l = levels - 1; l >= 0; --l) {
        up_[l]->walk(out);
        if (inres_[l]) inres_[l]->walk(out);
    }
    out_->walk(out);
}

// ---------------------------------------------------------------- model

template <class T>
Model<T>::Model(const VUNetConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed)
{
    cfg_.validate();
    Rng re = make_rng(seed, "init-E");
    Rng rf = make_rng(seed, "init-F");
    Rng rd = make_rng(seed, "init-D");
    enc_e_ = std::make_unique<Encoder<T>>(theta, cfg_, 1, re);
    enc_f_ = std::make_unique<Encoder<T>>(phi, cfg_, 3, rf);
    dec_ = std::make_unique<Decoder<T>>(psi, cfg_, rd);
    bottleneck_channels_ = static_cast<std::size_t>(cfg_.channels(levels));
}

template <class T>
Tensor<T> Model<T>::forward(const Tensor<T>& obs, const Tensor<T>& control, Mode mode)
{
    const auto n = static_cast<std::size_t>(cfg_.n);
    if (obs.rank() != 4 || obs.c() != 3 || obs.h() != n || obs.w() != n)
        throw InvalidArgument("Model: observation must be (B, 3, " + std::to_string(n) + ", " + std::to_string(n) +
                              "), got " + shape_string(obs.shape()));
    if (control.rank() != 4 || control.c() != 1 || control.h() != n || control.w() != n || control.n() != obs.n())
        throw InvalidArgument("Model: control must be (B, 1, N, N) matching the observation, got " +
                              shape_string(control.shape()));
    auto e = enc_e_->forward(control, mode);
    auto f = enc_f_->forward(obs, mode);
    const Tensor<T> z = tensor_concat_channels<T>({e.bottleneck, f.bottleneck});
    return dec_->forward(z, cfg_.variant == Variant::normal ? e.skips : f.skips, mode);
}

template <class T>
void Model<T>::backward(const Tensor<T>& d_out)
{
    auto g = dec_->backward(d_out);
    const std::size_t c = bottleneck_channels_;
    const Tensor<T> de = tensor_slice_channels(g.bottleneck, 0, c);
    const Tensor<T> df = tensor_slice_channels(g.bottleneck, c, c);
    const bool normal = cfg_.variant == Variant::normal;
    enc_e_->backward(de, normal ? &g.skips : nullptr);
    enc_f_->backward(df, normal ? nullptr : &g.skips);
}

template <class T>
void Model<T>::zero_grad()
{
    theta.zero_grad();
    phi.zero_grad();
    psi.zero_grad();
}

template <class T>
std::vector<LayerInfo> Model<T>::walk() const
{
    std::vector<LayerInfo> out;
    enc_e_->walk(out);
    enc_f_->walk(out);
    dec_->walk(out);
    return out;
}

// ---------------------------------------------------------------- counting

namespace {

std::size_t conv_params(std::size_t in, std::size_t out, std::size_t k)
{
    return out * in * k * k + out;
}

std::size_t res_params(std::size_t c)
{
    return 2 * conv_params(c, c, 3) + 4 * c;
}

} // namespace

std::size_t expected_param_count(const VUNetConfig& cfg)
{
    cfg.validate();
    auto ch = [&](int l) { return static_cast<std::size_t>(cfg.channels(l)); };
    auto encoder = [&](std::size_t inputs) {
        std::size_t p = conv_params(inputs, ch(0), 1);
        for (int l = 0; l < levels; ++l) {
            if (!cfg.no_inter_res) p += res_params(ch(l));
            p += conv_params(ch(l), ch(l + 1), 3) + 2 * ch(l + 1);
        }
        if (!cfg.no_lowres_res) p += lowres_blocks * res_params(ch(levels));
        return p;
    };
    std::size_t d = 0;
    if (!cfg.no_lowres_res) d += lowres_blocks * res_params(2 * ch(levels));
    std::size_t in = 2 * ch(levels);
    for (int l = levels - 1; l >= 0; --l) {
        d += conv_params(in, ch(l), 3) + 2 * ch(l);
        if (!cfg.no_inter_res) d += res_params(2 * ch(l));
        in = 2 * ch(l);
    }
    d += conv_params(in, 2, 3);
    return encoder(1) + encoder(3) + d;
}

template class Encoder<float>;
template class Encoder<double>;
template class Decoder<float>;
template class Decoder<double>;
template class Model<float>;
template class Model<double>;

} // namespace ruq::vunet
