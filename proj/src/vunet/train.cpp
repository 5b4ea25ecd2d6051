#include "ruq/vunet/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "ruq/data/json_io.hpp"
#include "ruq/nn/adam.hpp"
#include "ruq/nn/checkpoint.hpp"

namespace ruq::vunet {

namespace {

void check_field(const ScalarField& f, int n, const char* what)
{
    if (f.grid().nx != n || f.grid().ny != n)
        throw InvalidArgument(std::string(what) + ": field is " + std::to_string(f.grid().nx) + "x" +
                              std::to_string(f.grid().ny) + ", model expects " + std::to_string(n) + "x" +
                              std::to_string(n));
}

// Writes a normalized field into channel `ch` of sample `b`.
void put(Tensor<float>& t, std::size_t b, std::size_t ch, const ScalarField& f, const data::Affine& a)
{
    const std::size_t cells = f.size();
    float* dst = t.ptr() + (b * t.c() + ch) * cells;
    for (std::size_t k = 0; k < cells; ++k) dst[k] = static_cast<float>((f[k] - a.shift) / a.scale);
}

ScalarField take(const Tensor<float>& t, std::size_t b, std::size_t ch, const Grid& grid, const data::Affine& a)
{
    const std::size_t cells = grid.cells();
    const float* src = t.ptr() + (b * t.c() + ch) * cells;
    std::vector<double> v(cells);
    for (std::size_t k = 0; k < cells; ++k) v[k] = static_cast<double>(src[k]) * a.scale + a.shift;
    return ScalarField(grid, std::move(v));
}

template <class T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* what)
{
    if (a.shape() != b.shape())
        throw InvalidArgument(std::string(what) + ": shape " + shape_string(a.shape()) + " vs " +
                              shape_string(b.shape()));
}

std::vector<std::size_t> iota(std::size_t begin, std::size_t end)
{
    std::vector<std::size_t> v(end - begin);
    std::iota(v.begin(), v.end(), begin);
    return v;
}

} // namespace

TensorSet to_tensors(const std::vector<DataTuple>& tuples, const NormStats& stats, int n)
{
    const auto un = static_cast<std::size_t>(n);
    const std::size_t m = tuples.size();
    TensorSet s;
    s.obs = Tensor<float>::zeros({m, 3, un, un});
    s.control = Tensor<float>::zeros({m, 1, un, un});
    s.target = Tensor<float>::zeros({m, 2, un, un});
    for (std::size_t b = 0; b < m; ++b) {
        const auto& t = tuples[b];
        for (const auto* f : {&t.y, &t.s, &t.p, &t.y2, &t.s2, &t.p2}) check_field(*f, n, "to_tensors");
        put(s.obs, b, 0, t.y, stats.y);
        put(s.obs, b, 1, t.s, stats.s);
        put(s.obs, b, 2, t.p, stats.p);
        put(s.control, b, 0, t.y2, stats.y);
        put(s.target, b, 0, t.s2, stats.s);
        put(s.target, b, 1, t.p2, stats.p);
    }
    return s;
}

TensorSet gather(const TensorSet& set, std::span<const std::size_t> idx)
{
    auto rows = [&](const Tensor<float>& t) {
        Shape shape = t.shape();
        const std::size_t stride = shape_product(shape) / shape[0];
        shape[0] = idx.size();
        Tensor<float> out = Tensor<float>::zeros(shape);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            if (idx[r] >= t.n()) throw InvalidArgument("gather: index out of range");
            std::copy_n(t.ptr() + idx[r] * stride, stride, out.ptr() + r * stride);
        }
        return out;
    };
    return {rows(set.obs), rows(set.control), rows(set.target)};
}

template <class T>
double mse(const Tensor<T>& pred, const Tensor<T>& target)
{
    require_same(pred, target, "mse");
    if (pred.size() == 0) throw InvalidArgument("mse: empty tensors");
    double s = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = static_cast<double>(pred[k]) - static_cast<double>(target[k]);
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

template <class T>
Tensor<T> mse_grad(const Tensor<T>& pred, const Tensor<T>& target)
{
    require_same(pred, target, "mse_grad");
    Tensor<T> g = Tensor<T>::zeros(pred.shape());
    const T c = T(2) / static_cast<T>(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) g[k] = c * (pred[k] - target[k]);
    return g;
}

template <class T>
double loss(const Tensor<T>& pred, const Tensor<T>& target, const Model<T>& model, const Lambdas& lambdas)
{
    return mse(pred, target) + lambdas.theta * model.theta.squared_norm() + lambdas.phi * model.phi.squared_norm() +
           lambdas.psi * model.psi.squared_norm();
}

double train_step(Model<float>& model, const TensorSet& batch, const TrainOptions& options)
{
    model.zero_grad();
    const Tensor<float> pred = model.forward(batch.obs, batch.control, Mode::train);
    const double l = loss(pred, batch.target, model, options.lambdas);
    if (!std::isfinite(l))
        throw NumericalError("training diverged: loss is " + std::to_string(l) + " at step " +
                             std::to_string(model.adam_steps + 1) + " (try a smaller learning rate)");
    model.backward(mse_grad(pred, batch.target));
    for (auto* ps : model.param_sets())
        for (const auto& p : ps->params())
            if (!p.grad.all_finite())
                throw NumericalError("training diverged: non-finite gradient in " + p.name + " at step " +
                                     std::to_string(model.adam_steps + 1));
    ++model.adam_steps;
    const std::array<double, 3> lam{options.lambdas.theta, options.lambdas.phi, options.lambdas.psi};
    auto sets = model.param_sets();
    for (std::size_t k = 0; k < sets.size(); ++k) {
        nn::AdamOptions a;
        a.lr = options.lr;
        a.weight_decay = 2.0 * lam[k];
        nn::adam_step(*sets[k], a, model.adam_steps);
    }
    return l;
}

double evaluate_loss(Model<float>& model, const TensorSet& set, const Lambdas& lambdas, int batch)
{
    if (set.size() == 0) throw InvalidArgument("evaluate_loss: empty set");
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t b0 = 0; b0 < set.size(); b0 += static_cast<std::size_t>(batch)) {
        const auto idx = iota(b0, std::min(set.size(), b0 + static_cast<std::size_t>(batch)));
        const TensorSet part = gather(set, idx);
        const Tensor<float> pred = model.forward(part.obs, part.control, Mode::eval);
        sq += mse(pred, part.target) * static_cast<double>(pred.size());
        count += pred.size();
    }
    return sq / static_cast<double>(count) + lambdas.theta * model.theta.squared_norm() +
           lambdas.phi * model.phi.squared_norm() + lambdas.psi * model.psi.squared_norm();
}

namespace {

// Full copy of the trainable state, used to restore the best epoch.
struct Snapshot {
    std::vector<Tensor<float>> tensors;
    long adam_steps = 0;

    static Snapshot take(const Model<float>& m)
    {
        Snapshot s;
        s.adam_steps = m.adam_steps;
        for (const auto* ps : m.param_sets()) {
            for (const auto& p : ps->params()) {
                s.tensors.push_back(p.value);
                s.tensors.push_back(p.m);
                s.tensors.push_back(p.v);
            }
            for (const auto& b : ps->buffers()) s.tensors.push_back(b.value);
        }
        return s;
    }

    void restore(Model<float>& m) const
    {
        std::size_t k = 0;
        for (auto* ps : m.param_sets()) {
            for (auto& p : ps->params()) {
                p.value = tensors[k++];
                p.m = tensors[k++];
                p.v = tensors[k++];
            }
            for (auto& b : ps->buffers()) b.value = tensors[k++];
        }
        m.adam_steps = adam_steps;
    }
};

} // namespace

TrainResult train(Model<float>& model, const std::vector<DataTuple>& train_set, const std::vector<DataTuple>& val,
                  const TrainOptions& options)
{
    if (options.epochs < 0) throw InvalidArgument("train: epochs must be >= 0");
    if (options.batch < 2) throw InvalidArgument("train: batch must be >= 2");
    if (!(options.lr > 0.0)) throw InvalidArgument("train: learning rate must be > 0");
    TrainResult result;
    if (options.epochs == 0) return result;
    if (train_set.size() < 2) throw InvalidArgument("train: need at least two training tuples");

    const int n = model.config().n;
    const TensorSet tr = to_tensors(train_set, model.stats, n);
    const TensorSet va = val.empty() ? TensorSet{} : to_tensors(val, model.stats, n);
    const auto bs = static_cast<std::size_t>(options.batch);

    std::optional<Snapshot> best;
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        std::vector<std::size_t> order = iota(0, tr.size());
        Rng rng = make_rng(options.seed, "batch-order", static_cast<std::uint64_t>(model.epochs_trained));
        std::shuffle(order.begin(), order.end(), rng);

        double sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += bs) {
            const std::size_t len = std::min(bs, order.size() - b0);
            if (len < 2) continue;
            const TensorSet batch = gather(tr, std::span<const std::size_t>(order).subspan(b0, len));
            sum += train_step(model, batch, options) * static_cast<double>(len);
            seen += len;
        }
        ++model.epochs_trained;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = sum / static_cast<double>(seen);
        rec.val_loss = va.size() > 0 ? evaluate_loss(model, va, options.lambdas) : rec.train_loss;
        if (!std::isfinite(rec.val_loss))
            throw NumericalError("training diverged: validation loss is not finite after epoch " +
                                 std::to_string(epoch));
        result.history.push_back(rec);
        if (rec.val_loss < result.best_val) {
            result.best_val = rec.val_loss;
            result.best_epoch = epoch;
            if (options.restore_best) best = Snapshot::take(model);
        }
        if (options.on_epoch) options.on_epoch(rec);
    }
    if (best) {
        const int trained = model.epochs_trained;
        best->restore(model);
        model.epochs_trained = trained;
    }
    return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history)
{
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_loss);
        out << buf;
    }
    if (!out) throw InvalidArgument("write failed: " + path.string());
}

std::vector<Prediction> predict(Model<float>& model, std::span<const Observation> obs,
                                std::span<const ScalarField> controls, int batch)
{
    if (controls.size() != 1 && controls.size() != obs.size())
        throw InvalidArgument("predict: need one shared control or one per observation");
    if (batch < 1) throw InvalidArgument("predict: batch must be >= 1");
    const int n = model.config().n;
    const auto un = static_cast<std::size_t>(n);
    const NormStats& st = model.stats;
    std::vector<Prediction> out;
    out.reserve(obs.size());
    for (std::size_t b0 = 0; b0 < obs.size(); b0 += static_cast<std::size_t>(batch)) {
        const std::size_t len = std::min(static_cast<std::size_t>(batch), obs.size() - b0);
        Tensor<float> x = Tensor<float>::zeros({len, 3, un, un});
        Tensor<float> c = Tensor<float>::zeros({len, 1, un, un});
        for (std::size_t b = 0; b < len; ++b) {
            const auto& o = obs[b0 + b];
            const auto& ctl = controls.size() == 1 ? controls[0] : controls[b0 + b];
            for (const auto* f : {&o.y, &o.s, &o.p, &ctl}) check_field(*f, n, "predict");
            put(x, b, 0, o.y, st.y);
            put(x, b, 1, o.s, st.s);
            put(x, b, 2, o.p, st.p);
            put(c, b, 0, ctl, st.y);
        }
        const Tensor<float> y = model.forward(x, c, Mode::eval);
        for (std::size_t b = 0; b < len; ++b) {
            const Grid& g = obs[b0 + b].s.grid();
            out.push_back({take(y, b, 0, g, st.s), take(y, b, 1, g, st.p)});
        }
    }
    return out;
}

std::vector<Prediction> predict(Model<float>& model, const std::vector<DataTuple>& tuples, int batch)
{
    std::vector<Observation> obs;
    std::vector<ScalarField> controls;
    obs.reserve(tuples.size());
    controls.reserve(tuples.size());
    for (const auto& t : tuples) {
        obs.push_back({t.y, t.s, t.p});
        controls.push_back(t.y2);
    }
    return predict(model, std::span<const Observation>(obs), std::span<const ScalarField>(controls), batch);
}

std::optional<double> relative_error(const ScalarField& pred, const ScalarField& truth)
{
    if (pred.grid() != truth.grid()) throw InvalidArgument("relative_error: grid mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double d = pred[k] - truth[k];
        num += d * d;
        den += truth[k] * truth[k];
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

ChannelError mean_relative_error(std::span<const ScalarField> pred, std::span<const ScalarField> truth)
{
    if (pred.size() != truth.size()) throw InvalidArgument("mean_relative_error: size mismatch");
    ChannelError e;
    double sum = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        if (auto r = relative_error(pred[k], truth[k])) {
            sum += *r;
            ++e.used;
        } else {
            ++e.skipped;
        }
    }
    e.mean = e.used > 0 ? sum / static_cast<double>(e.used) : 0.0;
    return e;
}

EvalReport evaluate(Model<float>& model, const std::vector<DataTuple>& tuples, int batch)
{
    if (tuples.empty()) throw InvalidArgument("evaluate: empty tuple list");
    const auto preds = predict(model, tuples, batch);
    std::vector<ScalarField> ps, pp, ts, tp;
    for (std::size_t k = 0; k < tuples.size(); ++k) {
        ps.push_back(preds[k].s);
        pp.push_back(preds[k].p);
        ts.push_back(tuples[k].s2);
        tp.push_back(tuples[k].p2);
    }
    const ChannelError es = mean_relative_error(ps, ts);
    const ChannelError ep = mean_relative_error(pp, tp);
    EvalReport r;
    r.err_s = es.mean;
    r.err_p = ep.mean;
    r.err_mean = 0.5 * (r.err_s + r.err_p);
    r.samples = tuples.size();
    r.skipped_s = es.skipped;
    r.skipped_p = ep.skipped;
    if (es.skipped + ep.skipped > 0)
        std::cerr << "warning: skipped " << es.skipped << " saturation and " << ep.skipped
                  << " pressure samples with all-zero truth\n";
    return r;
}

// ---------------------------------------------------------------- checkpoints

namespace {

nlohmann::json config_json(const VUNetConfig& c)
{
    return {{"n", c.n},
            {"base_channels", c.base_channels},
            {"variant", to_string(c.variant)},
            {"no_inter_res", c.no_inter_res},
            {"no_lowres_res", c.no_lowres_res}};
}

VUNetConfig config_from_json(const nlohmann::json& j)
{
    VUNetConfig c;
    c.n = j.at("n").get<int>();
    c.base_channels = j.at("base_channels").get<int>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.no_inter_res = j.at("no_inter_res").get<bool>();
    c.no_lowres_res = j.at("no_lowres_res").get<bool>();
    return c;
}

} // namespace

void save_model(const std::filesystem::path& path, const Model<float>& model)
{
    nn::Checkpoint ck;
    ck.header = {{"format", "ruq-vunet"},
                 {"version", 1},
                 {"config", config_json(model.config())},
                 {"norm", data::to_json(model.stats)},
                 {"seed", model.seed()},
                 {"adam_steps", model.adam_steps},
                 {"epochs_trained", model.epochs_trained}};
    for (const auto* ps : model.param_sets()) {
        for (const auto& p : ps->params()) {
            ck.entries.emplace_back(p.name, p.value);
            ck.entries.emplace_back(p.name + "#m", p.m);
            ck.entries.emplace_back(p.name + "#v", p.v);
        }
        for (const auto& b : ps->buffers()) ck.entries.emplace_back(b.name, b.value);
    }
    nn::write_checkpoint(path, ck);
}

std::unique_ptr<Model<float>> load_model(const std::filesystem::path& path)
{
    const nn::Checkpoint ck = nn::read_checkpoint(path);
    std::unique_ptr<Model<float>> m;
    try {
        if (ck.header.at("format").get<std::string>() != "ruq-vunet")
            throw FormatError(FormatError::Kind::bad_magic, "not a model checkpoint: " + path.string());
        m = std::make_unique<Model<float>>(config_from_json(ck.header.at("config")),
                                           ck.header.at("seed").get<std::uint64_t>());
        m->stats = data::norm_stats_from_json(ck.header.at("norm"));
        m->adam_steps = ck.header.at("adam_steps").get<long>();
        m->epochs_trained = ck.header.at("epochs_trained").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatError::Kind::truncated, "bad checkpoint header in " + path.string() + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(FormatError::Kind::degenerate_shape, "bad checkpoint header in " + path.string() + ": " +
                                                                   e.what());
    }
    auto load = [&](Tensor<float>& dst, const std::string& name) {
        const Tensor<float>* src = nullptr;
        try {
            src = &ck.at(name);
        } catch (const Error&) {
            throw FormatError(FormatError::Kind::truncated, "checkpoint lacks " + name);
        }
        if (src->shape() != dst.shape())
            throw FormatError(FormatError::Kind::degenerate_shape,
                              "checkpoint tensor " + name + " has shape " + shape_string(src->shape()));
        dst = *src;
    };
    std::size_t expected = 0;
    for (auto* ps : m->param_sets()) {
        for (auto& p : ps->params()) {
            load(p.value, p.name);
            load(p.m, p.name + "#m");
            load(p.v, p.name + "#v");
            expected += 3;
        }
        for (auto& b : ps->buffers()) {
            load(b.value, b.name);
            ++expected;
        }
    }
    if (expected != ck.entries.size())
        throw FormatError(FormatError::Kind::degenerate_shape, "checkpoint has " + std::to_string(ck.entries.size()) +
                                                                   " tensors, model expects " +
                                                                   std::to_string(expected));
    return m;
}

// ---------------------------------------------------------------- ablations

std::string to_string(Ablation a)
{
    return a == Ablation::no_inter_res ? "no_inter_res" : "no_lowres_res";
}

Ablation parse_ablation(const std::string& s)
{
    if (s == "no_inter_res" || s == "no-inter-res") return Ablation::no_inter_res;
    if (s == "no_lowres_res" || s == "no-lowres-res") return Ablation::no_lowres_res;
    throw InvalidArgument("unknown ablation '" + s + "'");
}

int count_residual_blocks(const std::vector<nn::LayerInfo>& walk, int channels)
{
    int n = 0;
    for (const auto& l : walk)
        if (l.kind == "residual" && (channels == 0 || l.in_channels == channels)) ++n;
    return n;
}

AblationReport run_ablation(const VUNetConfig& base, const data::Dataset& ds, Ablation which,
                            const TrainOptions& options, std::uint64_t seed, const std::vector<DataTuple>& test)
{
    VUNetConfig plain = base;
    plain.no_inter_res = false;
    plain.no_lowres_res = false;
    VUNetConfig ablated = plain;
    (which == Ablation::no_inter_res ? ablated.no_inter_res : ablated.no_lowres_res) = true;

    const std::vector<DataTuple>& eval_set = test.empty() ? ds.val : test;
    if (eval_set.empty()) throw InvalidArgument("run_ablation: no evaluation tuples");

    AblationReport r;
    r.which = which;
    auto run = [&](const VUNetConfig& cfg, std::size_t& params, std::size_t& walk_params, int& blocks,
                   EvalReport& eval) {
        Model<float> m(cfg, seed);
        m.stats = ds.stats;
        const auto w = m.walk();
        params = m.param_count();
        walk_params = nn::walk_param_count(w);
        blocks = count_residual_blocks(w);
        train(m, ds.train, ds.val, options);
        eval = evaluate(m, eval_set);
    };
    run(plain, r.default_params, r.default_walk_params, r.default_residual_blocks, r.default_eval);
    run(ablated, r.ablated_params, r.ablated_walk_params, r.ablated_residual_blocks, r.ablated_eval);
    return r;
}

template double mse(const Tensor<float>&, const Tensor<float>&);
template double mse(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> mse_grad(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> mse_grad(const Tensor<double>&, const Tensor<double>&);
template double loss(const Tensor<float>&, const Tensor<float>&, const Model<float>&, const Lambdas&);
template double loss(const Tensor<double>&, const Tensor<double>&, const Model<double>&, const Lambdas&);

} // namespace ruq::vunet
