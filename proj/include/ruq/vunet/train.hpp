#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ruq/data/dataset.hpp"
#include "ruq/vunet/model.hpp"

namespace ruq::vunet {

using data::DataTuple;
using data::NormStats;

/// Regularization strengths of the squared-norm penalty on each parameter set.
struct Lambdas {
    double theta = 1e-5;
    double phi = 1e-5;
    double psi = 1e-5;
};

/// Normalized network inputs and targets for a list of tuples.
struct TensorSet {
    Tensor<float> obs;     // (n, 3, N, N): y, S, P
    Tensor<float> control; // (n, 1, N, N): y'
    Tensor<float> target;  // (n, 2, N, N): S', P'

    std::size_t size() const noexcept { return obs.empty() ? 0 : obs.n(); }
};

/// Normalizes physical-unit tuples with `stats`. Throws InvalidArgument on grid mismatch.
TensorSet to_tensors(const std::vector<DataTuple>& tuples, const NormStats& stats, int n);

/// Rows `idx` of every tensor, in that order.
TensorSet gather(const TensorSet& set, std::span<const std::size_t> idx);

/// Mean squared error over every element. Throws InvalidArgument on shape mismatch.
template <class T>
double mse(const Tensor<T>& pred, const Tensor<T>& target);

/// d(mse)/d(pred).
template <class T>
Tensor<T> mse_grad(const Tensor<T>& pred, const Tensor<T>& target);

/// MSE plus lambda_theta ||theta||^2 + lambda_phi ||phi||^2 + lambda_psi ||psi||^2.
template <class T>
double loss(const Tensor<T>& pred, const Tensor<T>& target, const Model<T>& model, const Lambdas& lambdas);

struct EpochRecord {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainOptions {
    double lr = 2e-4;
    int epochs = 10;
    int batch = 16;
    Lambdas lambdas{};
    std::uint64_t seed = 0;   // batch-order stream root
    bool restore_best = true; // keep the parameters of the best validation epoch
    std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = 0; // 0 when no epoch ran
    double best_val = std::numeric_limits<double>::infinity();
};

/// One Adam step on a batch in train mode. Returns the penalized loss before the
/// update. Throws NumericalError if the loss or a gradient is not finite.
double train_step(Model<float>& model, const TensorSet& batch, const TrainOptions& options);

/// Penalized loss of the model over a set in eval mode.
double evaluate_loss(Model<float>& model, const TensorSet& set, const Lambdas& lambdas, int batch = 32);

/// Minibatch Adam over `train` (physical units, normalized with model.stats). Each
/// epoch draws a fresh permutation; a trailing batch of one tuple is skipped because
/// batch statistics need two samples. The validation loss (train loss if `val` is
/// empty) selects the best epoch. Throws NumericalError on divergence.
TrainResult train(Model<float>& model, const std::vector<DataTuple>& train, const std::vector<DataTuple>& val,
                  const TrainOptions& options);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

struct Observation {
    ScalarField y, s, p;
};

/// Denormalized prediction.
struct Prediction {
    ScalarField s, p;
};

/// One eval-mode prediction per observation. `controls` has one entry (shared) or
/// one per observation.
std::vector<Prediction> predict(Model<float>& model, std::span<const Observation> obs,
                                std::span<const ScalarField> controls, int batch = 32);
std::vector<Prediction> predict(Model<float>& model, const std::vector<DataTuple>& tuples, int batch = 32);

/// ||pred - truth||^2 / ||truth||^2, or nothing when truth is identically zero.
std::optional<double> relative_error(const ScalarField& pred, const ScalarField& truth);

struct ChannelError {
    double mean = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;
};

ChannelError mean_relative_error(std::span<const ScalarField> pred, std::span<const ScalarField> truth);

struct EvalReport {
    double err_s = 0.0;
    double err_p = 0.0;
    double err_mean = 0.0;
    std::size_t samples = 0;
    std::size_t skipped_s = 0;
    std::size_t skipped_p = 0;
};

/// Per-channel mean relative error in physical units; err_mean averages the two.
/// Samples with zero truth are skipped, counted and reported on stderr.
EvalReport evaluate(Model<float>& model, const std::vector<DataTuple>& tuples, int batch = 32);

/// Parameters, Adam moments, batch-norm statistics, configuration and normalization.
void save_model(const std::filesystem::path& path, const Model<float>& model);

/// Throws FormatError on malformed or inconsistent checkpoints.
std::unique_ptr<Model<float>> load_model(const std::filesystem::path& path);

enum class Ablation { no_inter_res, no_lowres_res };

std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& s);

struct AblationReport {
    Ablation which{};
    std::size_t default_params = 0;
    std::size_t ablated_params = 0;
    std::size_t default_walk_params = 0; // from the layer walk
    std::size_t ablated_walk_params = 0;
    int default_residual_blocks = 0;
    int ablated_residual_blocks = 0;
    EvalReport default_eval;
    EvalReport ablated_eval;
};

/// Trains the default model and the ablated one with the same options and seed, and
/// evaluates both on `test` (the validation split when empty).
AblationReport run_ablation(const VUNetConfig& base, const data::Dataset& ds, Ablation which,
                            const TrainOptions& options, std::uint64_t seed,
                            const std::vector<DataTuple>& test = {});

/// Number of residual blocks in a walk.
int count_residual_blocks(const std::vector<nn::LayerInfo>& walk, int channels = 0);

} // namespace ruq::vunet
