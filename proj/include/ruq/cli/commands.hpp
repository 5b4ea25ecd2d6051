#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ruq/core/tensor.hpp"
#include "ruq/uq/monte_carlo.hpp"

namespace ruq::cli {

namespace fs = std::filesystem;

// Exit codes shared by every command.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_numerical = 3;

struct DatagenArgs {
    int grid = 32;
    int n_perm = 12;
    int n_wells = 8;
    double split_ratio = 0.9;
    std::uint64_t seed = 0;
    int jobs = 0;
    fs::path out;
};

struct TrainArgs {
    fs::path data;
    fs::path out;     // checkpoint
    fs::path history; // defaults to <out>.history.csv
    double lr = 2e-4;
    int epochs = 10;
    int batch = 16;
    double l2 = 1e-5; // same weight for E, F and D
    std::string variant = "normal";
    bool no_inter_res = false;
    bool no_lowres_res = false;
    int base_channels = 0; // 0 picks the default for the grid size
    std::uint64_t seed = 0;
};

struct EvalArgs {
    fs::path model;
    fs::path data;
    std::string split = "all"; // all, train or val
};

struct UqArgs {
    std::string mode; // baseline, surrogate or compare
    fs::path model;
    fs::path data;
    fs::path out;
    fs::path baseline_dir; // compare mode: reuse saved ensembles instead of recomputing
    fs::path surrogate_dir;
    int old_wells = 0; // well-set ids from the dataset manifest
    int new_wells = 1;
    double time = 1000.0;
    int members = 50;
    std::uint64_t seed = 0;
    int jobs = 0;
};

struct ExportArgs {
    std::string format = "pgm"; // pgm or csv when exporting, ruq when importing CSV
    fs::path field;
    bool triptych = false;
    fs::path truth;
    fs::path pred;
    fs::path from_csv;
    fs::path out;
};

nlohmann::json to_json(const DatagenArgs& a);
nlohmann::json to_json(const TrainArgs& a);
nlohmann::json to_json(const EvalArgs& a);
nlohmann::json to_json(const UqArgs& a);
nlohmann::json to_json(const ExportArgs& a);

// Each command writes results to `out` and diagnostics (starting with the full config) to `log`.
int cmd_datagen(const DatagenArgs& a, std::ostream& out, std::ostream& log);
int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& log);
int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& log);
int cmd_uq(const UqArgs& a, std::ostream& out, std::ostream& log);
int cmd_export(const ExportArgs& a, std::ostream& out, std::ostream& log);

/// Runs fn and maps library errors to exit codes: InvalidArgument and FormatError
/// give exit_usage, NumericalError gives exit_numerical. The message goes to log.
int guarded(const std::function<int()>& fn, std::ostream& log);

/// `err_S=<f> err_P=<f> err_mean=<f>`
std::string format_eval_line(double err_s, double err_p, double err_mean);

/// Ensemble summary directory: mean_S/mean_P (and var_S/var_P for two or more
/// members) as tensor files plus summary.json.
void write_summary(const fs::path& dir, const uq::EnsembleSummary& s);
uq::EnsembleSummary read_summary(const fs::path& dir);

// Field export. Fields are rank-2 (rows, cols) tensors.

/// Throws FormatError unless the file holds a rank-2 tensor.
Tensor<float> read_field(const fs::path& path);

struct Triptych {
    Tensor<float> truth, pred, diff; // diff = pred - truth
};

/// Throws InvalidArgument on shape mismatch.
Triptych make_triptych(const Tensor<float>& truth, const Tensor<float>& pred);

struct PanelScale {
    double min = 0.0;
    double max = 0.0;
};

PanelScale min_max(const std::vector<const Tensor<float>*>& panels);

/// round(255 * (v - min) / (max - min)); every pixel is 0 when max == min.
std::vector<std::uint8_t> to_gray(const Tensor<float>& t, const PanelScale& s);

/// Binary P5 image with the panels side by side, each mapped with its scale. The
/// scales go to <path>.txt, one "panel <k> min <v> max <v>" line per panel.
void write_pgm(const fs::path& path, const std::vector<const Tensor<float>*>& panels,
               const std::vector<PanelScale>& scales);

/// One text row per tensor row, panels side by side, values with 9 significant digits.
void write_csv(const fs::path& path, const std::vector<const Tensor<float>*>& panels);

/// Throws FormatError on ragged rows or unparsable values.
Tensor<float> read_csv(const fs::path& path);

} // namespace ruq::cli
