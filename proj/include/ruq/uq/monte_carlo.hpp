#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ruq/sim/simulator.hpp"
#include "ruq/vunet/train.hpp"

namespace ruq::uq {

enum class Provenance { baseline, surrogate };

std::string to_string(Provenance p);

struct Member {
    std::uint64_t perm_id = 0;
    sim::Snapshot snapshot;
};

/// Realizations of (S, P) at one time under one well set.
struct Ensemble {
    Grid grid;
    double time = 0.0;
    int wellset_id = 0;
    Provenance provenance = Provenance::baseline;
    std::vector<Member> members;
    double wall_seconds = 0.0; // compute only

    std::size_t size() const noexcept { return members.size(); }

    /// Throws InvalidArgument if a member is off-grid or at another time.
    void validate() const;
};

struct FieldPair {
    ScalarField s;
    ScalarField p;
};

/// Simulates each seed's permeability under `wells` up to day t (only that report) and
/// keeps the snapshot. Members follow the seed order. Simulator failures are rethrown
/// with the failing seed in the message.
Ensemble mc_baseline(std::span<const std::uint64_t> perm_seeds, const sim::WellSet& wells, const Grid& grid, double t,
                     const sim::Schedule& schedule = {}, int jobs = 1, int wellset_id = 0);

/// Cellwise mean. Members are reduced in a canonical order, so the result does not
/// depend on member order. Throws InvalidArgument when empty.
FieldPair ensemble_mean(const Ensemble& e);

/// Cellwise unbiased variance. Throws InvalidArgument for fewer than two members.
FieldPair ensemble_variance(const Ensemble& e);

/// One eval-mode prediction per observation, all under control map y_new (the well
/// map at day t). data_stats must equal the model's normalization statistics.
Ensemble mc_surrogate(vunet::Model<float>& model, std::span<const vunet::Observation> observations,
                      const ScalarField& y_new, double t, const data::NormStats& data_stats,
                      std::span<const std::uint64_t> perm_ids = {}, int wellset_id = 0, int batch = 16);

struct ProbeOptions {
    double t = 250.0;       // probe day
    int block = 3;          // side of the probe cell block, centered on the first injector
    std::uint64_t seed = 0; // root of the permeability streams
    int bootstrap = 200;    // resamples for the slope interval
    sim::Schedule schedule{};
    int jobs = 1;
    /// Scalar functional of a snapshot; the block mean of S when empty.
    std::function<double(const sim::Snapshot&)> functional;
};

struct ProbeResult {
    std::vector<int> ms;
    std::vector<double> stds; // std of the MC mean across trials, per M
    double slope = 0.0;       // least squares of log(std) on log(M)
    double ci_low = 0.0;      // bootstrap 2.5% / 97.5% over trials
    double ci_high = 0.0;
};

/// For each M and trial, averages the functional over M fresh realizations and
/// measures the spread of that average across trials. Requires at least three
/// increasing Ms and two trials; rejects a functional with zero spread.
ProbeResult mc_convergence_probe(const sim::WellSet& wells, const Grid& grid, const std::vector<int>& ms,
                                 int trials, const ProbeOptions& options = {});

/// Least-squares slope of y on x.
double ls_slope(std::span<const double> x, std::span<const double> y);

struct UQReport {
    double err_s = 0.0; // relative error of the ensemble means, baseline as reference
    double err_p = 0.0;
    double time_baseline_s = 0.0;
    double time_surrogate_s = 0.0;
    double speedup = 0.0;
    double var_ratio_s = 0.0; // mean surrogate variance / mean baseline variance (NaN if M < 2)
    double var_ratio_p = 0.0;
    std::size_t members = 0;
};

/// What survives of an ensemble once its members are reduced.
struct EnsembleSummary {
    Grid grid;
    double time = 0.0;
    int wellset_id = 0;
    Provenance provenance = Provenance::baseline;
    std::size_t members = 0;
    double wall_seconds = 0.0;
    FieldPair mean;
    std::optional<FieldPair> variance; // absent for a single member
};

EnsembleSummary summarize(const Ensemble& e);

/// Throws InvalidArgument unless the ensembles share grid, time and well set, and both
/// recorded times are positive.
UQReport compare(const EnsembleSummary& baseline, const EnsembleSummary& surrogate);
UQReport compare(const Ensemble& baseline, const Ensemble& surrogate);

/// Table-3 layout: method, time_s, err_P, err_S, plus variance ratios.
void write_report_csv(const std::filesystem::path& path, const UQReport& r);
std::string format_report(const UQReport& r);

} // namespace ruq::uq
