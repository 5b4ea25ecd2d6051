#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ruq/core/field.hpp"
#include "ruq/sim/simulator.hpp"
#include "ruq/sim/wells.hpp"

namespace ruq::data {

/// One training example: observations (y, S, P) under one well set and targets
/// (y2, S2, P2) under another, same permeability and snapshot time.
struct DataTuple {
    ScalarField y, s, p;
    ScalarField y2, s2, p2;
    std::uint64_t perm_id = 0; // seed of the permeability realization
    int perm_index = 0;
    double t = 0.0; // days
    int well_id = 0;
    int well_id2 = 0;
};

/// Affine map x -> (x - shift) / scale.
struct Affine {
    double shift = 0.0;
    double scale = 1.0;

    bool operator==(const Affine&) const = default;
};

struct NormStats {
    Affine s{0.0, 1.0};
    Affine p{150.0, 1.0};
    Affine y{0.0, 1.0};

    bool operator==(const NormStats&) const = default;
};

struct DatasetOptions {
    Grid grid;
    int n_perm = 12;
    int n_wellsets = 8;
    std::uint64_t seed = 0;
    sim::WellSetOptions wells{};
    sim::Schedule schedule{};
    double split_ratio = 0.9;
    double outlier_percentile = 99.9;
    int jobs = 0;
};

/// Raw generator output before filtering and splitting.
struct GeneratedData {
    std::vector<sim::WellSet> wellsets;
    std::vector<std::uint64_t> perm_seeds;
    std::vector<DataTuple> tuples; // n_perm * n_wellsets * snapshots, ordered (perm, t, wellset)
};

/// Simulates every (permeability, well set) pair and pairs each well set with a
/// different one through a seeded derangement per permeability. Field values are
/// rounded to f32 so the in-memory tuples equal what a file roundtrip yields.
/// Throws InvalidArgument if n_wellsets < 2 or n_perm < 1.
GeneratedData generate_dataset(const DatasetOptions& options);

/// Seeded uniformly random permutation of 0..n-1 with no fixed point (n >= 2).
std::vector<int> random_derangement(int n, std::uint64_t seed);

/// Largest |P| over both halves of a tuple.
double tuple_max_pressure(const DataTuple& t);

/// Linear-interpolated q-th percentile (q in [0, 100]) of tuple max pressures.
double pressure_percentile(const std::vector<DataTuple>& tuples, double q);

/// Drops tuples whose max |P| exceeds cap. Throws InvalidArgument unless cap > initial_pressure.
std::vector<DataTuple> filter_outliers(const std::vector<DataTuple>& tuples, double cap,
                                       double initial_pressure = 150.0);

struct Split {
    std::vector<DataTuple> train;
    std::vector<DataTuple> val;
};

/// Seeded shuffle, then the first round(ratio * n) tuples form the train split.
/// Throws InvalidArgument unless 0 < ratio < 1.
Split split(const std::vector<DataTuple>& tuples, double ratio, std::uint64_t seed);

/// Pressure shift is the initial pressure; pressure scale is the standard deviation of
/// every P and P2 value in `train` (1 if that is zero). S and y use the identity map.
NormStats compute_norm_stats(const std::vector<DataTuple>& train, double initial_pressure = 150.0);

/// Throws InvalidArgument if any scale is not > 0.
DataTuple normalize(const DataTuple& t, const NormStats& stats);
DataTuple denormalize(const DataTuple& t, const NormStats& stats);

ScalarField apply(const Affine& a, const ScalarField& f);
ScalarField invert(const Affine& a, const ScalarField& f);

/// Filtered, split dataset with training-split normalization statistics. Tuples are
/// stored in physical units.
struct Dataset {
    Grid grid;
    std::uint64_t seed = 0;
    int n_perm = 0;
    int n_wellsets = 0;
    std::vector<sim::WellSet> wellsets;
    std::vector<std::uint64_t> perm_seeds;
    std::vector<DataTuple> train;
    std::vector<DataTuple> val;
    NormStats stats;
    double pressure_cap = 0.0;
    std::size_t removed = 0;
    double split_ratio = 0.9;

    std::size_t size() const noexcept { return train.size() + val.size(); }
};

/// generate_dataset, filter at the configured percentile, split from the "split"
/// stream of the seed, and compute statistics on the train split.
Dataset build_dataset(const DatasetOptions& options);

/// Writes manifest.json plus one tensor file per distinct field (S and P per
/// permeability, well set and time; y per well set and time; permeabilities).
/// Existing files in `dir` with the same names are overwritten.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);

/// Throws FormatError or InvalidArgument on malformed directories.
Dataset read_dataset(const std::filesystem::path& dir);

} // namespace ruq::data
