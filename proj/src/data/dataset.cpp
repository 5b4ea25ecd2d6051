#include "ruq/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <map>
#include <set>

#include "ruq/core/error.hpp"
#include "ruq/core/parallel.hpp"
#include "ruq/core/rng.hpp"
#include "ruq/data/json_io.hpp"
#include "ruq/data/tensor_io.hpp"
#include "ruq/data/well_map.hpp"
#include "ruq/geostat/gaussian_field.hpp"

namespace ruq::data {

using nlohmann::json;

std::vector<int> random_derangement(int n, std::uint64_t seed)
{
    if (n < 2) throw InvalidArgument("random_derangement: need n >= 2");
    Rng rng(seed);
    std::vector<int> perm(static_cast<std::size_t>(n));
    // Rejection sampling: a uniform permutation is a derangement with probability ~1/e.
    for (;;) {
        std::iota(perm.begin(), perm.end(), 0);
        for (int k = n - 1; k > 0; --k) {
            std::uniform_int_distribution<int> pick(0, k);
            std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(pick(rng))]);
        }
        bool fixed = false;
        for (int k = 0; k < n; ++k) fixed = fixed || perm[static_cast<std::size_t>(k)] == k;
        if (!fixed) return perm;
    }
}

GeneratedData generate_dataset(const DatasetOptions& o)
{
    if (o.n_wellsets < 2) throw InvalidArgument("generate_dataset: need at least 2 well sets to form distinct pairs");
    if (o.n_perm < 1) throw InvalidArgument("generate_dataset: need at least 1 permeability realization");
    const Grid& g = o.grid;

    GeneratedData out;
    for (int w = 0; w < o.n_wellsets; ++w)
        out.wellsets.push_back(sim::random_wellset(g, stream_seed(o.seed, "wells", static_cast<std::uint64_t>(w)), o.wells));
    std::vector<geostat::PermField> perms;
    const auto model = geostat::PermModel::defaults(g);
    for (int p = 0; p < o.n_perm; ++p) {
        out.perm_seeds.push_back(stream_seed(o.seed, "perm", static_cast<std::uint64_t>(p)));
        perms.push_back(geostat::sample_permeability(g, model, out.perm_seeds.back()));
    }

    const std::size_t nw = static_cast<std::size_t>(o.n_wellsets);
    std::vector<sim::SimulationResult> runs(perms.size() * nw);
    parallel_for(runs.size(), o.jobs, [&](std::size_t k) {
        runs[k] = sim::run_simulation(perms[k / nw], out.wellsets[k % nw], g, o.schedule);
    });

    const auto& days = o.schedule.report_days;
    std::vector<ScalarField> maps(nw * days.size());
    for (std::size_t w = 0; w < nw; ++w)
        for (std::size_t n = 0; n < days.size(); ++n)
            maps[w * days.size() + n] = round_to_float(encode_well_map(out.wellsets[w], days[n], g));

    for (std::size_t p = 0; p < perms.size(); ++p) {
        const auto pairing = random_derangement(o.n_wellsets, stream_seed(o.seed, "pairing", p));
        for (std::size_t n = 0; n < days.size(); ++n) {
            for (std::size_t w = 0; w < nw; ++w) {
                const auto w2 = static_cast<std::size_t>(pairing[w]);
                const auto& a = runs[p * nw + w].snapshots[n];
                const auto& b = runs[p * nw + w2].snapshots[n];
                DataTuple t;
                t.y = maps[w * days.size() + n];
                t.s = round_to_float(a.saturation);
                t.p = round_to_float(a.pressure);
                t.y2 = maps[w2 * days.size() + n];
                t.s2 = round_to_float(b.saturation);
                t.p2 = round_to_float(b.pressure);
                t.perm_id = out.perm_seeds[p];
                t.perm_index = static_cast<int>(p);
                t.t = days[n];
                t.well_id = static_cast<int>(w);
                t.well_id2 = static_cast<int>(w2);
                out.tuples.push_back(std::move(t));
            }
        }
    }
    return out;
}

double tuple_max_pressure(const DataTuple& t)
{
    return std::max({std::abs(t.p.min()), std::abs(t.p.max()), std::abs(t.p2.min()), std::abs(t.p2.max())});
}

double pressure_percentile(const std::vector<DataTuple>& tuples, double q)
{
    if (tuples.empty()) throw InvalidArgument("pressure_percentile: no tuples");
    if (!(q >= 0.0 && q <= 100.0)) throw InvalidArgument("pressure_percentile: q must be in [0, 100]");
    std::vector<double> m;
    m.reserve(tuples.size());
    for (const auto& t : tuples) m.push_back(tuple_max_pressure(t));
    std::sort(m.begin(), m.end());
    const double pos = q / 100.0 * static_cast<double>(m.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, m.size() - 1);
    return m[lo] + (pos - static_cast<double>(lo)) * (m[hi] - m[lo]);
}

std::vector<DataTuple> filter_outliers(const std::vector<DataTuple>& tuples, double cap, double initial_pressure)
{
    if (!(cap > initial_pressure))
        throw InvalidArgument("filter_outliers: cap " + std::to_string(cap) + " must exceed the initial pressure");
    std::vector<DataTuple> kept;
    for (const auto& t : tuples)
        if (tuple_max_pressure(t) <= cap) kept.push_back(t);
    return kept;
}

Split split(const std::vector<DataTuple>& tuples, double ratio, std::uint64_t seed)
{
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split: ratio must be in (0, 1)");
    std::vector<std::size_t> order(tuples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t k = order.size(); k > 1; --k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        std::swap(order[k - 1], order[pick(rng)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(tuples.size())));
    Split s;
    for (std::size_t k = 0; k < order.size(); ++k) (k < n_train ? s.train : s.val).push_back(tuples[order[k]]);
    return s;
}

NormStats compute_norm_stats(const std::vector<DataTuple>& train, double initial_pressure)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : train) {
        for (const auto* f : {&t.p, &t.p2}) {
            for (double v : f->values()) {
                sum += v;
            }
            n += f->size();
        }
    }
    NormStats stats;
    stats.p.shift = initial_pressure;
    if (n > 0) {
        const double mean = sum / static_cast<double>(n);
        // Second pass for a stable variance.
        double ss = 0.0;
        for (const auto& t : train)
            for (const auto* f : {&t.p, &t.p2})
                for (double v : f->values()) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        stats.p.scale = sd > 0.0 ? sd : 1.0;
    }
    return stats;
}

ScalarField apply(const Affine& a, const ScalarField& f)
{
    if (!(a.scale > 0.0)) throw InvalidArgument("normalize: scale must be > 0");
    std::vector<double> v(f.values().begin(), f.values().end());
    for (auto& x : v) x = (x - a.shift) / a.scale;
    return ScalarField(f.grid(), std::move(v));
}

ScalarField invert(const Affine& a, const ScalarField& f)
{
    if (!(a.scale > 0.0)) throw InvalidArgument("denormalize: scale must be > 0");
    std::vector<double> v(f.values().begin(), f.values().end());
    for (auto& x : v) x = x * a.scale + a.shift;
    return ScalarField(f.grid(), std::move(v));
}

DataTuple normalize(const DataTuple& t, const NormStats& s)
{
    DataTuple r = t;
    r.y = apply(s.y, t.y);
    r.s = apply(s.s, t.s);
    r.p = apply(s.p, t.p);
    r.y2 = apply(s.y, t.y2);
    r.s2 = apply(s.s, t.s2);
    r.p2 = apply(s.p, t.p2);
    return r;
}

DataTuple denormalize(const DataTuple& t, const NormStats& s)
{
    DataTuple r = t;
    r.y = invert(s.y, t.y);
    r.s = invert(s.s, t.s);
    r.p = invert(s.p, t.p);
    r.y2 = invert(s.y, t.y2);
    r.s2 = invert(s.s, t.s2);
    r.p2 = invert(s.p, t.p2);
    return r;
}

Dataset build_dataset(const DatasetOptions& o)
{
    GeneratedData gen = generate_dataset(o);
    Dataset ds;
    ds.grid = o.grid;
    ds.seed = o.seed;
    ds.n_perm = o.n_perm;
    ds.n_wellsets = o.n_wellsets;
    ds.split_ratio = o.split_ratio;
    ds.wellsets = std::move(gen.wellsets);
    ds.perm_seeds = std::move(gen.perm_seeds);
    ds.pressure_cap = pressure_percentile(gen.tuples, o.outlier_percentile);
    auto kept = ds.pressure_cap > o.schedule.initial_pressure
                    ? filter_outliers(gen.tuples, ds.pressure_cap, o.schedule.initial_pressure)
                    : gen.tuples; // no pressure build-up at all: nothing to filter
    ds.removed = gen.tuples.size() - kept.size();
    auto parts = split(kept, o.split_ratio, stream_seed(o.seed, "split"));
    ds.train = std::move(parts.train);
    ds.val = std::move(parts.val);
    ds.stats = compute_norm_stats(ds.train, o.schedule.initial_pressure);
    return ds;
}

// ---------------------------------------------------------------------------
// Directory layout

namespace {

std::string day_tag(double t) { return std::to_string(static_cast<long long>(std::llround(t))); }

std::string field_name(char what, int perm, int well, double t)
{
    std::ostringstream s;
    s << "fields/" << what << "_p" << perm << "_w" << well << "_t" << day_tag(t) << ".ruq";
    return s.str();
}

std::string map_name(int well, double t) { return "fields/y_w" + std::to_string(well) + "_t" + day_tag(t) + ".ruq"; }

json affine_json(const Affine& a) { return {{"shift", a.shift}, {"scale", a.scale}}; }
Affine affine_from(const json& j) { return {j.at("shift").get<double>(), j.at("scale").get<double>()}; }

json wellset_json(const sim::WellSet& w)
{
    json inj = json::array(), prod = json::array();
    for (const auto& i : w.injectors) inj.push_back({{"i", i.i}, {"j", i.j}, {"rate", i.rate}});
    for (const auto& p : w.producers)
        prod.push_back({{"i", p.i}, {"j", p.j}, {"bhp", p.bhp}, {"well_index", p.well_index}});
    return {{"injectors", inj}, {"producers", prod}};
}

sim::WellSet wellset_from(const json& j)
{
    sim::WellSet w;
    for (const auto& i : j.at("injectors"))
        w.injectors.push_back({i.at("i").get<int>(), i.at("j").get<int>(), i.at("rate").get<double>()});
    for (const auto& p : j.at("producers"))
        w.producers.push_back({p.at("i").get<int>(), p.at("j").get<int>(), p.at("bhp").get<double>(),
                               p.at("well_index").get<double>()});
    return w;
}

} // namespace

json to_json(const NormStats& s)
{
    return {{"S", affine_json(s.s)}, {"P", affine_json(s.p)}, {"y", affine_json(s.y)}};
}

NormStats norm_stats_from_json(const json& j)
{
    return {affine_from(j.at("S")), affine_from(j.at("P")), affine_from(j.at("y"))};
}

json to_json(const Grid& g)
{
    return {{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy}, {"porosity", g.porosity}, {"depth", g.depth}};
}

Grid grid_from_json(const json& j)
{
    return Grid::make(j.at("nx").get<int>(), j.at("ny").get<int>(), j.at("dx").get<double>(), j.at("dy").get<double>(),
                      j.at("porosity").get<double>(), j.at("depth").get<double>());
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "fields", ec);
    fs::create_directories(dir / "perms", ec);
    if (ec) throw FormatError(FormatError::Kind::io, "cannot create " + dir.string() + ": " + ec.message());

    json manifest;
    manifest["format"] = "ruq-dataset";
    manifest["version"] = 1;
    manifest["grid"] = to_json(ds.grid);
    manifest["seed"] = ds.seed;
    manifest["n_perm"] = ds.n_perm;
    manifest["n_wellsets"] = ds.n_wellsets;
    manifest["split_ratio"] = ds.split_ratio;
    manifest["pressure_cap"] = ds.pressure_cap;
    manifest["removed"] = ds.removed;
    manifest["norm"] = to_json(ds.stats);
    json wells = json::array();
    for (std::size_t w = 0; w < ds.wellsets.size(); ++w) {
        json e = wellset_json(ds.wellsets[w]);
        e["id"] = w;
        wells.push_back(e);
    }
    manifest["wellsets"] = wells;

    json perms = json::array();
    const auto model = geostat::PermModel::defaults(ds.grid);
    for (std::size_t p = 0; p < ds.perm_seeds.size(); ++p) {
        const std::string name = "perms/perm_" + std::to_string(p) + ".ruq";
        write_tensor(dir / name, field_to_tensor(geostat::sample_permeability(ds.grid, model, ds.perm_seeds[p]).field));
        perms.push_back({{"index", p}, {"seed", ds.perm_seeds[p]}, {"file", name}});
    }
    manifest["perms"] = perms;

    json tuples = json::array();
    std::set<std::string> written;
    auto emit = [&](const DataTuple& t, const char* which) {
        const std::string files[6] = {map_name(t.well_id, t.t),
                                      field_name('S', t.perm_index, t.well_id, t.t),
                                      field_name('P', t.perm_index, t.well_id, t.t),
                                      map_name(t.well_id2, t.t),
                                      field_name('S', t.perm_index, t.well_id2, t.t),
                                      field_name('P', t.perm_index, t.well_id2, t.t)};
        const ScalarField* fields[6] = {&t.y, &t.s, &t.p, &t.y2, &t.s2, &t.p2};
        // Each distinct field is written once; later tuples referencing it reuse the file.
        for (int k = 0; k < 6; ++k)
            if (written.insert(files[k]).second) write_tensor(dir / files[k], field_to_tensor(*fields[k]));
        tuples.push_back({{"perm_id", t.perm_id},
                          {"perm_index", t.perm_index},
                          {"well_ids", {t.well_id, t.well_id2}},
                          {"t", t.t},
                          {"split", which},
                          {"files",
                           {{"y", files[0]}, {"S", files[1]}, {"P", files[2]}, {"y2", files[3]}, {"S2", files[4]},
                            {"P2", files[5]}}}});
    };
    for (const auto& t : ds.train) emit(t, "train");
    for (const auto& t : ds.val) emit(t, "val");
    manifest["tuples"] = tuples;

    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::io, "cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(1) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir)
{
    std::ifstream in(dir / "manifest.json");
    if (!in) throw FormatError(FormatError::Kind::io, "no manifest.json in " + dir.string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Kind::io, "manifest.json: " + std::string(e.what()));
    }
    if (m.value("format", "") != "ruq-dataset") throw FormatError(FormatError::Kind::bad_magic, "not a dataset manifest");

    try {
        Dataset ds;
        ds.grid = grid_from_json(m.at("grid"));
        ds.seed = m.at("seed").get<std::uint64_t>();
        ds.n_perm = m.at("n_perm").get<int>();
        ds.n_wellsets = m.at("n_wellsets").get<int>();
        ds.split_ratio = m.at("split_ratio").get<double>();
        ds.pressure_cap = m.at("pressure_cap").get<double>();
        ds.removed = m.at("removed").get<std::size_t>();
        ds.stats = norm_stats_from_json(m.at("norm"));
        for (const auto& w : m.at("wellsets")) ds.wellsets.push_back(wellset_from(w));
        for (const auto& p : m.at("perms")) ds.perm_seeds.push_back(p.at("seed").get<std::uint64_t>());

        std::map<std::string, ScalarField> cache;
        auto load = [&](const std::string& name) -> const ScalarField& {
            auto it = cache.find(name);
            if (it == cache.end()) it = cache.emplace(name, tensor_to_field(read_tensor(dir / name), ds.grid)).first;
            return it->second;
        };
        for (const auto& r : m.at("tuples")) {
            DataTuple t;
            const auto& f = r.at("files");
            t.y = load(f.at("y"));
            t.s = load(f.at("S"));
            t.p = load(f.at("P"));
            t.y2 = load(f.at("y2"));
            t.s2 = load(f.at("S2"));
            t.p2 = load(f.at("P2"));
            t.perm_id = r.at("perm_id").get<std::uint64_t>();
            t.perm_index = r.at("perm_index").get<int>();
            t.t = r.at("t").get<double>();
            t.well_id = r.at("well_ids").at(0).get<int>();
            t.well_id2 = r.at("well_ids").at(1).get<int>();
            const auto which = r.at("split").get<std::string>();
            if (which == "train")
                ds.train.push_back(std::move(t));
            else if (which == "val")
                ds.val.push_back(std::move(t));
            else
                throw FormatError(FormatError::Kind::io, "unknown split '" + which + "'");
        }
        return ds;
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Kind::io, "manifest.json: " + std::string(e.what()));
    }
}

} // namespace ruq::data
