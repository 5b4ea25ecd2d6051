#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "ruq/core/error.hpp"
#include "ruq/core/rng.hpp"
#include "ruq/data/dataset.hpp"
#include "ruq/data/tensor_io.hpp"
#include "ruq/data/well_map.hpp"

using namespace ruq;
using namespace ruq::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("ruq_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ScalarField random_field(const Grid& g, std::uint64_t seed, double lo, double hi)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(g.cells());
    for (auto& x : v) x = u(rng);
    return ScalarField(g, v);
}

DataTuple random_tuple(const Grid& g, std::uint64_t seed)
{
    DataTuple t;
    t.y = random_field(g, seed, -1, 1);
    t.s = random_field(g, seed + 1, 0, 1);
    t.p = random_field(g, seed + 2, 140, 170);
    t.y2 = random_field(g, seed + 3, -1, 1);
    t.s2 = random_field(g, seed + 4, 0, 1);
    t.p2 = random_field(g, seed + 5, 140, 170);
    t.perm_id = seed;
    return t;
}

DatasetOptions small_options(int n_perm, int n_wells, std::uint64_t seed)
{
    DatasetOptions o;
    o.grid = Grid::square(16);
    o.n_perm = n_perm;
    o.n_wellsets = n_wells;
    o.seed = seed;
    return o;
}

} // namespace

TEST_CASE("encode_well_map")
{
    const Grid g = Grid::square(16);
    SUBCASE("single injector")
    {
        sim::WellSet w;
        w.injectors.push_back({3, 4, 0.1});
        const auto m = encode_well_map(w, 250.0, g);
        CHECK(m.at(3, 4) == 0.25);
        CHECK(m.sum() == 0.25);
    }
    SUBCASE("empty set") { CHECK(encode_well_map(sim::WellSet{}, 500.0, g).max() == 0.0); }
    SUBCASE("counts at t = 1000")
    {
        const auto w = sim::random_wellset(g, 4);
        const auto m = encode_well_map(w, 1000.0, g);
        CHECK(std::count(m.values().begin(), m.values().end(), 1.0) == 10);
        CHECK(std::count(m.values().begin(), m.values().end(), -1.0) == 6);
        CHECK(std::count(m.values().begin(), m.values().end(), 0.0) == static_cast<long>(g.cells()) - 16);
    }
    SUBCASE("degenerate time rejected")
    {
        CHECK_THROWS_AS(encode_well_map(sim::WellSet{}, 0.0, g), InvalidArgument);
        CHECK_THROWS_AS(encode_well_map(sim::WellSet{}, 1250.0, g), InvalidArgument);
    }
}

TEST_CASE("tensor file format")
{
    const auto dir = scratch_dir("tensor");
    SUBCASE("bitwise roundtrip")
    {
        Rng rng(5);
        std::normal_distribution<float> n;
        std::vector<float> v(2 * 3 * 4 * 5);
        for (auto& x : v) x = n(rng);
        const Tensor<float> t({2, 3, 4, 5}, v);
        write_tensor(dir / "a.ruq", t);
        CHECK(read_tensor(dir / "a.ruq") == t);
        CHECK(fs::file_size(dir / "a.ruq") == 4 + 4 + 4 * 4 + v.size() * 4);
    }
    SUBCASE("little-endian layout")
    {
        std::ostringstream out;
        write_tensor(out, Tensor<float>({1, 2}, {1.0f, -2.0f}));
        const std::string b = out.str();
        const unsigned char expect[] = {'R', 'U', 'Q', '1', 2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,
                                        0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
        REQUIRE(b.size() == sizeof(expect));
        for (std::size_t k = 0; k < b.size(); ++k) CHECK(static_cast<unsigned char>(b[k]) == expect[k]);
    }
    auto kind_of = [](const std::string& bytes) {
        std::istringstream in(bytes);
        try {
            read_tensor(in);
        } catch (const FormatError& e) {
            return e.kind();
        }
        return FormatError::Kind::io;
    };
    SUBCASE("distinct errors")
    {
        CHECK(kind_of("") == FormatError::Kind::bad_magic);
        CHECK(kind_of("RUQ2xxxx") == FormatError::Kind::bad_magic);
        CHECK(kind_of(std::string("RUQ1\0\0\0\0", 8)) == FormatError::Kind::degenerate_shape);
        CHECK(kind_of(std::string("RUQ1\1\0\0\0\0\0\0\0", 12)) == FormatError::Kind::degenerate_shape);
        CHECK(kind_of(std::string("RUQ1\2\0\0\0", 8)) == FormatError::Kind::truncated);
        CHECK(kind_of(std::string("RUQ1\1\0\0\0\3\0\0\0\0\0\0\0", 16)) == FormatError::Kind::truncated);
        CHECK(kind_of(std::string("RUQ1\2\0\0\0\xff\xff\xff\xff\xff\xff\xff\xff", 16)) == FormatError::Kind::dim_overflow);
        CHECK(kind_of(std::string("RUQ1\x40\0\0\0", 8)) == FormatError::Kind::dim_overflow);
        std::ofstream(dir / "empty.ruq").close();
        CHECK_THROWS_AS(read_tensor(dir / "empty.ruq"), FormatError);
        CHECK_THROWS_AS(read_tensor(dir / "missing.ruq"), FormatError);
    }
    fs::remove_all(dir);
}

TEST_CASE("random_derangement")
{
    for (int n : {2, 3, 8, 50}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto d = random_derangement(n, seed);
            std::vector<int> sorted = d;
            std::sort(sorted.begin(), sorted.end());
            for (int k = 0; k < n; ++k) {
                CHECK(sorted[static_cast<std::size_t>(k)] == k);
                CHECK(d[static_cast<std::size_t>(k)] != k);
            }
        }
    }
    CHECK(random_derangement(2, 1) == std::vector<int>{1, 0});
    CHECK_THROWS_AS(random_derangement(1, 0), InvalidArgument);
}

TEST_CASE("generate_dataset")
{
    SUBCASE("minimal pairing")
    {
        const auto d = generate_dataset(small_options(1, 2, 3));
        REQUIRE(d.tuples.size() == 8);
        for (const auto& t : d.tuples) CHECK(t.well_id + t.well_id2 == 1);
    }
    SUBCASE("pairing constraints, exhaustive")
    {
        const auto d = generate_dataset(small_options(3, 4, 5));
        REQUIRE(d.tuples.size() == 3 * 4 * 4);
        std::map<std::tuple<int, double, int>, const DataTuple*> by_key;
        for (const auto& t : d.tuples) by_key[{t.perm_index, t.t, t.well_id}] = &t;
        CHECK(by_key.size() == d.tuples.size());
        for (const auto& t : d.tuples) {
            CHECK(t.well_id != t.well_id2);
            CHECK(t.perm_id == d.perm_seeds[static_cast<std::size_t>(t.perm_index)]);
            // The target half is the observation half of the tuple keyed by the paired well set.
            const auto* other = by_key.at({t.perm_index, t.t, t.well_id2});
            CHECK(other->s == t.s2);
            CHECK(other->p == t.p2);
            CHECK(other->y == t.y2);
            CHECK(t.y.max() == doctest::Approx(t.t / 1000.0));
        }
        // Per permeability and time, well sets are paired through a permutation.
        for (int p = 0; p < 3; ++p) {
            std::set<int> targets;
            for (const auto& t : d.tuples)
                if (t.perm_index == p && t.t == 250.0) targets.insert(t.well_id2);
            CHECK(targets.size() == 4);
        }
    }
    SUBCASE("deterministic, parallel or not")
    {
        auto o = small_options(2, 3, 11);
        o.jobs = 1;
        const auto a = generate_dataset(o);
        o.jobs = 4;
        const auto b = generate_dataset(o);
        REQUIRE(a.tuples.size() == b.tuples.size());
        for (std::size_t k = 0; k < a.tuples.size(); ++k) {
            CHECK(a.tuples[k].s2 == b.tuples[k].s2);
            CHECK(a.tuples[k].p == b.tuples[k].p);
        }
    }
    SUBCASE("preconditions")
    {
        CHECK_THROWS_AS(generate_dataset(small_options(2, 1, 0)), InvalidArgument);
        CHECK_THROWS_AS(generate_dataset(small_options(0, 3, 0)), InvalidArgument);
    }
}

TEST_CASE("filter_outliers")
{
    const Grid g = Grid::square(8);
    std::vector<DataTuple> ts;
    for (int k = 0; k < 20; ++k) ts.push_back(random_tuple(g, static_cast<std::uint64_t>(10 * k)));
    SUBCASE("no-op under cap") { CHECK(filter_outliers(ts, 1000.0).size() == ts.size()); }
    SUBCASE("single outlier")
    {
        auto with = ts;
        std::vector<double> big(g.cells(), 1700.0);
        with[7].p2 = ScalarField(g, big);
        CHECK(filter_outliers(with, 170.0).size() == with.size() - 1);
    }
    SUBCASE("count removed equals brute-force scan")
    {
        for (double cap : {165.0, 168.0, 169.9}) {
            std::size_t violating = 0;
            for (const auto& t : ts) {
                double m = 0.0;
                for (const auto* f : {&t.p, &t.p2})
                    for (double v : f->values()) m = std::max(m, std::abs(v));
                violating += m > cap;
            }
            CHECK(ts.size() - filter_outliers(ts, cap).size() == violating);
        }
    }
    SUBCASE("percentile") {
        CHECK(pressure_percentile(ts, 100.0) == doctest::Approx(tuple_max_pressure(*std::max_element(
            ts.begin(), ts.end(), [](const auto& a, const auto& b) { return tuple_max_pressure(a) < tuple_max_pressure(b); }))));
        CHECK_THROWS_AS(filter_outliers(ts, 150.0), InvalidArgument);
    }
}

TEST_CASE("split")
{
    const Grid g = Grid::square(4);
    SUBCASE("full-scale split sizes (7600 of 8384)")
    {
        std::vector<DataTuple> ts(8384);
        for (std::size_t k = 0; k < ts.size(); ++k) ts[k].perm_id = k;
        const auto s = split(ts, 7600.0 / 8384.0, 1);
        CHECK(s.train.size() == 7600);
        CHECK(s.val.size() == 784);
        std::vector<std::uint64_t> ids;
        for (const auto* part : {&s.train, &s.val})
            for (const auto& t : *part) ids.push_back(t.perm_id);
        std::sort(ids.begin(), ids.end());
        for (std::size_t k = 0; k < ids.size(); ++k) CHECK(ids[k] == k);
        CHECK(split(ts, 0.9065, 1).train.size() == 7600);
    }
    SUBCASE("boundaries")
    {
        std::vector<DataTuple> ts(4);
        CHECK_THROWS_AS(split(ts, 1.0, 0), InvalidArgument);
        CHECK_THROWS_AS(split(ts, 0.0, 0), InvalidArgument);
    }
}

TEST_CASE("normalization")
{
    const Grid g = Grid::square(8);
    SUBCASE("identity stats leave S unchanged")
    {
        const auto t = random_tuple(g, 1);
        CHECK(apply(Affine{0.0, 1.0}, t.s) == t.s);
    }
    SUBCASE("hand arithmetic") { CHECK(apply(Affine{150.0, 50.0}, ScalarField::constant(g, 150.0)).max() == 0.0); }
    SUBCASE("roundtrip")
    {
        const auto t = random_tuple(g, 2);
        const NormStats stats{{0.1, 0.7}, {150.0, 3.7}, {0.0, 2.0}};
        const auto r = denormalize(normalize(t, stats), stats);
        for (std::size_t k = 0; k < g.cells(); ++k) {
            CHECK(std::abs(r.p[k] - t.p[k]) <= 1e-12 * 170.0);
            CHECK(std::abs(r.s2[k] - t.s2[k]) <= 1e-12);
            CHECK(std::abs(r.y[k] - t.y[k]) <= 1e-12);
        }
    }
    SUBCASE("zero scale rejected")
    {
        CHECK_THROWS_AS(normalize(random_tuple(g, 3), NormStats{{0, 0}, {150, 1}, {0, 1}}), InvalidArgument);
    }
}

TEST_CASE("build, write and read a dataset")
{
    auto o = small_options(3, 3, 21);
    o.split_ratio = 0.75;
    const auto ds = build_dataset(o);
    CHECK(ds.size() + ds.removed == 36);
    const auto raw = generate_dataset(o);
    CHECK(ds.pressure_cap == pressure_percentile(raw.tuples, 99.9));
    std::size_t above = 0;
    for (const auto& t : raw.tuples) above += tuple_max_pressure(t) > ds.pressure_cap;
    CHECK(ds.removed == above);

    // Statistics come from the train split alone.
    CHECK(ds.stats == compute_norm_stats(ds.train));
    auto all = ds.train;
    all.insert(all.end(), ds.val.begin(), ds.val.end());
    CHECK(ds.stats.p.scale != compute_norm_stats(all).p.scale);
    CHECK(ds.stats.p.shift == 150.0);

    const auto dir = scratch_dir("dataset");
    write_dataset(dir, ds);
    const auto back = read_dataset(dir);
    CHECK(back.grid == ds.grid);
    CHECK(back.stats == ds.stats);
    CHECK(back.perm_seeds == ds.perm_seeds);
    REQUIRE(back.train.size() == ds.train.size());
    REQUIRE(back.val.size() == ds.val.size());
    for (std::size_t k = 0; k < ds.train.size(); ++k) {
        const auto &a = ds.train[k], &b = back.train[k];
        CHECK((a.y == b.y && a.s == b.s && a.p == b.p && a.y2 == b.y2 && a.s2 == b.s2 && a.p2 == b.p2));
        CHECK((a.t == b.t && a.well_id == b.well_id && a.well_id2 == b.well_id2 && a.perm_id == b.perm_id));
    }
    CHECK(back.wellsets.size() == 3);
    CHECK(back.wellsets[1].injectors.size() == ds.wellsets[1].injectors.size());

    // Rebuilding from the same seed writes identical bytes.
    const auto dir2 = scratch_dir("dataset2");
    write_dataset(dir2, build_dataset(o));
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir);
        std::ifstream a(e.path(), std::ios::binary), b(dir2 / rel, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
        CHECK_MESSAGE(sa == sb, rel.string());
    }

    std::ofstream(dir / "manifest.json", std::ios::trunc) << "{\"format\": \"other\"}";
    CHECK_THROWS_AS(read_dataset(dir), FormatError);
    fs::remove_all(dir);
    fs::remove_all(dir2);
}
