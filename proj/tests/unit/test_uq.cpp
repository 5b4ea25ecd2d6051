#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "ruq/core/rng.hpp"
#include "ruq/data/well_map.hpp"
#include "ruq/uq/monte_carlo.hpp"

using namespace ruq;
using namespace ruq::uq;
namespace fs = std::filesystem;

namespace {

Ensemble constant_ensemble(const Grid& g, std::initializer_list<std::pair<double, double>> values, double t = 250.0)
{
    Ensemble e;
    e.grid = g;
    e.time = t;
    e.wall_seconds = 1.0;
    std::uint64_t id = 0;
    for (auto [s, p] : values)
        e.members.push_back({id++, {t, ScalarField::constant(g, s), ScalarField::constant(g, p)}});
    return e;
}

ScalarField random_field(const Grid& g, std::uint64_t seed, double lo, double hi)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(g.cells());
    for (auto& x : v) x = u(rng);
    return ScalarField(g, std::move(v));
}

Ensemble random_ensemble(const Grid& g, int m, std::uint64_t seed)
{
    Ensemble e;
    e.grid = g;
    e.time = 500.0;
    e.wall_seconds = 0.5;
    for (int k = 0; k < m; ++k)
        e.members.push_back({static_cast<std::uint64_t>(k),
                             {500.0, random_field(g, seed + 2 * k, 0.0, 1.0), random_field(g, seed + 2 * k + 1, 150.0, 160.0)}});
    return e;
}

std::vector<std::uint64_t> seeds(int n, std::uint64_t root)
{
    std::vector<std::uint64_t> s;
    for (int k = 0; k < n; ++k) s.push_back(stream_seed(root, "perm", static_cast<std::uint64_t>(k)));
    return s;
}

} // namespace

TEST_CASE("ensemble mean")
{
    const Grid g = Grid::square(16);
    SUBCASE("hand values")
    {
        const auto m = ensemble_mean(constant_ensemble(g, {{0.0, 150.0}, {0.5, 151.0}, {1.0, 152.0}}));
        for (std::size_t k = 0; k < g.cells(); ++k) {
            CHECK(m.s[k] == 0.5);
            CHECK(m.p[k] == 151.0);
        }
    }
    SUBCASE("single member is the identity")
    {
        const auto e = random_ensemble(g, 1, 3);
        const auto m = ensemble_mean(e);
        CHECK(m.s == e.members[0].snapshot.saturation);
        CHECK(m.p == e.members[0].snapshot.pressure);
    }
    SUBCASE("loop oracle, permutation invariance and linearity")
    {
        auto e = random_ensemble(g, 7, 10);
        const auto m = ensemble_mean(e);
        for (std::size_t k = 0; k < g.cells(); ++k) {
            double s = 0.0, p = 0.0;
            for (const auto& mem : e.members) {
                s += mem.snapshot.saturation[k];
                p += mem.snapshot.pressure[k];
            }
            CHECK(m.s[k] == s / 7.0);
            CHECK(m.p[k] == p / 7.0);
        }
        auto shuffled = e;
        Rng rng(4);
        std::shuffle(shuffled.members.begin(), shuffled.members.end(), rng);
        CHECK(ensemble_mean(shuffled).s == m.s);
        CHECK(ensemble_variance(shuffled).p == ensemble_variance(e).p);

        auto doubled = e;
        for (auto& mem : doubled.members)
            mem.snapshot = {mem.snapshot.time, field_linear_combine(2.0, mem.snapshot.saturation, 0.0, mem.snapshot.saturation),
                            field_linear_combine(2.0, mem.snapshot.pressure, 0.0, mem.snapshot.pressure)};
        const auto md = ensemble_mean(doubled);
        for (std::size_t k = 0; k < g.cells(); ++k) CHECK(md.s[k] == 2.0 * m.s[k]);
    }
    SUBCASE("errors")
    {
        Ensemble empty;
        empty.grid = g;
        CHECK_THROWS_AS(ensemble_mean(empty), InvalidArgument);
        auto e = random_ensemble(g, 2, 1);
        e.members[1].snapshot.time = 750.0;
        CHECK_THROWS_AS(ensemble_mean(e), InvalidArgument);
    }
}

TEST_CASE("ensemble variance")
{
    const Grid g = Grid::square(16);
    const auto same = ensemble_variance(constant_ensemble(g, {{0.3, 151.0}, {0.3, 151.0}, {0.3, 151.0}}));
    CHECK(same.s.max() == 0.0);
    CHECK(same.p.max() == 0.0);

    const auto two = ensemble_variance(constant_ensemble(g, {{0.0, 150.0}, {1.0, 151.0}}));
    CHECK(two.s.min() == 0.5);
    CHECK(two.s.max() == 0.5);
    CHECK(two.p.max() == 0.5);

    const auto e = random_ensemble(g, 5, 20);
    const auto v = ensemble_variance(e);
    const auto m = ensemble_mean(e);
    for (std::size_t k = 0; k < g.cells(); ++k) {
        double s = 0.0;
        for (const auto& mem : e.members) s += (mem.snapshot.saturation[k] - m.s[k]) * (mem.snapshot.saturation[k] - m.s[k]);
        CHECK(v.s[k] == s / 4.0);
    }
    CHECK_THROWS_AS(ensemble_variance(random_ensemble(g, 1, 1)), InvalidArgument);
}

TEST_CASE("baseline ensembles")
{
    const Grid g = Grid::square(16);
    const auto wells = sim::random_wellset(g, 3);

    SUBCASE("singleton")
    {
        const auto s = seeds(1, 1);
        const auto e = mc_baseline(s, wells, g, 250.0);
        REQUIRE(e.size() == 1);
        CHECK(e.members[0].perm_id == s[0]);
        CHECK(e.members[0].snapshot.time == 250.0);
        CHECK(e.wall_seconds > 0.0);
        CHECK(ensemble_mean(e).s == e.members[0].snapshot.saturation);
        // Matches a direct simulation.
        const auto perm = geostat::sample_permeability(g, geostat::PermModel::defaults(g), s[0]);
        const auto full = sim::run_simulation(perm, wells, g);
        CHECK(full.snapshots[0].saturation == e.members[0].snapshot.saturation);
    }
    SUBCASE("seed order does not matter")
    {
        auto s = seeds(5, 2);
        const auto a = mc_baseline(s, wells, g, 500.0);
        std::reverse(s.begin(), s.end());
        const auto b = mc_baseline(s, wells, g, 500.0, {}, 2);
        CHECK(ensemble_mean(a).s == ensemble_mean(b).s);
        CHECK(ensemble_variance(a).p == ensemble_variance(b).p);
        for (const auto& m : a.members) {
            const auto it = std::find_if(b.members.begin(), b.members.end(), [&](const Member& x) { return x.perm_id == m.perm_id; });
            REQUIRE(it != b.members.end());
            CHECK(it->snapshot.saturation == m.snapshot.saturation);
        }
    }
    SUBCASE("zero injection")
    {
        sim::WellSetOptions o;
        o.total_injection_pv = 0.0;
        const auto still = sim::random_wellset(g, 4, o);
        const auto e = mc_baseline(seeds(3, 3), still, g, 250.0);
        CHECK(ensemble_mean(e).s.max() == 0.0);
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(mc_baseline({}, wells, g, 250.0), InvalidArgument);
        CHECK_THROWS_AS(mc_baseline(seeds(1, 1), wells, g, 0.0), InvalidArgument);
    }
}

TEST_CASE("surrogate ensembles")
{
    const Grid g = Grid::square(16);
    vunet::VUNetConfig c;
    c.n = 16;
    c.base_channels = 2;
    vunet::Model<float> model(c, 5);
    Rng rng(6);
    std::normal_distribution<double> n(0.0, 0.05);
    for (auto* ps : model.param_sets())
        for (auto& p : ps->params())
            for (auto& v : p.value.data()) v += static_cast<float>(n(rng));
    model.stats.p = {150.0, 2.0};

    const auto wells = sim::random_wellset(g, 7);
    const auto y_new = data::encode_well_map(wells, 500.0, g);
    std::vector<vunet::Observation> obs;
    for (std::uint64_t k = 0; k < 5; ++k)
        obs.push_back({data::encode_well_map(sim::random_wellset(g, 10 + k), 500.0, g), random_field(g, 20 + k, 0.0, 1.0),
                       random_field(g, 30 + k, 150.0, 153.0)});

    const auto e = mc_surrogate(model, obs, y_new, 500.0, model.stats, {}, 0, 2);
    CHECK(e.size() == 5);
    CHECK(e.provenance == Provenance::surrogate);
    CHECK(e.wall_seconds > 0.0);

    // Loop oracle over individually computed predictions.
    const auto m = ensemble_mean(e);
    std::vector<double> s(g.cells(), 0.0);
    for (const auto& o : obs) {
        const auto one = vunet::predict(model, std::span<const vunet::Observation>(&o, 1), std::span<const ScalarField>(&y_new, 1));
        for (std::size_t k = 0; k < g.cells(); ++k) s[k] += one[0].s[k];
    }
    for (std::size_t k = 0; k < g.cells(); ++k) CHECK(m.s[k] == doctest::Approx(s[k] / 5.0).epsilon(1e-12));

    const std::vector<vunet::Observation> repeated(4, obs[0]);
    const auto r = mc_surrogate(model, repeated, y_new, 500.0, model.stats);
    CHECK(ensemble_variance(r).s.max() == 0.0);
    CHECK(ensemble_variance(r).p.max() == 0.0);

    auto other = model.stats;
    other.p.scale = 3.0;
    CHECK_THROWS_AS(mc_surrogate(model, obs, y_new, 500.0, other), InvalidArgument);
    CHECK_THROWS_AS(mc_surrogate(model, {}, y_new, 500.0, model.stats), InvalidArgument);
}

TEST_CASE("least squares slope")
{
    const std::vector<double> x{0.0, 1.0, 2.0, 3.0}, y{1.0, -0.5, -2.0, -3.5};
    CHECK(ls_slope(x, y) == doctest::Approx(-1.5).epsilon(1e-15));
    CHECK_THROWS_AS(ls_slope(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 1.0}), InvalidArgument);
}

TEST_CASE("convergence probe")
{
    const Grid g = Grid::square(16);
    const auto wells = sim::random_wellset(g, 8);
    ProbeOptions o;
    o.seed = 2;

    SUBCASE("slope and interval")
    {
        const auto a = mc_convergence_probe(wells, g, {4, 16, 64}, 5, o);
        const auto b = mc_convergence_probe(wells, g, {4, 16, 64}, 40, o);
        MESSAGE("5 trials: slope " << a.slope << " [" << a.ci_low << ", " << a.ci_high << "]");
        MESSAGE("40 trials: slope " << b.slope << " [" << b.ci_low << ", " << b.ci_high << "]");
        CHECK(a.stds.size() == 3);
        CHECK(a.slope < 0.0);
        CHECK(a.ci_low <= a.slope);
        CHECK(a.slope <= a.ci_high);
        CHECK(b.ci_low < -0.5);
        CHECK(-0.5 < b.ci_high);
        CHECK(b.ci_high - b.ci_low < a.ci_high - a.ci_low);
        // Reruns are deterministic.
        const auto again = mc_convergence_probe(wells, g, {4, 16, 64}, 5, o);
        CHECK(again.slope == a.slope);
        CHECK(again.ci_low == a.ci_low);
    }
    SUBCASE("rejections")
    {
        auto flat = o;
        flat.functional = [](const sim::Snapshot&) { return 0.25; };
        CHECK_THROWS_AS(mc_convergence_probe(wells, g, {2, 4, 8}, 3, flat), InvalidArgument);
        CHECK_THROWS_AS(mc_convergence_probe(wells, g, {2, 4}, 3, o), InvalidArgument);
        CHECK_THROWS_AS(mc_convergence_probe(wells, g, {4, 2, 8}, 3, o), InvalidArgument);
        CHECK_THROWS_AS(mc_convergence_probe(wells, g, {2, 4, 8}, 1, o), InvalidArgument);
    }
}

TEST_CASE("comparison report")
{
    const Grid g = Grid::square(16);
    const auto e = random_ensemble(g, 4, 50);
    const auto self = compare(e, e);
    CHECK(self.err_s == 0.0);
    CHECK(self.err_p == 0.0);
    CHECK(self.speedup == 1.0);
    CHECK(self.var_ratio_s == 1.0);

    // Constant fields: baseline S mean 0.3, surrogate 0.4 -> 0.1^2 / 0.3^2.
    const Grid two = Grid::square(2);
    auto base = constant_ensemble(two, {{0.2, 150.0}, {0.4, 150.0}});
    auto surr = constant_ensemble(two, {{0.3, 165.0}, {0.5, 165.0}});
    base.wall_seconds = 10.0;
    surr.wall_seconds = 0.5;
    surr.provenance = Provenance::surrogate;
    const auto r = compare(base, surr);
    CHECK(r.err_s == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(r.err_p == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(r.speedup == 20.0);

    auto late = surr;
    late.time = 500.0;
    for (auto& m : late.members) m.snapshot.time = 500.0;
    CHECK_THROWS_AS(compare(base, late), InvalidArgument);
    auto other = surr;
    other.wellset_id = 3;
    CHECK_THROWS_AS(compare(base, other), InvalidArgument);
    auto untimed = surr;
    untimed.wall_seconds = 0.0;
    CHECK_THROWS_AS(compare(base, untimed), InvalidArgument);

    const auto dir = fs::temp_directory_path() / ("ruq_uq_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    write_report_csv(dir / "r.csv", r);
    std::ifstream in(dir / "r.csv");
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(header == "method,time_s,err_P,err_S,var_ratio_P,var_ratio_S");
    CHECK(row1.rfind("baseline,10,", 0) == 0);
    CHECK(row2.rfind("surrogate,0.5,0.01,", 0) == 0);
    fs::remove_all(dir);
    CHECK(format_report(r).find("speedup        20.0x") != std::string::npos);
}
