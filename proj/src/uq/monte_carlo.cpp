#include "ruq/uq/monte_carlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ruq/core/parallel.hpp"
#include "ruq/core/rng.hpp"
#include "ruq/geostat/gaussian_field.hpp"

namespace ruq::uq {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

sim::Schedule schedule_until(sim::Schedule s, double t)
{
    if (!(t > 0.0)) throw InvalidArgument("report time must be positive");
    s.report_days = {t};
    return s;
}

// Member order used for every reduction: by permutation id, then by field contents.
std::vector<std::size_t> canonical_order(const Ensemble& e)
{
    std::vector<std::size_t> idx(e.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto values = [](const ScalarField& f) { return f.values(); };
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& ma = e.members[a];
        const auto& mb = e.members[b];
        if (ma.perm_id != mb.perm_id) return ma.perm_id < mb.perm_id;
        const auto sa = values(ma.snapshot.saturation), sb = values(mb.snapshot.saturation);
        if (!std::equal(sa.begin(), sa.end(), sb.begin(), sb.end()))
            return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
        const auto pa = values(ma.snapshot.pressure), pb = values(mb.snapshot.pressure);
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
    });
    return idx;
}

double squared_ratio(const ScalarField& pred, const ScalarField& ref)
{
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        num += (pred[k] - ref[k]) * (pred[k] - ref[k]);
        den += ref[k] * ref[k];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

double field_mean(const ScalarField& f)
{
    return f.sum() / static_cast<double>(f.size());
}

} // namespace

std::string to_string(Provenance p)
{
    return p == Provenance::baseline ? "baseline" : "surrogate";
}

void Ensemble::validate() const
{
    for (const auto& m : members) {
        if (m.snapshot.saturation.grid() != grid || m.snapshot.pressure.grid() != grid)
            throw InvalidArgument("Ensemble: member " + std::to_string(m.perm_id) + " is on another grid");
        if (m.snapshot.time != time)
            throw InvalidArgument("Ensemble: member " + std::to_string(m.perm_id) + " is at day " +
                                  std::to_string(m.snapshot.time) + ", ensemble at " + std::to_string(time));
    }
}

Ensemble mc_baseline(std::span<const std::uint64_t> perm_seeds, const sim::WellSet& wells, const Grid& grid, double t,
                     const sim::Schedule& schedule, int jobs, int wellset_id)
{
    if (perm_seeds.empty()) throw InvalidArgument("mc_baseline: no permeability seeds");
    const sim::Schedule s = schedule_until(schedule, t);
    const auto model = geostat::PermModel::defaults(grid);
    // Permeability sampling is input preparation and stays outside the timed region.
    std::vector<geostat::PermField> perms;
    perms.reserve(perm_seeds.size());
    for (auto seed : perm_seeds) perms.push_back(geostat::sample_permeability(grid, model, seed));

    Ensemble e;
    e.grid = grid;
    e.time = t;
    e.wellset_id = wellset_id;
    e.provenance = Provenance::baseline;
    e.members.resize(perm_seeds.size());
    const auto t0 = Clock::now();
    parallel_for(perms.size(), jobs, [&](std::size_t k) {
        try {
            auto r = sim::run_simulation(perms[k], wells, grid, s);
            e.members[k] = {perm_seeds[k], std::move(r.snapshots.at(0))};
        } catch (const NumericalError& err) {
            throw NumericalError("simulation for permeability seed " + std::to_string(perm_seeds[k]) +
                                 " failed: " + err.what());
        } catch (const InvalidArgument& err) {
            throw InvalidArgument("simulation for permeability seed " + std::to_string(perm_seeds[k]) +
                                  " failed: " + err.what());
        }
    });
    e.wall_seconds = seconds_since(t0);
    return e;
}

FieldPair ensemble_mean(const Ensemble& e)
{
    if (e.members.empty()) throw InvalidArgument("ensemble_mean: empty ensemble");
    e.validate();
    const std::size_t cells = e.grid.cells();
    std::vector<double> s(cells, 0.0), p(cells, 0.0);
    for (std::size_t i : canonical_order(e)) {
        const auto& snap = e.members[i].snapshot;
        for (std::size_t k = 0; k < cells; ++k) {
            s[k] += snap.saturation[k];
            p[k] += snap.pressure[k];
        }
    }
    const double m = static_cast<double>(e.size());
    for (std::size_t k = 0; k < cells; ++k) {
        s[k] /= m;
        p[k] /= m;
    }
    return {ScalarField(e.grid, std::move(s)), ScalarField(e.grid, std::move(p))};
}

FieldPair ensemble_variance(const Ensemble& e)
{
    if (e.size() < 2) throw InvalidArgument("ensemble_variance: need at least two members");
    const FieldPair mean = ensemble_mean(e);
    const std::size_t cells = e.grid.cells();
    std::vector<double> s(cells, 0.0), p(cells, 0.0);
    for (std::size_t i : canonical_order(e)) {
        const auto& snap = e.members[i].snapshot;
        for (std::size_t k = 0; k < cells; ++k) {
            const double ds = snap.saturation[k] - mean.s[k];
            const double dp = snap.pressure[k] - mean.p[k];
            s[k] += ds * ds;
            p[k] += dp * dp;
        }
    }
    const double d = static_cast<double>(e.size() - 1);
    for (std::size_t k = 0; k < cells; ++k) {
        s[k] /= d;
        p[k] /= d;
    }
    return {ScalarField(e.grid, std::move(s)), ScalarField(e.grid, std::move(p))};
}

Ensemble mc_surrogate(vunet::Model<float>& model, std::span<const vunet::Observation> observations,
                      const ScalarField& y_new, double t, const data::NormStats& data_stats,
                      std::span<const std::uint64_t> perm_ids, int wellset_id, int batch)
{
    if (observations.empty()) throw InvalidArgument("mc_surrogate: no observations");
    if (!(data_stats == model.stats))
        throw InvalidArgument("mc_surrogate: normalization statistics differ from the model's");
    if (!perm_ids.empty() && perm_ids.size() != observations.size())
        throw InvalidArgument("mc_surrogate: need one permutation id per observation");

    const auto t0 = Clock::now();
    const auto preds = vunet::predict(model, observations, std::span<const ScalarField>(&y_new, 1), batch);
    const double wall = seconds_since(t0);

    Ensemble e;
    e.grid = y_new.grid();
    e.time = t;
    e.wellset_id = wellset_id;
    e.provenance = Provenance::surrogate;
    e.wall_seconds = wall;
    for (std::size_t k = 0; k < preds.size(); ++k)
        e.members.push_back({perm_ids.empty() ? k : perm_ids[k], {t, preds[k].s, preds[k].p}});
    return e;
}

double ls_slope(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("ls_slope: need two or more matching points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    if (sxx == 0.0) throw InvalidArgument("ls_slope: x values are all equal");
    return sxy / sxx;
}

namespace {

double sample_std(std::span<const double> v)
{
    const double n = static_cast<double>(v.size());
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (n - 1.0));
}

double slope_of(const std::vector<int>& ms, const std::vector<double>& stds)
{
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < ms.size(); ++k) {
        lx.push_back(std::log(static_cast<double>(ms[k])));
        ly.push_back(std::log(stds[k]));
    }
    return ls_slope(lx, ly);
}

} // namespace

ProbeResult mc_convergence_probe(const sim::WellSet& wells, const Grid& grid, const std::vector<int>& ms, int trials,
                                 const ProbeOptions& o)
{
    if (ms.size() < 3) throw InvalidArgument("mc_convergence_probe: need at least three sample sizes");
    for (std::size_t k = 0; k < ms.size(); ++k)
        if (ms[k] < 1 || (k > 0 && ms[k] <= ms[k - 1]))
            throw InvalidArgument("mc_convergence_probe: sample sizes must be positive and increasing");
    if (trials < 2) throw InvalidArgument("mc_convergence_probe: need at least two trials");
    if (o.block < 1) throw InvalidArgument("mc_convergence_probe: block must be >= 1");

    std::function<double(const sim::Snapshot&)> functional = o.functional;
    if (!functional) {
        if (wells.injectors.empty()) throw InvalidArgument("mc_convergence_probe: no injector to center the block on");
        const auto& inj = wells.injectors.front();
        const int half = o.block / 2;
        const int i0 = std::clamp(inj.i - half, 0, grid.nx - o.block), j0 = std::clamp(inj.j - half, 0, grid.ny - o.block);
        functional = [=](const sim::Snapshot& s) {
            double sum = 0.0;
            for (int j = j0; j < j0 + o.block; ++j)
                for (int i = i0; i < i0 + o.block; ++i) sum += s.saturation.at(i, j);
            return sum / static_cast<double>(o.block * o.block);
        };
    }

    // One independent realization per (M, trial, member).
    const auto ut = static_cast<std::size_t>(trials);
    std::vector<std::size_t> offset{0};
    for (int m : ms) offset.push_back(offset.back() + ut * static_cast<std::size_t>(m));
    const std::size_t total = offset.back();
    const sim::Schedule s = schedule_until(o.schedule, o.t);
    const auto model = geostat::PermModel::defaults(grid);
    std::vector<double> values(total);
    parallel_for(total, o.jobs, [&](std::size_t k) {
        const auto perm = geostat::sample_permeability(grid, model, stream_seed(o.seed, "probe-perm", k));
        values[k] = functional(sim::run_simulation(perm, wells, grid, s).snapshots.at(0));
    });

    // means[a][b]: MC mean of trial b at sample size ms[a].
    std::vector<std::vector<double>> means(ms.size(), std::vector<double>(ut));
    ProbeResult r;
    r.ms = ms;
    for (std::size_t a = 0; a < ms.size(); ++a) {
        const auto m = static_cast<std::size_t>(ms[a]);
        for (std::size_t b = 0; b < ut; ++b) {
            const double* v = values.data() + offset[a] + b * m;
            means[a][b] = std::accumulate(v, v + m, 0.0) / static_cast<double>(m);
        }
        const double sd = sample_std(means[a]);
        if (!(sd > 0.0))
            throw InvalidArgument("mc_convergence_probe: the functional has zero spread at M=" + std::to_string(ms[a]));
        r.stds.push_back(sd);
    }
    r.slope = slope_of(ms, r.stds);

    Rng rng = make_rng(o.seed, "probe-bootstrap");
    std::uniform_int_distribution<std::size_t> pick(0, ut - 1);
    std::vector<double> slopes;
    std::vector<double> resampled(ut);
    for (int b = 0; b < o.bootstrap; ++b) {
        std::vector<double> sds;
        for (const auto& row : means) {
            for (auto& x : resampled) x = row[pick(rng)];
            sds.push_back(std::max(sample_std(resampled), 1e-300));
        }
        slopes.push_back(slope_of(ms, sds));
    }
    if (!slopes.empty()) {
        std::sort(slopes.begin(), slopes.end());
        auto q = [&](double f) { return slopes[static_cast<std::size_t>(std::lround(f * static_cast<double>(slopes.size() - 1)))]; };
        r.ci_low = q(0.025);
        r.ci_high = q(0.975);
    }
    return r;
}

EnsembleSummary summarize(const Ensemble& e)
{
    EnsembleSummary r{e.grid, e.time, e.wellset_id, e.provenance, e.size(), e.wall_seconds, ensemble_mean(e), std::nullopt};
    if (e.size() >= 2) r.variance = ensemble_variance(e);
    return r;
}

UQReport compare(const EnsembleSummary& baseline, const EnsembleSummary& surrogate)
{
    if (baseline.grid != surrogate.grid) throw InvalidArgument("compare: ensembles are on different grids");
    if (baseline.time != surrogate.time) throw InvalidArgument("compare: ensembles are at different times");
    if (baseline.wellset_id != surrogate.wellset_id) throw InvalidArgument("compare: ensembles use different well sets");
    if (!(baseline.wall_seconds > 0.0) || !(surrogate.wall_seconds > 0.0))
        throw InvalidArgument("compare: recorded times must be positive");
    UQReport r;
    r.err_s = squared_ratio(surrogate.mean.s, baseline.mean.s);
    r.err_p = squared_ratio(surrogate.mean.p, baseline.mean.p);
    r.time_baseline_s = baseline.wall_seconds;
    r.time_surrogate_s = surrogate.wall_seconds;
    r.speedup = baseline.wall_seconds / surrogate.wall_seconds;
    r.members = baseline.members;
    r.var_ratio_s = r.var_ratio_p = std::numeric_limits<double>::quiet_NaN();
    if (baseline.variance && surrogate.variance) {
        r.var_ratio_s = field_mean(surrogate.variance->s) / field_mean(baseline.variance->s);
        r.var_ratio_p = field_mean(surrogate.variance->p) / field_mean(baseline.variance->p);
    }
    return r;
}

UQReport compare(const Ensemble& baseline, const Ensemble& surrogate)
{
    return compare(summarize(baseline), summarize(surrogate));
}

void write_report_csv(const std::filesystem::path& path, const UQReport& r)
{
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    char buf[256];
    out << "method,time_s,err_P,err_S,var_ratio_P,var_ratio_S\n";
    std::snprintf(buf, sizeof buf, "baseline,%.6g,0,0,1,1\n", r.time_baseline_s);
    out << buf;
    std::snprintf(buf, sizeof buf, "surrogate,%.6g,%.6g,%.6g,%.6g,%.6g\n", r.time_surrogate_s, r.err_p, r.err_s,
                  r.var_ratio_p, r.var_ratio_s);
    out << buf;
    if (!out) throw InvalidArgument("write failed: " + path.string());
}

std::string format_report(const UQReport& r)
{
    std::ostringstream s;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "members        %zu\n"
                  "baseline time  %.4f s\n"
                  "surrogate time %.4f s\n"
                  "speedup        %.1fx\n"
                  "err_P          %.6g\n"
                  "err_S          %.6g\n"
                  "var ratio P    %.4g\n"
                  "var ratio S    %.4g\n",
                  r.members, r.time_baseline_s, r.time_surrogate_s, r.speedup, r.err_p, r.err_s, r.var_ratio_p,
                  r.var_ratio_s);
    s << buf;
    return s.str();
}

} // namespace ruq::uq
