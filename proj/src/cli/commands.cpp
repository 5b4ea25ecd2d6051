#include "ruq/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ruq/core/rng.hpp"
#include "ruq/data/dataset.hpp"
#include "ruq/data/json_io.hpp"
#include "ruq/data/tensor_io.hpp"
#include "ruq/data/well_map.hpp"
#include "ruq/vunet/train.hpp"

namespace ruq::cli {

using nlohmann::json;

namespace {

void log_config(std::ostream& log, const char* command, const json& config)
{
    log << "ruq " << command << " config " << config.dump() << '\n';
}

// Fails early with a usage error rather than after minutes of simulation.
void require_writable_dir(const fs::path& dir)
{
    if (dir.empty()) throw InvalidArgument("an output path is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InvalidArgument("cannot create directory " + dir.string());
    const fs::path probe = dir / ".ruq_write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw InvalidArgument("directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

void require_writable_file(const fs::path& file)
{
    if (file.empty()) throw InvalidArgument("an output path is required");
    const fs::path parent = file.has_parent_path() ? file.parent_path() : fs::path(".");
    require_writable_dir(parent);
}

void require_file(const fs::path& p, const char* what)
{
    if (p.empty()) throw InvalidArgument(std::string("missing ") + what);
    if (!fs::exists(p)) throw InvalidArgument(std::string(what) + " not found: " + p.string());
}

void require_dataset(const fs::path& dir)
{
    if (dir.empty()) throw InvalidArgument("missing dataset directory");
    if (!fs::exists(dir / "manifest.json")) throw InvalidArgument("no dataset manifest in " + dir.string());
}

void require_grid_match(const vunet::Model<float>& m, const Grid& g)
{
    if (g.nx != m.config().n || g.ny != m.config().n)
        throw InvalidArgument("checkpoint is for a " + std::to_string(m.config().n) + "x" + std::to_string(m.config().n) +
                              " grid but the dataset is " + std::to_string(g.nx) + "x" + std::to_string(g.ny));
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const sim::WellSet& wellset(const data::Dataset& ds, int id)
{
    if (id < 0 || id >= static_cast<int>(ds.wellsets.size()))
        throw InvalidArgument("well set " + std::to_string(id) + " is not in the dataset (it has " +
                              std::to_string(ds.wellsets.size()) + ")");
    return ds.wellsets[static_cast<std::size_t>(id)];
}

std::vector<std::uint64_t> uq_seeds(const UqArgs& a)
{
    std::vector<std::uint64_t> s;
    for (int k = 0; k < a.members; ++k) s.push_back(stream_seed(a.seed, "uq-perm", static_cast<std::uint64_t>(k)));
    return s;
}

uq::EnsembleSummary run_baseline(const UqArgs& a, const data::Dataset& ds, std::ostream& log)
{
    const auto seeds = uq_seeds(a);
    const auto e = uq::mc_baseline(seeds, wellset(ds, a.new_wells), ds.grid, a.time, {}, a.jobs, a.new_wells);
    log << "baseline: " << e.size() << " simulations in " << e.wall_seconds << " s\n";
    return uq::summarize(e);
}

uq::EnsembleSummary run_surrogate(const UqArgs& a, const data::Dataset& ds, std::ostream& log)
{
    require_file(a.model, "checkpoint");
    auto model = vunet::load_model(a.model);
    require_grid_match(*model, ds.grid);

    // The observations come from the old well set; simulating them is setup, not surrogate cost.
    const auto seeds = uq_seeds(a);
    const auto& old_wells = wellset(ds, a.old_wells);
    const auto observed = uq::mc_baseline(seeds, old_wells, ds.grid, a.time, {}, a.jobs, a.old_wells);
    const ScalarField y_old = data::encode_well_map(old_wells, a.time, ds.grid);
    std::vector<vunet::Observation> obs;
    std::vector<std::uint64_t> ids;
    for (const auto& m : observed.members) {
        obs.push_back({y_old, m.snapshot.saturation, m.snapshot.pressure});
        ids.push_back(m.perm_id);
    }
    const ScalarField y_new = data::encode_well_map(wellset(ds, a.new_wells), a.time, ds.grid);
    const auto e = uq::mc_surrogate(*model, obs, y_new, a.time, model->stats, ids, a.new_wells);
    log << "surrogate: " << e.size() << " predictions in " << e.wall_seconds << " s\n";
    return uq::summarize(e);
}

json summary_json(const uq::EnsembleSummary& s)
{
    return {{"format", "ruq-ensemble"},
            {"version", 1},
            {"grid", data::to_json(s.grid)},
            {"time", s.time},
            {"wellset_id", s.wellset_id},
            {"provenance", uq::to_string(s.provenance)},
            {"members", s.members},
            {"wall_seconds", s.wall_seconds},
            {"has_variance", s.variance.has_value()}};
}

} // namespace

json to_json(const DatagenArgs& a)
{
    return {{"grid", a.grid}, {"n_perm", a.n_perm}, {"n_wells", a.n_wells}, {"split_ratio", a.split_ratio},
            {"seed", a.seed}, {"jobs", a.jobs},     {"out", a.out.string()}};
}

json to_json(const TrainArgs& a)
{
    return {{"data", a.data.string()},
            {"out", a.out.string()},
            {"history", a.history.string()},
            {"lr", a.lr},
            {"epochs", a.epochs},
            {"batch", a.batch},
            {"l2", a.l2},
            {"variant", a.variant},
            {"no_inter_res", a.no_inter_res},
            {"no_lowres_res", a.no_lowres_res},
            {"base_channels", a.base_channels},
            {"seed", a.seed}};
}

json to_json(const EvalArgs& a)
{
    return {{"model", a.model.string()}, {"data", a.data.string()}, {"split", a.split}};
}

json to_json(const UqArgs& a)
{
    return {{"mode", a.mode},
            {"model", a.model.string()},
            {"data", a.data.string()},
            {"out", a.out.string()},
            {"baseline_dir", a.baseline_dir.string()},
            {"surrogate_dir", a.surrogate_dir.string()},
            {"old_wells", a.old_wells},
            {"new_wells", a.new_wells},
            {"time", a.time},
            {"members", a.members},
            {"seed", a.seed},
            {"jobs", a.jobs}};
}

json to_json(const ExportArgs& a)
{
    return {{"format", a.format},          {"field", a.field.string()}, {"triptych", a.triptych},
            {"truth", a.truth.string()},   {"pred", a.pred.string()},   {"from_csv", a.from_csv.string()},
            {"out", a.out.string()}};
}

int guarded(const std::function<int()>& fn, std::ostream& log)
{
    try {
        return fn();
    } catch (const NumericalError& e) {
        log << "error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const InvalidArgument& e) {
        log << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const FormatError& e) {
        log << "error: " << e.what() << '\n';
        return exit_usage;
    }
}

std::string format_eval_line(double err_s, double err_p, double err_mean)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "err_S=%.6g err_P=%.6g err_mean=%.6g", err_s, err_p, err_mean);
    return buf;
}

int cmd_datagen(const DatagenArgs& a, std::ostream& out, std::ostream& log)
{
    log_config(log, "datagen", to_json(a));
    if (a.grid < 8) throw InvalidArgument("--grid must be at least 8");
    if (a.n_perm < 1) throw InvalidArgument("--n-perm must be at least 1");
    if (a.n_wells < 2) throw InvalidArgument("--n-wells must be at least 2 so every well set has a distinct partner");
    require_writable_dir(a.out);

    data::DatasetOptions o;
    o.grid = Grid::square(a.grid);
    o.n_perm = a.n_perm;
    o.n_wellsets = a.n_wells;
    o.seed = a.seed;
    o.split_ratio = a.split_ratio;
    o.jobs = a.jobs;
    const auto t0 = std::chrono::steady_clock::now();
    const auto ds = data::build_dataset(o);
    data::write_dataset(a.out, ds);
    log << "datagen: " << seconds_since(t0) << " s\n";
    out << "tuples=" << ds.size() << " train=" << ds.train.size() << " val=" << ds.val.size()
        << " removed=" << ds.removed << '\n';
    return exit_ok;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& log)
{
    log_config(log, "train", to_json(a));
    require_dataset(a.data);
    require_writable_file(a.out);
    const fs::path history = a.history.empty() ? fs::path(a.out.string() + ".history.csv") : a.history;
    require_writable_file(history);
    if (!(a.lr > 0.0)) throw InvalidArgument("--lr must be positive");
    if (a.epochs < 0) throw InvalidArgument("--epochs must be >= 0");
    if (!(a.l2 >= 0.0)) throw InvalidArgument("--l2 must be >= 0");

    const auto ds = data::read_dataset(a.data);
    if (ds.grid.nx != ds.grid.ny) throw InvalidArgument("the network needs a square grid");
    vunet::VUNetConfig c;
    c.n = ds.grid.nx;
    c.base_channels = a.base_channels > 0 ? a.base_channels : vunet::default_base_channels(c.n);
    c.variant = vunet::parse_variant(a.variant);
    c.no_inter_res = a.no_inter_res;
    c.no_lowres_res = a.no_lowres_res;
    c.validate();

    vunet::Model<float> model(c, a.seed);
    model.stats = ds.stats;
    log << "train: " << model.param_count() << " parameters, base " << c.base_channels << ", " << ds.train.size()
        << " train / " << ds.val.size() << " val tuples\n";

    vunet::TrainOptions t;
    t.lr = a.lr;
    t.epochs = a.epochs;
    t.batch = a.batch;
    t.lambdas = {a.l2, a.l2, a.l2};
    t.seed = a.seed;
    t.on_epoch = [&](const vunet::EpochRecord& r) {
        log << "epoch " << r.epoch << " train_loss " << r.train_loss << " val_loss " << r.val_loss << '\n';
    };
    const auto result = vunet::train(model, ds.train, ds.val, t);
    vunet::save_model(a.out, model);
    vunet::write_history_csv(history, result.history);
    out << "checkpoint=" << a.out.string() << " best_epoch=" << result.best_epoch << '\n';
    return exit_ok;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& log)
{
    log_config(log, "eval", to_json(a));
    require_file(a.model, "checkpoint");
    require_dataset(a.data);
    if (a.split != "all" && a.split != "train" && a.split != "val")
        throw InvalidArgument("--split must be all, train or val");

    auto model = vunet::load_model(a.model);
    const auto ds = data::read_dataset(a.data);
    require_grid_match(*model, ds.grid);
    std::vector<data::DataTuple> tuples;
    if (a.split != "val") tuples = ds.train;
    if (a.split != "train") tuples.insert(tuples.end(), ds.val.begin(), ds.val.end());
    if (tuples.empty()) throw InvalidArgument("the selected split is empty");

    const auto r = vunet::evaluate(*model, tuples);
    log << "eval: " << r.samples << " samples\n";
    out << format_eval_line(r.err_s, r.err_p, r.err_mean) << '\n';
    return exit_ok;
}

int cmd_uq(const UqArgs& a, std::ostream& out, std::ostream& log)
{
    log_config(log, "uq", to_json(a));
    if (a.mode != "baseline" && a.mode != "surrogate" && a.mode != "compare")
        throw InvalidArgument("--mode must be baseline, surrogate or compare");
    require_writable_dir(a.out);
    const bool from_dirs = !a.baseline_dir.empty() || !a.surrogate_dir.empty();
    if (a.mode == "compare" && from_dirs) {
        require_file(a.baseline_dir / "summary.json", "baseline summary");
        require_file(a.surrogate_dir / "summary.json", "surrogate summary");
        const auto r = uq::compare(read_summary(a.baseline_dir), read_summary(a.surrogate_dir));
        uq::write_report_csv(a.out / "report.csv", r);
        std::ofstream(a.out / "report.txt") << uq::format_report(r);
        out << uq::format_report(r);
        return exit_ok;
    }

    require_dataset(a.data);
    if (a.mode != "baseline") require_file(a.model, "checkpoint");
    if (a.members < 1) throw InvalidArgument("--members must be at least 1");
    if (!(a.time > 0.0 && a.time <= 1000.0)) throw InvalidArgument("--time must be in (0, 1000] days");
    if (a.old_wells == a.new_wells) throw InvalidArgument("--old-wells and --new-wells must differ");
    const auto ds = data::read_dataset(a.data);
    wellset(ds, a.old_wells);
    wellset(ds, a.new_wells);

    if (a.mode == "baseline") {
        const auto s = run_baseline(a, ds, log);
        write_summary(a.out, s);
        out << "baseline members=" << s.members << " time_s=" << s.wall_seconds << '\n';
        return exit_ok;
    }
    if (a.mode == "surrogate") {
        const auto s = run_surrogate(a, ds, log);
        write_summary(a.out, s);
        out << "surrogate members=" << s.members << " time_s=" << s.wall_seconds << '\n';
        return exit_ok;
    }
    const auto b = run_baseline(a, ds, log);
    const auto s = run_surrogate(a, ds, log);
    write_summary(a.out / "baseline", b);
    write_summary(a.out / "surrogate", s);
    const auto r = uq::compare(b, s);
    uq::write_report_csv(a.out / "report.csv", r);
    std::ofstream(a.out / "report.txt") << uq::format_report(r);
    out << uq::format_report(r);
    return exit_ok;
}

void write_summary(const fs::path& dir, const uq::EnsembleSummary& s)
{
    require_writable_dir(dir);
    data::write_tensor(dir / "mean_S.ruq", data::field_to_tensor(s.mean.s));
    data::write_tensor(dir / "mean_P.ruq", data::field_to_tensor(s.mean.p));
    if (s.variance) {
        data::write_tensor(dir / "var_S.ruq", data::field_to_tensor(s.variance->s));
        data::write_tensor(dir / "var_P.ruq", data::field_to_tensor(s.variance->p));
    }
    std::ofstream(dir / "summary.json") << summary_json(s).dump(2) << '\n';
}

uq::EnsembleSummary read_summary(const fs::path& dir)
{
    std::ifstream in(dir / "summary.json");
    if (!in) throw FormatError(FormatError::Kind::io, "cannot read " + (dir / "summary.json").string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Kind::truncated, "malformed ensemble summary: " + std::string(e.what()));
    }
    if (j.value("format", "") != "ruq-ensemble") throw FormatError(FormatError::Kind::bad_magic, "not an ensemble summary");
    try {
        uq::EnsembleSummary s;
        s.grid = data::grid_from_json(j.at("grid"));
        s.time = j.at("time").get<double>();
        s.wellset_id = j.at("wellset_id").get<int>();
        s.provenance = j.at("provenance").get<std::string>() == "surrogate" ? uq::Provenance::surrogate
                                                                             : uq::Provenance::baseline;
        s.members = j.at("members").get<std::size_t>();
        s.wall_seconds = j.at("wall_seconds").get<double>();
        auto load = [&](const char* name) { return data::tensor_to_field(data::read_tensor(dir / name), s.grid); };
        s.mean = {load("mean_S.ruq"), load("mean_P.ruq")};
        if (j.at("has_variance").get<bool>()) s.variance = uq::FieldPair{load("var_S.ruq"), load("var_P.ruq")};
        return s;
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Kind::truncated, "malformed ensemble summary: " + std::string(e.what()));
    }
}

} // namespace ruq::cli
