#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "ruq/cli/commands.hpp"
#include "ruq/data/dataset.hpp"
#include "ruq/data/tensor_io.hpp"
#include "ruq/vunet/train.hpp"

#include <json.hpp>

using namespace ruq;
using namespace ruq::cli;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("ruq_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

template <class Args, class Fn>
int run(Fn fn, const Args& a, std::string* out_text = nullptr)
{
    std::ostringstream out, log;
    const int code = guarded([&] { return fn(a, out, log); }, log);
    if (out_text) *out_text = out.str();
    return code;
}

DatagenArgs small_datagen(const fs::path& out, int n_perm = 2, int n_wells = 2, std::uint64_t seed = 5)
{
    DatagenArgs a;
    a.grid = 16;
    a.n_perm = n_perm;
    a.n_wells = n_wells;
    a.seed = seed;
    a.jobs = 1;
    a.out = out;
    return a;
}

Tensor<float> ramp(std::size_t rows, std::size_t cols, float scale)
{
    auto t = Tensor<float>::zeros({rows, cols});
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = scale * static_cast<float>(k % 7) - 0.37f * static_cast<float>(k / 5);
    return t;
}

} // namespace

TEST_CASE("datagen")
{
    TempDir tmp;
    SUBCASE("tuple count, manifest and determinism")
    {
        const auto a = small_datagen(tmp.path / "a", 4, 4, 7);
        std::string text;
        REQUIRE(run(cmd_datagen, a, &text) == exit_ok);
        nlohmann::json m;
        std::ifstream(tmp.path / "a" / "manifest.json") >> m;
        CHECK(m["tuples"].size() + m["removed"].get<std::size_t>() == 4u * 4u * 4u);
        CHECK(text.find("tuples=") == 0);

        auto b = a;
        b.out = tmp.path / "b";
        b.jobs = 2;
        REQUIRE(run(cmd_datagen, b) == exit_ok);
        std::size_t files = 0;
        for (const auto& e : fs::recursive_directory_iterator(tmp.path / "a")) {
            if (!e.is_regular_file()) continue;
            ++files;
            CHECK(slurp(e.path()) == slurp(tmp.path / "b" / fs::relative(e.path(), tmp.path / "a")));
        }
        CHECK(files > 10);
    }
    SUBCASE("usage errors")
    {
        CHECK(run(cmd_datagen, small_datagen(tmp.path / "c", 2, 1)) == exit_usage);
        auto bad_grid = small_datagen(tmp.path / "c");
        bad_grid.grid = 1;
        CHECK(run(cmd_datagen, bad_grid) == exit_usage);
        std::ofstream(tmp.path / "file") << "x";
        CHECK(run(cmd_datagen, small_datagen(tmp.path / "file" / "sub")) == exit_usage);
        CHECK(!fs::exists(tmp.path / "c" / "manifest.json"));
    }
}

TEST_CASE("train and eval")
{
    TempDir tmp;
    REQUIRE(run(cmd_datagen, small_datagen(tmp.path / "d")) == exit_ok);

    SUBCASE("defaults")
    {
        const TrainArgs t;
        CHECK(t.lr == 2e-4);
        CHECK(t.epochs == 10);
        CHECK(t.variant == "normal");
    }
    SUBCASE("zero epochs leaves the initialization")
    {
        TrainArgs t;
        t.data = tmp.path / "d";
        t.out = tmp.path / "m0.ckpt";
        t.epochs = 0;
        t.seed = 9;
        REQUIRE(run(cmd_train, t) == exit_ok);
        auto loaded = vunet::load_model(t.out);
        vunet::VUNetConfig c;
        c.n = 16;
        c.base_channels = vunet::default_base_channels(16);
        CHECK(loaded->config() == c);
        vunet::Model<float> fresh(c, 9);
        auto a = loaded->param_sets();
        auto b = fresh.param_sets();
        for (std::size_t s = 0; s < a.size(); ++s)
            for (std::size_t k = 0; k < a[s]->params().size(); ++k)
                CHECK(a[s]->params()[k].value == b[s]->params()[k].value);
        CHECK(fs::exists(tmp.path / "m0.ckpt.history.csv"));
    }
    SUBCASE("reversed variant and ablation flags")
    {
        TrainArgs t;
        t.data = tmp.path / "d";
        t.out = tmp.path / "r.ckpt";
        t.epochs = 0;
        t.variant = "reversed";
        t.no_lowres_res = true;
        REQUIRE(run(cmd_train, t) == exit_ok);
        const auto m = vunet::load_model(t.out);
        CHECK(m->config().variant == vunet::Variant::reversed);
        CHECK(m->config().no_lowres_res);
        t.variant = "sideways";
        CHECK(run(cmd_train, t) == exit_usage);
    }
    SUBCASE("divergence is a numerical failure")
    {
        TrainArgs t;
        t.data = tmp.path / "d";
        t.out = tmp.path / "x.ckpt";
        t.epochs = 3;
        t.lr = 1e30;
        CHECK(run(cmd_train, t) == exit_numerical);
    }
    SUBCASE("missing dataset")
    {
        TrainArgs t;
        t.data = tmp.path / "nothing";
        t.out = tmp.path / "x.ckpt";
        CHECK(run(cmd_train, t) == exit_usage);
    }
    SUBCASE("eval output, self-consistency and grid mismatch")
    {
        TrainArgs t;
        t.data = tmp.path / "d";
        t.out = tmp.path / "m.ckpt";
        t.epochs = 1;
        t.batch = 4;
        REQUIRE(run(cmd_train, t) == exit_ok);

        EvalArgs e;
        e.model = t.out;
        e.data = t.data;
        std::string line;
        REQUIRE(run(cmd_eval, e, &line) == exit_ok);
        const std::regex golden(R"(err_S=[-+0-9.eE]+ err_P=[-+0-9.eE]+ err_mean=[-+0-9.eE]+\n)");
        CHECK(std::regex_match(line, golden));
        CHECK(format_eval_line(0.5, 0.25, 0.375) == "err_S=0.5 err_P=0.25 err_mean=0.375");

        // Keep tuples observed under well set 0 so no target file doubles as an observation,
        // then replace every target with the model's own prediction.
        auto ds = data::read_dataset(t.data);
        auto keep = [](std::vector<data::DataTuple>& v) {
            std::erase_if(v, [](const data::DataTuple& x) { return x.well_id != 0; });
        };
        keep(ds.train);
        keep(ds.val);
        auto model = vunet::load_model(t.out);
        for (auto* split : {&ds.train, &ds.val}) {
            const auto pred = vunet::predict(*model, *split);
            for (std::size_t k = 0; k < split->size(); ++k) {
                (*split)[k].s2 = pred[k].s;
                (*split)[k].p2 = pred[k].p;
            }
        }
        data::write_dataset(tmp.path / "self", ds);
        e.data = tmp.path / "self";
        REQUIRE(run(cmd_eval, e, &line) == exit_ok);
        // Denormalized pressure is stored as f32, so only rounding remains.
        double es = 1.0, ep = 1.0, em = 1.0;
        REQUIRE(std::sscanf(line.c_str(), "err_S=%lf err_P=%lf err_mean=%lf", &es, &ep, &em) == 3);
        CHECK(es <= 1e-12);
        CHECK(ep <= 1e-12);
        CHECK(em <= 1e-12);

        auto other = small_datagen(tmp.path / "d8");
        other.grid = 8;
        REQUIRE(run(cmd_datagen, other) == exit_ok);
        e.data = tmp.path / "d8";
        CHECK(run(cmd_eval, e) == exit_usage);
        e.data = t.data;
        e.split = "test";
        CHECK(run(cmd_eval, e) == exit_usage);
    }
}

TEST_CASE("uq command")
{
    TempDir tmp;
    REQUIRE(run(cmd_datagen, small_datagen(tmp.path / "d", 2, 3)) == exit_ok);
    TrainArgs t;
    t.data = tmp.path / "d";
    t.out = tmp.path / "m.ckpt";
    t.epochs = 1;
    t.batch = 4;
    REQUIRE(run(cmd_train, t) == exit_ok);

    UqArgs u;
    u.model = t.out;
    u.data = t.data;
    u.members = 8;
    u.jobs = 1;

    u.mode = "baseline";
    u.out = tmp.path / "b";
    REQUIRE(run(cmd_uq, u) == exit_ok);
    u.mode = "surrogate";
    u.out = tmp.path / "s";
    REQUIRE(run(cmd_uq, u) == exit_ok);

    const auto b = read_summary(tmp.path / "b");
    const auto s = read_summary(tmp.path / "s");
    CHECK(b.members == 8);
    CHECK(s.provenance == uq::Provenance::surrogate);
    CHECK(b.variance.has_value());
    MESSAGE("baseline " << b.wall_seconds << " s, surrogate " << s.wall_seconds << " s");
    CHECK(b.wall_seconds > s.wall_seconds);

    UqArgs c;
    c.mode = "compare";
    c.baseline_dir = tmp.path / "b";
    c.surrogate_dir = tmp.path / "b";
    c.out = tmp.path / "self";
    REQUIRE(run(cmd_uq, c) == exit_ok);
    std::ifstream in(tmp.path / "self" / "report.csv");
    std::string header, base, surr;
    std::getline(in, header);
    std::getline(in, base);
    std::getline(in, surr);
    CHECK(header.rfind("method,time_s,err_P,err_S", 0) == 0);
    CHECK(surr.find(",0,0,1,1") != std::string::npos);

    c.surrogate_dir = tmp.path / "s";
    c.out = tmp.path / "bs";
    REQUIRE(run(cmd_uq, c) == exit_ok);
    CHECK(fs::exists(tmp.path / "bs" / "report.txt"));

    SUBCASE("missing inputs")
    {
        auto bad = u;
        bad.model.clear();
        CHECK(run(cmd_uq, bad) == exit_usage);
        bad = u;
        bad.data = tmp.path / "none";
        CHECK(run(cmd_uq, bad) == exit_usage);
        bad = u;
        bad.mode = "both";
        CHECK(run(cmd_uq, bad) == exit_usage);
        bad = u;
        bad.new_wells = 7;
        CHECK(run(cmd_uq, bad) == exit_usage);
        auto cmp = c;
        cmp.surrogate_dir = tmp.path / "none";
        CHECK(run(cmd_uq, cmp) == exit_usage);
    }
}

TEST_CASE("export")
{
    TempDir tmp;
    SUBCASE("constant field gives a flat image")
    {
        data::write_tensor(tmp.path / "c.ruq", Tensor<float>::filled({6, 9}, 0.4f));
        ExportArgs a;
        a.field = tmp.path / "c.ruq";
        a.out = tmp.path / "c.pgm";
        REQUIRE(run(cmd_export, a) == exit_ok);
        const std::string img = slurp(a.out);
        const std::string header = "P5\n9 6\n255\n";
        REQUIRE(img.size() == header.size() + 54);
        CHECK(img.substr(0, header.size()) == header);
        for (std::size_t k = header.size(); k < img.size(); ++k) CHECK(img[k] == img[header.size()]);
        CHECK(slurp(tmp.path / "c.pgm.txt") == "panel 0 min 0.400000006 max 0.400000006\n");
    }
    SUBCASE("gray levels span the range")
    {
        const auto t = ramp(4, 5, 1.0f);
        const auto g = to_gray(t, min_max({&t}));
        CHECK(*std::min_element(g.begin(), g.end()) == 0);
        CHECK(*std::max_element(g.begin(), g.end()) == 255);
    }
    SUBCASE("CSV roundtrip")
    {
        const auto t = ramp(7, 11, 0.123456f);
        data::write_tensor(tmp.path / "f.ruq", t);
        ExportArgs a;
        a.format = "csv";
        a.field = tmp.path / "f.ruq";
        a.out = tmp.path / "f.csv";
        REQUIRE(run(cmd_export, a) == exit_ok);
        ExportArgs back;
        back.format = "ruq";
        back.from_csv = a.out;
        back.out = tmp.path / "g.ruq";
        REQUIRE(run(cmd_export, back) == exit_ok);
        const auto r = data::read_tensor(back.out);
        REQUIRE(r.shape() == t.shape());
        for (std::size_t k = 0; k < t.size(); ++k) CHECK(std::abs(r[k] - t[k]) <= 1e-6);

        std::ofstream(tmp.path / "ragged.csv") << "1,2,3\n4,5\n";
        CHECK_THROWS_AS(read_csv(tmp.path / "ragged.csv"), FormatError);
        std::ofstream(tmp.path / "junk.csv") << "1,x\n";
        CHECK_THROWS_AS(read_csv(tmp.path / "junk.csv"), FormatError);
    }
    SUBCASE("triptych difference panel")
    {
        const auto truth = ramp(5, 6, 0.5f), pred = ramp(5, 6, 0.75f);
        const auto tri = make_triptych(truth, pred);
        for (std::size_t k = 0; k < truth.size(); ++k) CHECK(tri.diff[k] == pred[k] - truth[k]);
        CHECK_THROWS_AS(make_triptych(truth, ramp(6, 5, 1.0f)), InvalidArgument);

        data::write_tensor(tmp.path / "t.ruq", truth);
        data::write_tensor(tmp.path / "p.ruq", pred);
        ExportArgs a;
        a.triptych = true;
        a.truth = tmp.path / "t.ruq";
        a.pred = tmp.path / "p.ruq";
        a.format = "csv";
        a.out = tmp.path / "tri.csv";
        REQUIRE(run(cmd_export, a) == exit_ok);
        const auto wide = read_csv(a.out);
        REQUIRE(wide.shape() == Shape{5, 18});
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < 6; ++c) {
                CHECK(wide[r * 18 + c] == truth[r * 6 + c]);
                CHECK(wide[r * 18 + 6 + c] == pred[r * 6 + c]);
                CHECK(wide[r * 18 + 12 + c] == tri.diff[r * 6 + c]);
            }
        a.format = "pgm";
        a.out = tmp.path / "tri.pgm";
        REQUIRE(run(cmd_export, a) == exit_ok);
        CHECK(slurp(a.out).rfind("P5\n18 5\n255\n", 0) == 0);
    }
    SUBCASE("usage errors")
    {
        data::write_tensor(tmp.path / "f.ruq", ramp(3, 3, 1.0f));
        ExportArgs a;
        a.field = tmp.path / "f.ruq";
        a.out = tmp.path / "f.jpg";
        a.format = "jpg";
        CHECK(run(cmd_export, a) == exit_usage);
        a.format = "pgm";
        a.field = tmp.path / "missing.ruq";
        CHECK(run(cmd_export, a) == exit_usage);
        data::write_tensor(tmp.path / "v.ruq", Tensor<float>::zeros({2, 3, 4}));
        a.field = tmp.path / "v.ruq";
        CHECK(run(cmd_export, a) == exit_usage);
    }
}
