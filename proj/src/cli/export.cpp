#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ruq/cli/commands.hpp"
#include "ruq/data/tensor_io.hpp"

namespace ruq::cli {

Tensor<float> read_field(const fs::path& path)
{
    auto t = data::read_tensor(path);
    if (t.rank() != 2) throw FormatError(FormatError::Kind::degenerate_shape, path.string() + " is not a 2-D field");
    return t;
}

Triptych make_triptych(const Tensor<float>& truth, const Tensor<float>& pred)
{
    if (truth.shape() != pred.shape())
        throw InvalidArgument("triptych: shapes " + shape_string(truth.shape()) + " and " + shape_string(pred.shape()) +
                              " differ");
    Tensor<float> diff = Tensor<float>::zeros(truth.shape());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = pred[k] - truth[k];
    return {truth, pred, std::move(diff)};
}

PanelScale min_max(const std::vector<const Tensor<float>*>& panels)
{
    PanelScale s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto* p : panels)
        for (float v : p->data()) {
            s.min = std::min(s.min, static_cast<double>(v));
            s.max = std::max(s.max, static_cast<double>(v));
        }
    if (s.min > s.max) throw InvalidArgument("min_max: no values");
    return s;
}

std::vector<std::uint8_t> to_gray(const Tensor<float>& t, const PanelScale& s)
{
    std::vector<std::uint8_t> g(t.size(), 0);
    const double range = s.max - s.min;
    if (!(range > 0.0)) return g;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double u = std::clamp((static_cast<double>(t[k]) - s.min) / range, 0.0, 1.0);
        g[k] = static_cast<std::uint8_t>(std::lround(255.0 * u));
    }
    return g;
}

namespace {

void check_panels(const std::vector<const Tensor<float>*>& panels)
{
    if (panels.empty()) throw InvalidArgument("export: nothing to write");
    for (const auto* p : panels)
        if (p->rank() != 2 || p->shape() != panels.front()->shape())
            throw InvalidArgument("export: panels must be 2-D with equal shapes");
}

} // namespace

void write_pgm(const fs::path& path, const std::vector<const Tensor<float>*>& panels,
               const std::vector<PanelScale>& scales)
{
    check_panels(panels);
    if (scales.size() != panels.size()) throw InvalidArgument("write_pgm: one scale per panel");
    const std::size_t rows = panels.front()->dim(0), cols = panels.front()->dim(1);
    std::vector<std::vector<std::uint8_t>> gray;
    for (std::size_t k = 0; k < panels.size(); ++k) gray.push_back(to_gray(*panels[k], scales[k]));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << "P5\n" << cols * panels.size() << ' ' << rows << "\n255\n";
    for (std::size_t r = 0; r < rows; ++r)
        for (const auto& g : gray) out.write(reinterpret_cast<const char*>(g.data() + r * cols), static_cast<std::streamsize>(cols));

    std::ofstream side(path.string() + ".txt");
    char buf[128];
    for (std::size_t k = 0; k < scales.size(); ++k) {
        std::snprintf(buf, sizeof buf, "panel %zu min %.9g max %.9g\n", k, scales[k].min, scales[k].max);
        side << buf;
    }
}

void write_csv(const fs::path& path, const std::vector<const Tensor<float>*>& panels)
{
    check_panels(panels);
    const std::size_t rows = panels.front()->dim(0), cols = panels.front()->dim(1);
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    char buf[32];
    for (std::size_t r = 0; r < rows; ++r) {
        bool first = true;
        for (const auto* p : panels)
            for (std::size_t c = 0; c < cols; ++c) {
                std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>((*p)[r * cols + c]));
                if (!first) out << ',';
                out << buf;
                first = false;
            }
        out << '\n';
    }
}

Tensor<float> read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Kind::io, "cannot read " + path.string());
    std::vector<float> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t n = 0;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            float v = 0.0f;
            const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || end != cell.data() + cell.size())
                throw FormatError(FormatError::Kind::truncated, path.string() + ": bad value '" + cell + "' on row " +
                                                                    std::to_string(rows + 1));
            values.push_back(v);
            ++n;
        }
        if (rows == 0) cols = n;
        if (n != cols) throw FormatError(FormatError::Kind::truncated, path.string() + ": ragged row " + std::to_string(rows + 1));
        ++rows;
    }
    if (rows == 0 || cols == 0) throw FormatError(FormatError::Kind::degenerate_shape, path.string() + " is empty");
    return Tensor<float>({rows, cols}, std::move(values));
}

int cmd_export(const ExportArgs& a, std::ostream& out, std::ostream& log)
{
    log << "ruq export config " << to_json(a).dump() << '\n';
    if (a.out.empty()) throw InvalidArgument("--out is required");

    if (!a.from_csv.empty()) {
        if (a.format != "ruq") throw InvalidArgument("CSV import writes a tensor file; use --format ruq");
        data::write_tensor(a.out, read_csv(a.from_csv));
        out << "wrote " << a.out.string() << '\n';
        return exit_ok;
    }
    if (a.format != "pgm" && a.format != "csv") throw InvalidArgument("unknown format '" + a.format + "' (pgm or csv)");

    std::vector<Tensor<float>> owned;
    std::vector<PanelScale> scales;
    if (a.triptych) {
        if (a.truth.empty() || a.pred.empty()) throw InvalidArgument("--triptych needs --truth and --pred");
        auto t = make_triptych(read_field(a.truth), read_field(a.pred));
        // True and predicted panels share a scale so they can be compared by eye.
        const PanelScale shared = min_max({&t.truth, &t.pred});
        scales = {shared, shared, min_max({&t.diff})};
        owned = {std::move(t.truth), std::move(t.pred), std::move(t.diff)};
    } else {
        if (a.field.empty()) throw InvalidArgument("--field is required");
        owned.push_back(read_field(a.field));
        scales.push_back(min_max({&owned[0]}));
    }
    std::vector<const Tensor<float>*> panels;
    for (const auto& t : owned) panels.push_back(&t);
    if (a.format == "pgm")
        write_pgm(a.out, panels, scales);
    else
        write_csv(a.out, panels);
    out << "wrote " << a.out.string() << '\n';
    return exit_ok;
}

} // namespace ruq::cli
