#include "ruq/sim/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ruq/core/error.hpp"
#include "ruq/simd/kernels.hpp"

namespace ruq::sim {

namespace {

double harmonic(double a, double b) { return (a + b) > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

} // namespace

double LinearSystem::at(std::size_t r, std::size_t c) const noexcept
{
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        if (cols[k] == c) return values[k];
    return 0.0;
}

void LinearSystem::multiply(const double* x, double* y) const noexcept
{
    const std::size_t n = rows();
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += values[k] * x[cols[k]];
        y[r] = s;
    }
}

FaceField transmissibilities(const ScalarField& perm)
{
    const Grid& g = perm.grid();
    std::vector<double> tx((static_cast<std::size_t>(g.nx) + 1) * g.ny, 0.0);
    std::vector<double> ty(static_cast<std::size_t>(g.nx) * (g.ny + 1), 0.0);
    const double gx = g.dy * g.depth / g.dx;
    const double gy = g.dx * g.depth / g.dy;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) tx[FaceField::x_index(g, i, j)] = harmonic(perm.at(i - 1, j), perm.at(i, j)) * gx;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) ty[FaceField::y_index(g, i, j)] = harmonic(perm.at(i, j - 1), perm.at(i, j)) * gy;
    return FaceField(g, std::move(tx), std::move(ty));
}

FaceField transmissibilities(const geostat::PermField& perm) { return transmissibilities(perm.field); }

LinearSystem assemble_pressure(const FaceField& trans, const WellSet& wells, const ScalarField& perm,
                               const AssembleOptions& options)
{
    const Grid& g = trans.grid();
    if (!(perm.grid() == g)) throw InvalidArgument("assemble_pressure: permeability grid mismatch");
    wells.validate(g);

    const std::size_t n = g.cells();
    std::vector<double> diag(n, 0.0);
    std::vector<double> rhs(n, 0.0);
    for (const auto& w : wells.injectors) rhs[g.index(w.i, w.j)] += volume_rate(g, w.rate);
    for (const auto& w : wells.producers) {
        const std::size_t c = g.index(w.i, w.j);
        const double coupling = w.well_index * perm[c];
        diag[c] += coupling;
        rhs[c] += coupling * w.bhp;
    }

    LinearSystem sys;
    sys.grid = g;
    sys.row_ptr.reserve(n + 1);
    sys.row_ptr.push_back(0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t c = g.index(i, j);
            // Neighbours in increasing column order: (i, j-1), (i-1, j), (i+1, j), (i, j+1).
            const double ts = trans.y_face(i, j);
            const double tw = trans.x_face(i, j);
            const double te = trans.x_face(i + 1, j);
            const double tn = trans.y_face(i, j + 1);
            double d = diag[c] + ts + tw + te + tn;
            auto push = [&](std::size_t col, double v) {
                sys.cols.push_back(col);
                sys.values.push_back(v);
            };
            if (j > 0) push(g.index(i, j - 1), -ts);
            if (i > 0) push(g.index(i - 1, j), -tw);
            push(c, d);
            if (i + 1 < g.nx) push(g.index(i + 1, j), -te);
            if (j + 1 < g.ny) push(g.index(i, j + 1), -tn);
            sys.row_ptr.push_back(sys.cols.size());
        }
    }
    sys.rhs = std::move(rhs);

    bool injecting = false;
    for (const auto& w : wells.injectors) injecting = injecting || w.rate > 0.0;
    if (wells.producers.empty()) {
        if (options.auto_pin)
            sys.pin = Pin{0, options.pin_pressure};
        else if (injecting)
            throw InvalidArgument("assemble_pressure: injection without producer or pinned cell is singular");
    }
    return sys;
}

namespace {

/// Copy of the system with the pinned row/column eliminated (kept symmetric).
LinearSystem eliminate_pin(const LinearSystem& sys)
{
    LinearSystem out = sys;
    const Pin pin = *sys.pin;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t k = out.row_ptr[r]; k < out.row_ptr[r + 1]; ++k) {
            if (r == pin.cell) {
                out.values[k] = (out.cols[k] == r) ? 1.0 : 0.0;
            } else if (out.cols[k] == pin.cell) {
                out.rhs[r] -= out.values[k] * pin.value;
                out.values[k] = 0.0;
            }
        }
    }
    out.rhs[pin.cell] = pin.value;
    out.pin.reset();
    return out;
}

} // namespace

ScalarField solve_pressure(const LinearSystem& input, const SolveOptions& options, SolveStats* stats)
{
    const LinearSystem& sys = input.pin ? eliminate_pin(input) : input;
    const std::size_t n = sys.rows();
    const auto& k = simd::active();

    std::vector<double> x(n, options.initial_guess);
    const double bnorm = std::sqrt(k.dot_f64(sys.rhs.data(), sys.rhs.data(), n));
    if (bnorm == 0.0) {
        if (stats) *stats = {};
        return ScalarField(sys.grid, std::vector<double>(n, 0.0));
    }

    std::vector<double> inv_diag(n, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double d = sys.at(r, r);
        if (d > 0.0) inv_diag[r] = 1.0 / d;
    }

    std::vector<double> r(n), z(n), p(n), ap(n);
    sys.multiply(x.data(), ap.data());
    for (std::size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - ap[i];
    double rel = std::sqrt(k.dot_f64(r.data(), r.data(), n)) / bnorm;

    const int max_it = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * n);
    int it = 0;
    // Restart from the current iterate whenever the recurrence residual claims
    // convergence but the true residual does not (drift on ill-conditioned systems).
    while (rel > options.tolerance && it < max_it) {
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = k.dot_f64(r.data(), z.data(), n);
        while (it < max_it) {
            sys.multiply(p.data(), ap.data());
            const double pap = k.dot_f64(p.data(), ap.data(), n);
            if (!(pap > 0.0)) break;
            const double alpha = rz / pap;
            k.axpy_f64(alpha, p.data(), x.data(), n);
            k.axpy_f64(-alpha, ap.data(), r.data(), n);
            ++it;
            if (std::sqrt(k.dot_f64(r.data(), r.data(), n)) / bnorm <= options.tolerance) break;
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            const double rz_next = k.dot_f64(r.data(), z.data(), n);
            k.xpby_f64(z.data(), rz_next / rz, p.data(), n);
            rz = rz_next;
        }
        sys.multiply(x.data(), ap.data());
        for (std::size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - ap[i];
        const double true_rel = std::sqrt(k.dot_f64(r.data(), r.data(), n)) / bnorm;
        if (!(true_rel < rel) && true_rel > options.tolerance) {
            rel = true_rel;
            break; // stagnated
        }
        rel = true_rel;
    }
    if (stats) *stats = {it, rel};
    if (!(rel <= options.tolerance)) {
        std::ostringstream os;
        os << "pressure solve did not converge: relative residual " << rel << " after " << it << " iterations";
        throw NumericalError(os.str());
    }
    return ScalarField(sys.grid, std::move(x));
}

FaceField darcy_fluxes(const ScalarField& p, const FaceField& trans)
{
    const Grid& g = trans.grid();
    if (!(p.grid() == g)) throw InvalidArgument("darcy_fluxes: grid mismatch");
    std::vector<double> fx(trans.x_faces().size(), 0.0);
    std::vector<double> fy(trans.y_faces().size(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            fx[FaceField::x_index(g, i, j)] = trans.x_face(i, j) * (p.at(i - 1, j) - p.at(i, j));
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            fy[FaceField::y_index(g, i, j)] = trans.y_face(i, j) * (p.at(i, j - 1) - p.at(i, j));
    return FaceField(g, std::move(fx), std::move(fy));
}

} // namespace ruq::sim
