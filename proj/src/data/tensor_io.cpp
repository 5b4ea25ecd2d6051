#include "ruq/data/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace ruq::data {
namespace {

constexpr std::array<char, 4> magic{'R', 'U', 'Q', '1'};

void put_u32(std::ostream& out, std::uint32_t v)
{
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

bool get_u32(std::istream& in, std::uint32_t& v)
{
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

} // namespace

void write_tensor(std::ostream& out, const Tensor<float>& t)
{
    if (t.rank() == 0 || t.rank() > max_tensor_rank)
        throw InvalidArgument("write_tensor: rank must be in [1, 8], got " + std::to_string(t.rank()));
    out.write(magic.data(), 4);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) {
        if (d > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("write_tensor: extent exceeds u32");
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    std::vector<char> payload(t.size() * 4);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto bits = std::bit_cast<std::uint32_t>(t[k]);
        for (int b = 0; b < 4; ++b) payload[k * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw FormatError(FormatError::Kind::io, "write_tensor: stream write failed");
}

void write_tensor(const std::filesystem::path& path, const Tensor<float>& t)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
    write_tensor(out, t);
}

Tensor<float> read_tensor(std::istream& in)
{
    std::array<char, 4> head{};
    if (!in.read(head.data(), 4) || head != magic) throw FormatError(FormatError::Kind::bad_magic, "bad magic");
    std::uint32_t rank = 0;
    if (!get_u32(in, rank)) throw FormatError(FormatError::Kind::truncated, "truncated header (rank)");
    if (rank == 0) throw FormatError(FormatError::Kind::degenerate_shape, "rank 0 tensor");
    if (rank > max_tensor_rank) throw FormatError(FormatError::Kind::dim_overflow, "rank " + std::to_string(rank) + " too large");

    Shape shape(rank);
    std::size_t count = 1;
    // 2^31 floats (8 GiB) is far beyond any tensor this library writes.
    constexpr std::size_t max_count = std::size_t{1} << 31;
    for (auto& d : shape) {
        std::uint32_t v = 0;
        if (!get_u32(in, v)) throw FormatError(FormatError::Kind::truncated, "truncated header (dims)");
        if (v == 0) throw FormatError(FormatError::Kind::degenerate_shape, "zero extent");
        d = v;
        if (count > max_count / d) throw FormatError(FormatError::Kind::dim_overflow, "element count overflows");
        count *= d;
    }

    std::vector<char> payload(count * 4);
    if (!in.read(payload.data(), static_cast<std::streamsize>(payload.size())))
        throw FormatError(FormatError::Kind::truncated, "truncated payload");
    std::vector<float> data(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[k * 4 + static_cast<std::size_t>(b)])) << (8 * b);
        data[k] = std::bit_cast<float>(bits);
    }
    return Tensor<float>(std::move(shape), std::move(data));
}

Tensor<float> read_tensor(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
    try {
        return read_tensor(in);
    } catch (const FormatError& e) {
        throw FormatError(e.kind(), path.string() + ": " + e.what());
    }
}

Tensor<float> field_to_tensor(const ScalarField& f)
{
    const Grid& g = f.grid();
    std::vector<float> v(f.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<float>(f[k]);
    return Tensor<float>({static_cast<std::size_t>(g.ny), static_cast<std::size_t>(g.nx)}, std::move(v));
}

ScalarField tensor_to_field(const Tensor<float>& t, const Grid& grid)
{
    if (t.size() != grid.cells() || t.rank() < 2 || t.dim(t.rank() - 1) != static_cast<std::size_t>(grid.nx) ||
        t.dim(t.rank() - 2) != static_cast<std::size_t>(grid.ny))
        throw InvalidArgument("tensor_to_field: tensor " + shape_string(t.shape()) + " does not match a " +
                              std::to_string(grid.ny) + "x" + std::to_string(grid.nx) + " grid");
    std::vector<double> v(t.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = t[k];
    return ScalarField(grid, std::move(v));
}

ScalarField round_to_float(const ScalarField& f)
{
    std::vector<double> v(f.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<float>(f[k]);
    return ScalarField(f.grid(), std::move(v));
}

} // namespace ruq::data
