#include "ruq/nn/checkpoint.hpp"

#include <array>
#include <fstream>

#include "ruq/data/tensor_io.hpp"

namespace ruq::nn {

const Tensor<float>& Checkpoint::at(const std::string& name) const
{
    for (const auto& [n, t] : entries)
        if (n == name) return t;
    throw FormatError(FormatError::Kind::io, "checkpoint has no entry '" + name + "'");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    nlohmann::json header = ckpt.header;
    header["entries"] = nlohmann::json::array();
    for (const auto& e : ckpt.entries) header["entries"].push_back(e.first);
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
    out.write("RUQC", 4);
    const auto n = static_cast<std::uint32_t>(text.size());
    const std::array<char, 4> len{static_cast<char>(n & 0xff), static_cast<char>((n >> 8) & 0xff),
                                  static_cast<char>((n >> 16) & 0xff), static_cast<char>((n >> 24) & 0xff)};
    out.write(len.data(), 4);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& e : ckpt.entries) data::write_tensor(out, e.second);
    if (!out) throw FormatError(FormatError::Kind::io, "failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), 4) || std::string(magic.data(), 4) != "RUQC")
        throw FormatError(FormatError::Kind::bad_magic, path.string() + ": not a checkpoint");
    std::array<unsigned char, 4> len{};
    if (!in.read(reinterpret_cast<char*>(len.data()), 4))
        throw FormatError(FormatError::Kind::truncated, path.string() + ": truncated header");
    const std::uint32_t n = len[0] | (len[1] << 8) | (len[2] << 16) | (static_cast<std::uint32_t>(len[3]) << 24);
    std::string text(n, '\0');
    if (!in.read(text.data(), n)) throw FormatError(FormatError::Kind::truncated, path.string() + ": truncated header");

    Checkpoint ckpt;
    try {
        ckpt.header = nlohmann::json::parse(text);
        for (const auto& name : ckpt.header.at("entries")) {
            try {
                ckpt.entries.emplace_back(name.get<std::string>(), data::read_tensor(in));
            } catch (const FormatError& e) {
                throw FormatError(e.kind(), path.string() + ": entry " + name.get<std::string>() + ": " + e.what());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatError::Kind::io, path.string() + ": bad header: " + e.what());
    }
    return ckpt;
}

} // namespace ruq::nn
