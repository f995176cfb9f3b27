#include "cmarl/numerics/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "cmarl/common/error.hpp"
#include "cmarl/common/hash.hpp"
#include "cmarl/numerics/serialize.hpp"

namespace cmarl::numerics {

namespace {
constexpr std::uint8_t magic[4] = {'C', 'M', 'C', 'K'};
constexpr std::size_t header_size = 4 + 4 + 4 + 8 + 32;
}  // namespace

void write_sealed(const std::filesystem::path& path, FileKind kind, std::uint32_t version,
                  std::span<const std::uint8_t> payload)
{
    ByteWriter w;
    w.bytes(magic);
    w.u32(static_cast<std::uint32_t>(kind));
    w.u32(version);
    w.u64(payload.size());
    w.bytes(sha256(payload));
    w.bytes(payload);

    // Write-then-rename so readers never observe a half-written file.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ConfigError("cannot write " + tmp.string());
        }
        out.write(reinterpret_cast<const char*>(w.buffer().data()), static_cast<std::streamsize>(w.size()));
        if (!out) {
            throw ConfigError("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::uint8_t> read_sealed(const std::filesystem::path& path, FileKind kind, std::uint32_t version)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() < header_size || !std::equal(std::begin(magic), std::end(magic), raw.begin())) {
        throw IntegrityError(path.string() + ": not a checkpoint file");
    }
    ByteReader r{raw};
    r.bytes(4);
    const auto found_kind = r.u32();
    const auto found_version = r.u32();
    const auto length = r.u64();
    const auto stored = r.bytes(32);
    if (found_kind != static_cast<std::uint32_t>(kind)) {
        throw IntegrityError(path.string() + ": unexpected file kind " + std::to_string(found_kind));
    }
    if (length != r.remaining()) {
        throw IntegrityError(path.string() + ": payload length " + std::to_string(length) + " but " +
                             std::to_string(r.remaining()) + " bytes present");
    }
    std::vector<std::uint8_t> payload(raw.begin() + header_size, raw.end());
    const auto actual = sha256(payload);
    if (!std::equal(actual.begin(), actual.end(), stored.begin())) {
        throw IntegrityError(path.string() + ": checksum mismatch");
    }
    if (found_version != version) {
        throw VersionMismatch(version, found_version);
    }
    return payload;
}

void save_params(const std::filesystem::path& path, const ParamSet& params)
{
    ByteWriter w;
    write_params(w, params);
    write_sealed(path, FileKind::params, checkpoint_version, w.buffer());
}

ParamSet load_params(const std::filesystem::path& path)
{
    const auto payload = read_sealed(path, FileKind::params, checkpoint_version);
    ByteReader r{payload};
    ParamSet p = read_params(r);
    if (!r.done()) {
        throw IntegrityError(path.string() + ": trailing bytes after parameter records");
    }
    return p;
}

}  // namespace cmarl::numerics
