#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cmarl/numerics/param_set.hpp"

namespace cmarl::numerics {

// Sealed file layout (all integers little-endian):
//   magic "CMCK" | u32 kind | u32 version | u64 payload length | sha256(payload) | payload
// The digest is verified before any byte of the payload is interpreted.
enum class FileKind : std::uint32_t {
    params = 1,
    run_state = 2,
    central_state = 3,
};

inline constexpr std::uint32_t checkpoint_version = 1;

void write_sealed(const std::filesystem::path& path, FileKind kind, std::uint32_t version,
                  std::span<const std::uint8_t> payload);

// Throws IntegrityError on damage and VersionMismatch if `version` differs.
std::vector<std::uint8_t> read_sealed(const std::filesystem::path& path, FileKind kind, std::uint32_t version);

void save_params(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_params(const std::filesystem::path& path);

}  // namespace cmarl::numerics
