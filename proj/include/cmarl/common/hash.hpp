#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace cmarl {

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

// Object id git would assign to a blob with this content: sha1("blob <len>\0" + content).
std::string git_blob_hash(std::string_view content);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace cmarl
