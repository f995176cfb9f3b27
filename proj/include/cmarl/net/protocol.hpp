#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cmarl/numerics/param_set.hpp"
#include "cmarl/numerics/serialize.hpp"
#include "cmarl/replay/trajectory.hpp"

namespace cmarl::net {

// Frame: u32 body length | body. Body: u8 message type | u16 protocol version | payload.
// Integers are little-endian; see docs/formats.md for every payload.
inline constexpr std::uint16_t protocol_version = 1;
inline constexpr std::uint32_t max_frame_bytes = 256u << 20;

enum class MessageType : std::uint8_t {
    hello = 1,
    traj_batch = 2,
    ack = 3,
    weights = 4,
    head_upload = 5,
    stats = 6,
};

struct Hello {
    std::uint32_t container_id = 0;
    std::uint32_t incarnation = 0;
};

// batch_seq is unique per container across restarts: the incarnation sits in the high 16 bits.
struct TrajBatch {
    std::uint32_t container_id = 0;
    std::uint64_t batch_seq = 0;
    std::vector<replay::Trajectory> trajectories;
};

struct Ack {
    std::uint32_t container_id = 0;
    std::uint64_t batch_seq = 0;
};

struct HeadEntry {
    std::uint32_t container_id = 0;
    std::uint64_t version = 0;
    numerics::ParamSet head;
};

struct Weights {
    std::uint64_t version = 0;
    numerics::ParamSet shared;
    numerics::ParamSet central_head;
    std::vector<HeadEntry> heads;
};

struct HeadUpload {
    std::uint32_t container_id = 0;
    std::uint64_t version = 0;
    numerics::ParamSet head;
};

struct Stats {
    std::uint32_t container_id = 0;
    std::string json;
};

using Message = std::variant<Hello, TrajBatch, Ack, Weights, HeadUpload, Stats>;

MessageType type_of(const Message& m) noexcept;
const char* type_name(MessageType t) noexcept;

std::uint64_t make_batch_seq(std::uint32_t incarnation, std::uint64_t counter) noexcept;

// Frame including the length prefix.
std::vector<std::uint8_t> encode(const Message& m);
// Body without the length prefix. Malformed input throws IntegrityError.
Message decode(std::span<const std::uint8_t> body);

using replay::read_trajectory;
using replay::write_trajectory;

}  // namespace cmarl::net
