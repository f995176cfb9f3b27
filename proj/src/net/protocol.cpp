#include "cmarl/net/protocol.hpp"

#include "cmarl/common/error.hpp"

namespace cmarl::net {

using numerics::ByteReader;
using numerics::ByteWriter;

namespace {

constexpr std::uint32_t max_count = 1u << 26;

std::uint32_t read_count(ByteReader& r, const char* what)
{
    const std::uint32_t n = r.u32();
    if (n > max_count || n > r.remaining()) {
        throw IntegrityError(std::string("implausible ") + what + " count " + std::to_string(n));
    }
    return n;
}

struct Encoder {
    ByteWriter& w;

    void operator()(const Hello& m) const
    {
        w.u32(m.container_id);
        w.u32(m.incarnation);
    }
    void operator()(const TrajBatch& m) const
    {
        w.u32(m.container_id);
        w.u64(m.batch_seq);
        w.u32(static_cast<std::uint32_t>(m.trajectories.size()));
        for (const auto& t : m.trajectories) {
            write_trajectory(w, t);
        }
    }
    void operator()(const Ack& m) const
    {
        w.u32(m.container_id);
        w.u64(m.batch_seq);
    }
    void operator()(const Weights& m) const
    {
        w.u64(m.version);
        numerics::write_params(w, m.shared);
        numerics::write_params(w, m.central_head);
        w.u32(static_cast<std::uint32_t>(m.heads.size()));
        for (const auto& h : m.heads) {
            w.u32(h.container_id);
            w.u64(h.version);
            numerics::write_params(w, h.head);
        }
    }
    void operator()(const HeadUpload& m) const
    {
        w.u32(m.container_id);
        w.u64(m.version);
        numerics::write_params(w, m.head);
    }
    void operator()(const Stats& m) const
    {
        w.u32(m.container_id);
        w.str(m.json);
    }
};

}  // namespace

MessageType type_of(const Message& m) noexcept
{
    return static_cast<MessageType>(m.index() + 1);
}

const char* type_name(MessageType t) noexcept
{
    switch (t) {
    case MessageType::hello: return "HELLO";
    case MessageType::traj_batch: return "TRAJ_BATCH";
    case MessageType::ack: return "ACK";
    case MessageType::weights: return "WEIGHTS";
    case MessageType::head_upload: return "HEAD_UPLOAD";
    case MessageType::stats: return "STATS";
    }
    return "UNKNOWN";
}

std::uint64_t make_batch_seq(std::uint32_t incarnation, std::uint64_t counter) noexcept
{
    return (static_cast<std::uint64_t>(incarnation & 0xffffu) << 48) | (counter & ((std::uint64_t{1} << 48) - 1));
}

std::vector<std::uint8_t> encode(const Message& m)
{
    ByteWriter body;
    body.u8(static_cast<std::uint8_t>(type_of(m)));
    body.u16(protocol_version);
    std::visit(Encoder{body}, m);
    ByteWriter frame;
    frame.u32(static_cast<std::uint32_t>(body.size()));
    frame.bytes(body.buffer());
    return frame.take();
}

Message decode(std::span<const std::uint8_t> data)
{
    ByteReader r{data};
    const auto type = static_cast<MessageType>(r.u8());
    const std::uint16_t version = r.u16();
    if (version != protocol_version) {
        throw IntegrityError("protocol version " + std::to_string(version) + ", expected " +
                             std::to_string(protocol_version));
    }
    Message out;
    switch (type) {
    case MessageType::hello: {
        Hello m;
        m.container_id = r.u32();
        m.incarnation = r.u32();
        out = m;
        break;
    }
    case MessageType::traj_batch: {
        TrajBatch m;
        m.container_id = r.u32();
        m.batch_seq = r.u64();
        const std::uint32_t n = read_count(r, "trajectory");
        for (std::uint32_t k = 0; k < n; ++k) {
            m.trajectories.push_back(read_trajectory(r));
        }
        out = std::move(m);
        break;
    }
    case MessageType::ack: {
        Ack m;
        m.container_id = r.u32();
        m.batch_seq = r.u64();
        out = m;
        break;
    }
    case MessageType::weights: {
        Weights m;
        m.version = r.u64();
        m.shared = numerics::read_params(r);
        m.central_head = numerics::read_params(r);
        const std::uint32_t n = read_count(r, "head");
        for (std::uint32_t k = 0; k < n; ++k) {
            HeadEntry h;
            h.container_id = r.u32();
            h.version = r.u64();
            h.head = numerics::read_params(r);
            m.heads.push_back(std::move(h));
        }
        out = std::move(m);
        break;
    }
    case MessageType::head_upload: {
        HeadUpload m;
        m.container_id = r.u32();
        m.version = r.u64();
        m.head = numerics::read_params(r);
        out = std::move(m);
        break;
    }
    case MessageType::stats: {
        Stats m;
        m.container_id = r.u32();
        m.json = r.str();
        out = std::move(m);
        break;
    }
    default:
        throw IntegrityError("unknown message type " + std::to_string(static_cast<int>(type)));
    }
    if (!r.done()) {
        throw IntegrityError(std::string("trailing bytes after ") + type_name(type));
    }
    return out;
}

}  // namespace cmarl::net
