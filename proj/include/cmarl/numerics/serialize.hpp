#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmarl/numerics/param_set.hpp"

namespace cmarl::numerics {

// Little-endian byte encoder shared by checkpoints and the wire protocol.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v);
    void str(std::string_view s);  // u32 length + bytes
    void bytes(std::span<const std::uint8_t> b);
    void f64s(std::span<const double> v);  // raw, no length prefix

    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
    std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }
    std::size_t size() const noexcept { return buf_.size(); }

private:
    std::vector<std::uint8_t> buf_;
};

// Bounds-checked decoder; any overrun throws IntegrityError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_{data} {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64();
    std::string str();
    std::span<const std::uint8_t> bytes(std::size_t n);
    void f64s(std::span<double> out);

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool done() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

// Record list: u32 count, then per record u16 name length, name bytes,
// u32 rank, u64 per dimension, f64 per element.
void write_params(ByteWriter& w, const ParamSet& params);
ParamSet read_params(ByteReader& r);

}  // namespace cmarl::numerics
