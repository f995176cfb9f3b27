#include "cmarl/numerics/serialize.hpp"

#include <bit>
#include <cstring>

#include "cmarl/common/error.hpp"

namespace cmarl::numerics {

void ByteWriter::u16(std::uint16_t v)
{
    buf_.push_back(static_cast<std::uint8_t>(v));
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void ByteWriter::u64(std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) {
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void ByteWriter::f64(double v)
{
    u64(std::bit_cast<std::uint64_t>(v));
}

void ByteWriter::str(std::string_view s)
{
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::bytes(std::span<const std::uint8_t> b)
{
    buf_.insert(buf_.end(), b.begin(), b.end());
}

void ByteWriter::f64s(std::span<const double> v)
{
    for (double x : v) {
        f64(x);
    }
}

void ByteReader::need(std::size_t n) const
{
    if (data_.size() - pos_ < n) {
        throw IntegrityError("truncated data: need " + std::to_string(n) + " bytes, " +
                             std::to_string(data_.size() - pos_) + " left");
    }
}

std::uint8_t ByteReader::u8()
{
    need(1);
    return data_[pos_++];
}

std::uint16_t ByteReader::u16()
{
    need(2);
    const auto v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
}

std::uint32_t ByteReader::u32()
{
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64()
{
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return v;
}

double ByteReader::f64()
{
    return std::bit_cast<double>(u64());
}

std::string ByteReader::str()
{
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n)
{
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

void ByteReader::f64s(std::span<double> out)
{
    need(out.size() * 8);
    for (double& x : out) {
        x = f64();
    }
}

void write_params(ByteWriter& w, const ParamSet& params)
{
    w.u32(static_cast<std::uint32_t>(params.entries().size()));
    for (const auto& e : params.entries()) {
        w.u16(static_cast<std::uint16_t>(e.name.size()));
        w.bytes({reinterpret_cast<const std::uint8_t*>(e.name.data()), e.name.size()});
        w.u32(static_cast<std::uint32_t>(e.shape.size()));
        for (auto d : e.shape) {
            w.u64(d);
        }
        w.f64s(params.span(e.name));
    }
}

ParamSet read_params(ByteReader& r)
{
    ParamSet out;
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t len = r.u16();
        const auto name_bytes = r.bytes(len);
        std::string name(reinterpret_cast<const char*>(name_bytes.data()), len);
        const std::uint32_t rank = r.u32();
        if (rank > 8) {
            throw IntegrityError("parameter '" + name + "' has implausible rank " + std::to_string(rank));
        }
        Shape shape(rank);
        for (auto& d : shape) {
            d = r.u64();
        }
        if (shape_size(shape) * 8 > r.remaining()) {
            throw IntegrityError("parameter '" + name + "' is truncated");
        }
        out.add(name, shape);
        r.f64s(out.span(name));
    }
    return out;
}

}  // namespace cmarl::numerics
