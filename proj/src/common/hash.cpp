#include "cmarl/common/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace cmarl {

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> digest(const EVP_MD* md, std::span<const std::uint8_t> a, std::span<const std::uint8_t> b)
{
    std::array<std::uint8_t, N> out{};
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) {
        throw std::runtime_error("EVP_MD_CTX_new failed");
    }
    unsigned int len = 0;
    const bool ok = EVP_DigestInit_ex(ctx, md, nullptr) == 1 && EVP_DigestUpdate(ctx, a.data(), a.size()) == 1 &&
                    EVP_DigestUpdate(ctx, b.data(), b.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, out.data(), &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok || len != N) {
        throw std::runtime_error("digest computation failed");
    }
    return out;
}

}  // namespace

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data)
{
    return digest<32>(EVP_sha256(), data, {});
}

std::string git_blob_hash(std::string_view content)
{
    std::string header = "blob " + std::to_string(content.size());
    header.push_back('\0');
    const auto d = digest<20>(EVP_sha1(), {reinterpret_cast<const std::uint8_t*>(header.data()), header.size()},
                              {reinterpret_cast<const std::uint8_t*>(content.data()), content.size()});
    return to_hex(d);
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

}  // namespace cmarl
