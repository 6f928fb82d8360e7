// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/hash.hpp>
#include <openssl/evp.h>
#include <memory>
#include <stdexcept>

namespace cicsim
{
namespace
{
int hex_digit(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

std::string_view strip_0x(std::string_view s) noexcept
{
    if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X'))
        s.remove_prefix(2);
    return s;
}

struct MdCtxDeleter
{
    void operator()(EVP_MD_CTX* ctx) const noexcept { EVP_MD_CTX_free(ctx); }
};
}  // namespace

std::string to_hex(bytes_view data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (const auto b : data)
    {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

bytes from_hex(std::string_view hex)
{
    hex = strip_0x(hex);
    if (hex.size() % 2 != 0)
        throw std::invalid_argument("hex string has odd length");
    bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2)
    {
        const auto hi = hex_digit(hex[i]);
        const auto lo = hex_digit(hex[i + 1]);
        if (hi < 0 || lo < 0)
            throw std::invalid_argument("invalid hex digit");
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string Hash256::hex() const
{
    return to_hex(as_bytes(*this));
}

Hash256 Hash256::from_hex(std::string_view hex)
{
    hex = strip_0x(hex);
    if (hex.size() != 64)
        throw std::invalid_argument("expected 64 hex digits for a 256-bit value");
    const auto raw = cicsim::from_hex(hex);
    Hash256 h;
    std::memcpy(h.bytes.data(), raw.data(), 32);
    return h;
}

Hash256 sha256(std::initializer_list<bytes_view> parts)
{
    // One context per thread; EVP_MD_CTX allocation dominates small-input hashing.
    thread_local std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx{EVP_MD_CTX_new()};
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest init failed");
    for (const auto part : parts)
        EVP_DigestUpdate(ctx.get(), part.data(), part.size());
    Hash256 out;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), out.bytes.data(), &len);
    return out;
}
}  // namespace cicsim
