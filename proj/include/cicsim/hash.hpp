// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cicsim
{
using bytes = std::vector<uint8_t>;
using bytes_view = std::span<const uint8_t>;

/// A 256-bit value in big-endian byte order.
///
/// Used for hashes, storage keys and values, seeds, nonces and node tags.
struct Hash256
{
    std::array<uint8_t, 32> bytes{};

    constexpr Hash256() noexcept = default;

    /// Zero-extends a 64-bit integer into the low-order (rightmost) bytes.
    static constexpr Hash256 from_u64(uint64_t v) noexcept
    {
        Hash256 h;
        for (size_t i = 0; i < 8; ++i)
            h.bytes[31 - i] = static_cast<uint8_t>(v >> (8 * i));
        return h;
    }

    /// The low-order 64 bits.
    [[nodiscard]] constexpr uint64_t low_u64() const noexcept
    {
        uint64_t v = 0;
        for (size_t i = 24; i < 32; ++i)
            v = (v << 8) | bytes[i];
        return v;
    }

    /// The high-order (leading) 64 bits.
    [[nodiscard]] constexpr uint64_t high_u64() const noexcept
    {
        uint64_t v = 0;
        for (size_t i = 0; i < 8; ++i)
            v = (v << 8) | bytes[i];
        return v;
    }

    [[nodiscard]] constexpr bool is_zero() const noexcept
    {
        for (const auto b : bytes)
            if (b != 0)
                return false;
        return true;
    }

    [[nodiscard]] std::string hex() const;

    /// Parses exactly 64 hex digits, optionally prefixed with "0x".
    /// Throws std::invalid_argument on malformed input.
    static Hash256 from_hex(std::string_view hex);

    friend constexpr auto operator<=>(const Hash256&, const Hash256&) noexcept = default;
};

std::string to_hex(bytes_view data);
bytes from_hex(std::string_view hex);

/// SHA-256 of the byte-exact concatenation of the given parts.
Hash256 sha256(std::initializer_list<bytes_view> parts);

inline Hash256 sha256(bytes_view data)
{
    return sha256({data});
}

inline bytes_view as_bytes(const Hash256& h) noexcept
{
    return {h.bytes.data(), h.bytes.size()};
}

inline bytes_view as_bytes(std::string_view s) noexcept
{
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

/// Big-endian 8-byte encoding.
inline std::array<uint8_t, 8> be64(uint64_t v) noexcept
{
    std::array<uint8_t, 8> out{};
    for (size_t i = 0; i < 8; ++i)
        out[7 - i] = static_cast<uint8_t>(v >> (8 * i));
    return out;
}

/// hash(a ‖ b) over two fixed-width 32-byte operands.
inline Hash256 hash_pair(const Hash256& a, const Hash256& b)
{
    return sha256({as_bytes(a), as_bytes(b)});
}

/// A uniform fraction in [0, 1) from the leading 64 bits.
inline double to_unit_interval(const Hash256& h) noexcept
{
    return static_cast<double>(h.high_u64() >> 11) * 0x1.0p-53;
}
}  // namespace cicsim

template <>
struct std::hash<cicsim::Hash256>
{
    size_t operator()(const cicsim::Hash256& h) const noexcept
    {
        uint64_t v;
        std::memcpy(&v, h.bytes.data(), sizeof(v));
        return static_cast<size_t>(v);
    }
};
