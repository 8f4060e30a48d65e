#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace provdelta {

/// 128-bit content digest. Data nodes carry one of these whether or not the
/// underlying bytes were retained.
struct Md5Digest {
    std::array<std::uint8_t, 16> bytes{};

    bool operator==(const Md5Digest&) const = default;
    auto operator<=>(const Md5Digest&) const = default;

    std::string to_hex() const;

    // Accepts exactly 32 hex characters, either case. Throws std::invalid_argument.
    static Md5Digest from_hex(std::string_view hex);
};

Md5Digest md5(std::string_view data);

} // namespace provdelta
