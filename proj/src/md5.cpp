#include "provdelta/md5.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace provdelta {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::string Md5Digest::to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Md5Digest Md5Digest::from_hex(std::string_view hex) {
    if (hex.size() != 32)
        throw std::invalid_argument("digest must be 32 hex characters, got " +
                                    std::to_string(hex.size()));
    Md5Digest d;
    for (std::size_t i = 0; i < 16; ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw std::invalid_argument("digest contains a non-hex character");
        d.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return d;
}

Md5Digest md5(std::string_view data) {
    Md5Digest d;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_md5(), nullptr) != 1 ||
        len != d.bytes.size())
        throw std::runtime_error("MD5 digest computation failed");
    return d;
}

} // namespace provdelta
