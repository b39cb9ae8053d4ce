#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace odin {

// IPv4 address held in host byte order.
struct Ipv4 {
    uint32_t value = 0;

    static std::optional<Ipv4> parse(const std::string& text);
    // Throws Error{Status::InvalidAddress} on malformed input.
    static Ipv4 parse_or_throw(const std::string& text);

    std::string to_string() const;

    uint8_t octet(int i) const { return static_cast<uint8_t>(value >> (8 * (3 - i))); }
    uint8_t last_octet() const { return static_cast<uint8_t>(value & 0xff); }

    Ipv4 with_last_octet(uint8_t o) const { return Ipv4{(value & 0xffffff00u) | o}; }
    uint32_t slash24() const { return value & 0xffffff00u; }

    bool same_slash24(const Ipv4& other) const { return slash24() == other.slash24(); }

    auto operator<=>(const Ipv4&) const = default;
};

}  // namespace odin
