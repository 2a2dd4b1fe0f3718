#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mudscope {

/// IPv4 address in host byte order.
struct Ipv4 {
    std::uint32_t value = 0;

    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t v) : value(v) {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value((std::uint32_t(a) << 24) | (std::uint32_t(b) << 16) | (std::uint32_t(c) << 8) | d) {}

    static std::optional<Ipv4> parse(std::string_view text);
    std::string to_string() const;

    bool is_private() const;    // RFC1918
    bool is_link_local() const; // 169.254/16
    bool is_loopback() const;
    bool is_multicast() const;
    bool is_broadcast() const { return value == 0xffffffffu; }
    /// Addresses that only mean something inside one site.
    bool has_local_significance() const { return is_private() || is_link_local() || is_loopback(); }

    auto operator<=>(const Ipv4&) const = default;
};

struct Subnet {
    Ipv4 network;
    int prefix = 32;

    static std::optional<Subnet> parse(std::string_view cidr);
    bool contains(Ipv4 ip) const;
    std::string to_string() const;

    auto operator<=>(const Subnet&) const = default;
};

struct MacAddress {
    std::array<std::uint8_t, 6> bytes{};

    static std::optional<MacAddress> parse(std::string_view text);
    std::string to_string() const;

    auto operator<=>(const MacAddress&) const = default;
};

namespace ipproto {
inline constexpr int icmp = 1;
inline constexpr int tcp = 6;
inline constexpr int udp = 17;
} // namespace ipproto

std::string proto_name(int proto);

/// Inclusive port (or ICMP type/code) interval. The full range acts as a wildcard.
struct PortRange {
    std::uint16_t lo = 0;
    std::uint16_t hi = 65535;

    static constexpr PortRange any() { return {0, 65535}; }
    static constexpr PortRange exact(std::uint16_t p) { return {p, p}; }

    constexpr bool is_any() const { return lo == 0 && hi == 65535; }
    constexpr bool is_exact() const { return lo == hi; }
    constexpr bool contains(std::uint16_t p) const { return lo <= p && p <= hi; }
    constexpr bool contains(PortRange o) const { return lo <= o.lo && o.hi <= hi; }
    constexpr bool overlaps(PortRange o) const { return lo <= o.hi && o.lo <= hi; }
    constexpr PortRange intersect(PortRange o) const {
        return {lo > o.lo ? lo : o.lo, hi < o.hi ? hi : o.hi};
    }

    /// "*", "53" or "1024-2047".
    std::string to_string() const;
    static std::optional<PortRange> parse(std::string_view text);

    auto operator<=>(const PortRange&) const = default;
};

enum class Direction : std::uint8_t { FromDevice, ToDevice };
enum class Channel : std::uint8_t { Local, Internet };

std::string_view to_string(Direction d);
std::string_view to_string(Channel c);
std::optional<Direction> parse_direction(std::string_view s);
std::optional<Channel> parse_channel(std::string_view s);

std::string to_lower(std::string_view s);

} // namespace mudscope
