#include "mudscope/net.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace mudscope {

namespace {

bool parse_uint(std::string_view s, unsigned long& out, int base = 10) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
    return ec == std::errc() && p == s.data() + s.size();
}

} // namespace

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
    std::uint32_t v = 0;
    int parts = 0;
    while (parts < 4) {
        auto dot = text.find('.');
        auto piece = text.substr(0, dot);
        unsigned long octet = 0;
        if (piece.size() > 3 || !parse_uint(piece, octet) || octet > 255) return std::nullopt;
        v = (v << 8) | static_cast<std::uint32_t>(octet);
        ++parts;
        if (dot == std::string_view::npos) break;
        text.remove_prefix(dot + 1);
    }
    if (parts != 4) return std::nullopt;
    return Ipv4(v);
}

std::string Ipv4::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", value >> 24, (value >> 16) & 0xff, (value >> 8) & 0xff,
                  value & 0xff);
    return buf;
}

bool Ipv4::is_private() const {
    return (value >> 24) == 10 || (value >> 20) == ((172u << 4) | 1u) || (value >> 16) == ((192u << 8) | 168u);
}

bool Ipv4::is_link_local() const { return (value >> 16) == ((169u << 8) | 254u); }
bool Ipv4::is_loopback() const { return (value >> 24) == 127; }
bool Ipv4::is_multicast() const { return (value >> 28) == 0xe; }

std::optional<Subnet> Subnet::parse(std::string_view cidr) {
    auto slash = cidr.find('/');
    auto ip = Ipv4::parse(cidr.substr(0, slash));
    if (!ip) return std::nullopt;
    unsigned long prefix = 32;
    if (slash != std::string_view::npos && (!parse_uint(cidr.substr(slash + 1), prefix) || prefix > 32))
        return std::nullopt;
    Subnet s{*ip, static_cast<int>(prefix)};
    s.network = Ipv4(ip->value & (prefix == 0 ? 0u : ~0u << (32 - prefix)));
    return s;
}

bool Subnet::contains(Ipv4 ip) const {
    std::uint32_t mask = prefix == 0 ? 0u : ~0u << (32 - prefix);
    return (ip.value & mask) == network.value;
}

std::string Subnet::to_string() const { return network.to_string() + "/" + std::to_string(prefix); }

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
    MacAddress mac;
    for (int i = 0; i < 6; ++i) {
        if (text.size() < 2) return std::nullopt;
        unsigned long b = 0;
        if (!parse_uint(text.substr(0, 2), b, 16)) return std::nullopt;
        mac.bytes[i] = static_cast<std::uint8_t>(b);
        text.remove_prefix(2);
        if (i < 5) {
            if (text.empty() || (text[0] != ':' && text[0] != '-')) return std::nullopt;
            text.remove_prefix(1);
        }
    }
    if (!text.empty()) return std::nullopt;
    return mac;
}

std::string MacAddress::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0], bytes[1], bytes[2], bytes[3],
                  bytes[4], bytes[5]);
    return buf;
}

std::string proto_name(int proto) {
    switch (proto) {
    case ipproto::icmp: return "ICMP";
    case ipproto::tcp: return "TCP";
    case ipproto::udp: return "UDP";
    default: return std::to_string(proto);
    }
}

std::string PortRange::to_string() const {
    if (is_any()) return "*";
    if (is_exact()) return std::to_string(lo);
    return std::to_string(lo) + "-" + std::to_string(hi);
}

std::optional<PortRange> PortRange::parse(std::string_view text) {
    if (text == "*") return any();
    auto dash = text.find('-');
    unsigned long a = 0, b = 0;
    if (dash == std::string_view::npos) {
        if (!parse_uint(text, a) || a > 65535) return std::nullopt;
        return exact(static_cast<std::uint16_t>(a));
    }
    if (!parse_uint(text.substr(0, dash), a) || !parse_uint(text.substr(dash + 1), b) || a > b || b > 65535)
        return std::nullopt;
    return PortRange{static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b)};
}

std::string_view to_string(Direction d) { return d == Direction::FromDevice ? "from-device" : "to-device"; }
std::string_view to_string(Channel c) { return c == Channel::Local ? "Local" : "Internet"; }

std::optional<Direction> parse_direction(std::string_view s) {
    if (s == "from-device") return Direction::FromDevice;
    if (s == "to-device") return Direction::ToDevice;
    return std::nullopt;
}

std::optional<Channel> parse_channel(std::string_view s) {
    if (s == "Local" || s == "local") return Channel::Local;
    if (s == "Internet" || s == "internet") return Channel::Internet;
    return std::nullopt;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

} // namespace mudscope
