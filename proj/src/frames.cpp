#include "mudscope/frames.hpp"

#include <algorithm>
#include <sstream>

namespace mudscope {

namespace frames {

namespace {

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    put16(b, static_cast<std::uint16_t>(v >> 16));
    put16(b, static_cast<std::uint16_t>(v & 0xffff));
}

std::uint16_t checksum(std::span<const std::uint8_t> data) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < data.size(); i += 2) sum += (std::uint32_t(data[i]) << 8) | data[i + 1];
    if (data.size() % 2) sum += std::uint32_t(data.back()) << 8;
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

std::vector<std::uint8_t> ethernet_ipv4(const Endpoints& e, std::uint8_t proto, std::span<const std::uint8_t> l4) {
    std::vector<std::uint8_t> f;
    f.insert(f.end(), e.dst_mac.bytes.begin(), e.dst_mac.bytes.end());
    f.insert(f.end(), e.src_mac.bytes.begin(), e.src_mac.bytes.end());
    put16(f, 0x0800);
    std::size_t ip_start = f.size();
    f.push_back(0x45);
    f.push_back(0);
    put16(f, static_cast<std::uint16_t>(20 + l4.size()));
    put16(f, 0);      // id
    put16(f, 0x4000); // DF
    f.push_back(64);
    f.push_back(proto);
    put16(f, 0);
    put32(f, e.src_ip.value);
    put32(f, e.dst_ip.value);
    auto sum = checksum(std::span(f).subspan(ip_start, 20));
    f[ip_start + 10] = static_cast<std::uint8_t>(sum >> 8);
    f[ip_start + 11] = static_cast<std::uint8_t>(sum & 0xff);
    f.insert(f.end(), l4.begin(), l4.end());
    return f;
}

} // namespace

std::vector<std::uint8_t> udp(const Endpoints& e, std::uint16_t sport, std::uint16_t dport,
                              std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> l4;
    put16(l4, sport);
    put16(l4, dport);
    put16(l4, static_cast<std::uint16_t>(8 + payload.size()));
    put16(l4, 0);
    l4.insert(l4.end(), payload.begin(), payload.end());
    return ethernet_ipv4(e, ipproto::udp, l4);
}

std::vector<std::uint8_t> tcp(const Endpoints& e, std::uint16_t sport, std::uint16_t dport, std::uint8_t flags,
                              std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> l4;
    put16(l4, sport);
    put16(l4, dport);
    put32(l4, 1);
    put32(l4, (flags & kAck) ? 1 : 0);
    l4.push_back(0x50);
    l4.push_back(flags);
    put16(l4, 65535);
    put16(l4, 0);
    put16(l4, 0);
    l4.insert(l4.end(), payload.begin(), payload.end());
    return ethernet_ipv4(e, ipproto::tcp, l4);
}

std::vector<std::uint8_t> icmp(const Endpoints& e, std::uint8_t type, std::uint8_t code) {
    std::vector<std::uint8_t> l4{type, code, 0, 0, 0, 1, 0, 1};
    auto sum = checksum(l4);
    l4[2] = static_cast<std::uint8_t>(sum >> 8);
    l4[3] = static_cast<std::uint8_t>(sum & 0xff);
    return ethernet_ipv4(e, ipproto::icmp, l4);
}

std::vector<std::uint8_t> arp(const MacAddress& src) {
    std::vector<std::uint8_t> f(6, 0xff);
    f.insert(f.end(), src.bytes.begin(), src.bytes.end());
    put16(f, 0x0806);
    f.resize(f.size() + 28, 0);
    return f;
}

Endpoints reversed(const Endpoints& e) { return {e.dst_mac, e.src_mac, e.dst_ip, e.src_ip}; }

std::vector<std::uint8_t> filler(std::size_t n) {
    std::vector<std::uint8_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>('a' + i % 26);
    return v;
}

} // namespace frames

void TraceBuilder::add(double ts, std::vector<std::uint8_t> frame) { frames_.emplace_back(ts, std::move(frame)); }

std::vector<std::uint8_t> TraceBuilder::pcap_bytes() const {
    std::ostringstream out(std::ios::binary);
    PcapWriter w(out);
    for (const auto& [ts, f] : frames_) w.write(ts, f);
    auto s = out.str();
    return {s.begin(), s.end()};
}

void TraceBuilder::write(const std::filesystem::path& path) const {
    PcapWriter w(path);
    for (const auto& [ts, f] : frames_) w.write(ts, f);
}

std::vector<PacketEvent> TraceBuilder::events() const {
    auto bytes = pcap_bytes();
    auto reader = PcapReader::from_bytes(bytes);
    std::vector<PacketEvent> out;
    while (auto ev = reader.next()) out.push_back(std::move(*ev));
    return out;
}

} // namespace mudscope
