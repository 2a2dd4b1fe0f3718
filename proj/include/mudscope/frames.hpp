#pragma once

#include "mudscope/net.hpp"
#include "mudscope/pcap.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mudscope {

/// Ethernet/IPv4 frame construction, used by the synthetic trace generator and tests.
namespace frames {

inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kAck = 0x10;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kFin = 0x01;

struct Endpoints {
    MacAddress src_mac;
    MacAddress dst_mac;
    Ipv4 src_ip;
    Ipv4 dst_ip;
};

std::vector<std::uint8_t> udp(const Endpoints& e, std::uint16_t sport, std::uint16_t dport,
                              std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> tcp(const Endpoints& e, std::uint16_t sport, std::uint16_t dport, std::uint8_t flags,
                              std::span<const std::uint8_t> payload = {});
std::vector<std::uint8_t> icmp(const Endpoints& e, std::uint8_t type, std::uint8_t code);
std::vector<std::uint8_t> arp(const MacAddress& src);

/// Same endpoints with source and destination swapped.
Endpoints reversed(const Endpoints& e);

std::vector<std::uint8_t> filler(std::size_t n);

} // namespace frames

/// Accumulates timestamped frames; can be written as pcap or decoded in memory.
class TraceBuilder {
public:
    void add(double ts, std::vector<std::uint8_t> frame);

    std::vector<std::uint8_t> pcap_bytes() const;
    void write(const std::filesystem::path& path) const;
    /// Decodes through the regular pcap reader.
    std::vector<PacketEvent> events() const;

    std::size_t size() const { return frames_.size(); }

private:
    std::vector<std::pair<double, std::vector<std::uint8_t>>> frames_;
};

} // namespace mudscope
