#pragma once

#include "mudscope/net.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mudscope {

/// One decoded IPv4 packet. Immutable once produced by the reader.
struct PacketEvent {
    double timestamp = 0.0;
    MacAddress src_mac;
    MacAddress dst_mac;
    Ipv4 src_ip;
    Ipv4 dst_ip;
    int ip_proto = 0;
    // Zero for ICMP.
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::optional<std::uint8_t> icmp_type;
    std::optional<std::uint8_t> icmp_code;
    bool tcp_syn = false;
    bool tcp_ack = false;
    /// IPv4 total length.
    std::uint32_t length = 0;
    /// UDP payload carried the STUN magic cookie.
    bool stun_cookie = false;
    /// Transport payload; only kept for the reader's retained ports (DNS, SSDP by default).
    std::vector<std::uint8_t> payload;

    bool involves(const MacAddress& mac) const { return src_mac == mac || dst_mac == mac; }
};

struct IngestStats {
    std::size_t frames = 0;
    std::size_t events = 0;
    std::size_t non_ip = 0;
    std::size_t ipv6 = 0;
    std::size_t unsupported_proto = 0;
    std::size_t fragments = 0;
    std::size_t malformed = 0;

    std::size_t skipped() const { return non_ip + ipv6 + unsupported_proto + fragments + malformed; }
};

class PcapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReaderOptions {
    std::set<std::uint16_t> retain_payload_ports{53, 1900};
    /// Also keep UDP payloads that open with an SSDP/HTTP start line.
    bool retain_ssdp_like = true;
};

/// Streaming reader for classic pcap files with Ethernet framing.
///
/// Malformed or unsupported frames are counted in stats() and skipped; only an
/// unreadable file, a bad global header or a non-Ethernet link type is fatal.
class PcapReader {
public:
    explicit PcapReader(std::unique_ptr<std::istream> in, ReaderOptions opts = {});

    static PcapReader open(const std::filesystem::path& path, ReaderOptions opts = {});
    static PcapReader from_bytes(std::span<const std::uint8_t> bytes, ReaderOptions opts = {});

    std::optional<PacketEvent> next();
    const IngestStats& stats() const { return stats_; }
    std::uint32_t link_type() const { return link_type_; }

private:
    std::optional<PacketEvent> decode(double ts, std::span<const std::uint8_t> frame);

    std::unique_ptr<std::istream> in_;
    ReaderOptions opts_;
    IngestStats stats_;
    bool swapped_ = false;
    bool nanos_ = false;
    bool eof_ = false;
    std::uint32_t link_type_ = 0;
    std::vector<std::uint8_t> buf_;
};

struct Trace {
    std::vector<PacketEvent> events;
    IngestStats stats;
};

/// Reads an entire trace into memory.
Trace read_trace(const std::filesystem::path& path, ReaderOptions opts = {});

std::string link_type_name(std::uint32_t link_type);

/// Writes classic little-endian pcap with Ethernet link type.
class PcapWriter {
public:
    explicit PcapWriter(const std::filesystem::path& path);
    explicit PcapWriter(std::ostream& out);

    void write(double timestamp, std::span<const std::uint8_t> frame);

private:
    void write_header();

    std::ofstream file_;
    std::ostream* out_;
};

} // namespace mudscope
