#pragma once

#include "mudscope/net.hpp"
#include "mudscope/pcap.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mudscope {

struct DnsAnswer {
    /// Lowercase, no trailing dot. For CNAME chains this is the originally queried name.
    std::string query_name;
    Ipv4 answer_ip;
    std::uint32_t ttl = 0;
    double observed_at = 0.0;

    auto operator<=>(const DnsAnswer&) const = default;
};

struct DnsStats {
    std::size_t truncated = 0;
    std::size_t tcp_fragmented = 0;
};

/// A records carried by a DNS response in `event`. Queries, error responses and
/// non-A answers yield nothing; undecodable payloads bump `stats`.
std::vector<DnsAnswer> extract_dns_answers(const PacketEvent& event, DnsStats& stats);
std::vector<DnsAnswer> extract_dns_answers(const PacketEvent& event);

/// Resource record used by the synthetic encoder.
struct DnsRecord {
    std::string name;
    std::uint16_t type = 1; // 1 = A, 5 = CNAME
    std::uint32_t ttl = 300;
    Ipv4 address;          // A
    std::string target;    // CNAME
};

std::vector<std::uint8_t> encode_dns_query(std::uint16_t id, const std::string& qname);
std::vector<std::uint8_t> encode_dns_response(std::uint16_t id, const std::string& qname,
                                              const std::vector<DnsRecord>& answers);

} // namespace mudscope
