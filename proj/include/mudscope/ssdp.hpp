#pragma once

#include "mudscope/pcap.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string_view>

namespace mudscope {

enum class SsdpMethod : std::uint8_t { Notify, MSearch, Response };

std::string_view to_string(SsdpMethod m);

struct SsdpEvent {
    MacAddress device_mac; // sender of the message
    std::optional<std::uint16_t> advertised_port;
    SsdpMethod method = SsdpMethod::Notify;

    auto operator<=>(const SsdpEvent&) const = default;
};

/// Recognizes SSDP on UDP 1900, or on a port listed in `learned_ports`
/// (a port some device advertised earlier via LOCATION).
std::optional<SsdpEvent> extract_ssdp(const PacketEvent& event, const std::set<std::uint16_t>& learned_ports = {});

/// Keeps track of advertised ports across a trace.
class SsdpTracker {
public:
    std::optional<SsdpEvent> observe(const PacketEvent& event);
    const std::set<std::uint16_t>& learned_ports() const { return ports_; }
    bool is_ssdp_port(std::uint16_t port) const { return port == 1900 || ports_.count(port) > 0; }

private:
    std::set<std::uint16_t> ports_;
};

} // namespace mudscope
