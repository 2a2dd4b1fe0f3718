#pragma once

#include "mudscope/frames.hpp"
#include "mudscope/mud.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mudscope::synth {

struct SynthOptions {
    MacAddress device_mac{{0x00, 0x16, 0x3e, 0x00, 0x00, 0x10}};
    Ipv4 device_ip{192, 168, 1, 10};
    MacAddress gateway_mac{{0x00, 0x16, 0x3e, 0x00, 0x00, 0x01}};
    Ipv4 gateway_ip{192, 168, 1, 1};
    std::string gateway_namespace{kGatewayNamespace};
    double start = 1'500'000'000.0;
    double epoch_seconds = 900;
    int epochs = 12;
    std::uint32_t seed = 1;
    /// Chance that a conversation repeats in a later epoch.
    double activity = 0.5;
    /// Every conversation appears at least once within this many epochs.
    int warmup_epochs = 3;
    /// Per-conversation first epoch, overriding the warmup spread where given (-1 keeps it).
    std::vector<int> first_epochs;
};

/// Traffic that every ACE of `profile` admits: one conversation per from-device ACE (answered
/// when a matching to-device ACE exists) and one per remaining to-device ACE. Domains are
/// resolved through the gateway before each use and re-resolved to a new address each epoch.
void add_conformant_traffic(TraceBuilder& trace, const MudProfile& profile, const SynthOptions& opts);
TraceBuilder conformant_trace(const MudProfile& profile, const SynthOptions& opts);

/// Number of conversations add_conformant_traffic plans for `profile`.
std::size_t conversation_count(const MudProfile& profile);

/// DNS via the gateway plus TCP 8777 to tech.carematix.com, both directions.
MudProfile blipcare_profile();
TraceBuilder blipcare_trace(const SynthOptions& opts = {});

/// Inbound TCP SYNs to `port` from `count` distinct public addresses, left unanswered.
std::vector<Ipv4> inject_scan(TraceBuilder& trace, const SynthOptions& opts, int count, double at,
                              std::uint16_t port = 23);

/// Multicast NOTIFY advertising `advertised_port`, an M-SEARCH from a local peer and the
/// device's unicast reply sent from the advertised port.
void add_ssdp_chatter(TraceBuilder& trace, const SynthOptions& opts, double at, std::uint16_t advertised_port);

/// Renames the first label of every domain endpoint to "<label>-<first>", keeping the registrable domain.
MudProfile shift_subdomains(const MudProfile& profile, const std::string& label);

struct CatalogEntry {
    std::string name;
    MudProfile profile;
};

/// Ten device profiles with disjoint Internet endpoints.
std::vector<CatalogEntry> catalog();

} // namespace mudscope::synth
