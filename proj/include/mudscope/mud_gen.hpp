#pragma once

#include "mudscope/flow_tracker.hpp"
#include "mudscope/mud.hpp"

#include <string>
#include <vector>

namespace mudscope {

struct GenOptions {
    /// Wildcard an endpoint once more than this many unnamed addresses share a port.
    int wildcard_endpoint_threshold = 5;
    bool stun_detection = true;
    std::string gateway_namespace{kGatewayNamespace};
    /// ACEs supplied by the manufacturer for behavior absent from the trace; merged in and renamed.
    std::vector<MudAce> extra_aces;
};

struct ProfileMeta {
    std::string mud_url = "https://mud.example.com/device.json";
    std::string systeminfo = "device";
    double trace_end = 0.0;
};

struct GenResult {
    MudProfile profile;
    std::vector<std::string> warnings;
};

/// Throws std::invalid_argument when the options are out of range.
GenResult translate(const std::vector<FlowRecord>& flows, const DnsCache& dns, const GenOptions& opts = {},
                    const ProfileMeta& meta = {});

/// UDP flow that looks like STUN: payload cookie seen, or a DNS label starting with "stun".
bool is_stun_flow(const FlowRecord& flow);

/// Whether `ace` admits the traffic summarized by `flow`.
bool ace_covers(const MudAce& ace, const FlowRecord& flow, std::string_view gateway_namespace = kGatewayNamespace);

/// Node/link listing for Sankey-style rendering: one link per ACE.
std::string emit_flow_report(const MudProfile& profile);

} // namespace mudscope
