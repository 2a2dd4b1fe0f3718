#pragma once

#include "mudscope/endpoint_class.hpp"
#include "mudscope/intervals.hpp"
#include "mudscope/mud.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mudscope {

/// Traffic space of one endpoint/direction: protocol x device port x remote port.
/// For ICMP the two port axes carry type and code.
Region traffic_region(std::optional<int> proto, PortRange device_port, PortRange remote_port,
                      std::optional<std::uint8_t> icmp_type = {}, std::optional<std::uint8_t> icmp_code = {});
Region ace_region(const MudAce& ace);

struct PolicyRule {
    EndpointClass endpoint;
    Direction direction = Direction::FromDevice;
    Region region{3};
};

/// Whitelist semantics over the endpoint class tree. Throws std::invalid_argument for drop ACEs.
std::vector<PolicyRule> policy_rules(const MudProfile& profile);

struct CanonicalTuple {
    EndpointClass endpoint;
    Direction direction = Direction::FromDevice;
    Interval proto;
    Interval device_port;
    Interval remote_port;

    std::string to_string() const;
    auto operator<=>(const CanonicalTuple&) const = default;
};

struct CanonicalPolicy {
    /// Disjoint, sorted. A host in class c is permitted the union of the tuples of c and its ancestors.
    std::vector<CanonicalTuple> tuples;

    bool operator==(const CanonicalPolicy&) const = default;
};

CanonicalPolicy canonicalize(const std::vector<PolicyRule>& rules);
CanonicalPolicy canonicalize(const MudProfile& profile);
bool equivalent(const MudProfile& a, const MudProfile& b);
/// a is included in b: on every packet a either does what b does or denies.
bool includes(const std::vector<PolicyRule>& a, const std::vector<PolicyRule>& b);
bool includes(const MudProfile& a, const MudProfile& b);

struct ZonePolicy {
    std::string name;
    /// Lower is more restrictive.
    int rank = 0;
    std::string notes;
    std::vector<PolicyRule> permits;
};

class ZoneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ZonePolicy parse_zone(std::string_view json_text);
ZonePolicy load_zone(const std::filesystem::path& path);
/// Every *.json in `dir`, ordered by rank then name.
std::vector<ZonePolicy> load_zones(const std::filesystem::path& dir);

struct AceVerdict {
    std::string ace_name;
    bool compliant = false;
};

struct ComplianceReport {
    std::string zone;
    bool rejected = false;
    std::string reason;
    std::vector<AceVerdict> verdicts;
    std::size_t violating = 0;
    std::size_t total = 0;

    double percent_violating() const { return total == 0 ? 0.0 : 100.0 * double(violating) / double(total); }
    bool safe() const { return !rejected && violating == 0; }
};

ComplianceReport check_zone(const MudProfile& profile, const ZonePolicy& zone);
std::vector<std::string> safe_zones(const MudProfile& profile, const std::vector<ZonePolicy>& zones);

/// "<zone>  rules=<n>  violating=<k>  <pct>%" style row.
std::string format_report_row(const ComplianceReport& r);
std::string report_json(const ComplianceReport& r);

} // namespace mudscope
