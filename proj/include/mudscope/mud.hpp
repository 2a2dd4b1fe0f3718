#pragma once

#include "mudscope/net.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mudscope {

inline constexpr std::string_view kGatewayNamespace = "urn:ietf:params:mud:gateway";

struct AceEndpoint {
    enum class Kind : std::uint8_t { Wildcard, Domain, Controller, MyController, LocalNetworks, SameManufacturer, Literal };
    Kind kind = Kind::Wildcard;
    std::string value; // domain name or controller URN
    Ipv4 ip;

    static AceEndpoint any() { return {}; }
    static AceEndpoint domain(std::string d) { return {Kind::Domain, std::move(d), {}}; }
    static AceEndpoint controller(std::string urn) { return {Kind::Controller, std::move(urn), {}}; }
    static AceEndpoint my_controller() { return {Kind::MyController, {}, {}}; }
    static AceEndpoint local_networks() { return {Kind::LocalNetworks, {}, {}}; }
    static AceEndpoint same_manufacturer() { return {Kind::SameManufacturer, {}, {}}; }
    static AceEndpoint literal(Ipv4 ip) { return {Kind::Literal, {}, ip}; }

    bool is_wildcard() const { return kind == Kind::Wildcard; }
    /// "*", the domain, "controller:<urn>", "my-controller", "local-networks",
    /// "same-manufacturer" or the dotted address.
    std::string to_string() const;
    auto operator<=>(const AceEndpoint&) const = default;
};

enum class AceAction : std::uint8_t { Accept, Drop };

struct MudAce {
    std::string name;
    Direction direction = Direction::FromDevice;
    AceEndpoint endpoint;
    std::optional<int> ip_proto;
    // Wire semantics: in a from-device ACE the source is the device, in a to-device ACE the destination is.
    PortRange src_port;
    PortRange dst_port;
    std::optional<std::uint8_t> icmp_type;
    std::optional<std::uint8_t> icmp_code;
    AceAction action = AceAction::Accept;

    PortRange device_port() const { return direction == Direction::FromDevice ? src_port : dst_port; }
    PortRange remote_port() const { return direction == Direction::FromDevice ? dst_port : src_port; }
    void set_ports(PortRange device, PortRange remote);
    Channel channel() const;

    auto operator<=>(const MudAce&) const = default;
};

struct MudProfile {
    int mud_version = 1;
    std::string mud_url;
    std::string last_update;
    int cache_validity = 48;
    bool is_supported = true;
    std::string systeminfo;
    std::vector<MudAce> from_device;
    std::vector<MudAce> to_device;

    std::vector<MudAce> aces() const;
    std::size_t ace_count() const { return from_device.size() + to_device.size(); }
    bool has_drop() const;

    bool operator==(const MudProfile&) const = default;
};

struct MudDiagnostic {
    std::string path;
    std::string message;
};

struct MudParseResult {
    std::optional<MudProfile> profile;
    std::vector<MudDiagnostic> errors;

    bool ok() const { return profile.has_value() && errors.empty(); }
};

/// Strict parse: any element outside the allowlisted YANG vocabulary is an
/// error, and every error is collected before returning.
MudParseResult parse_mud(std::string_view json_text);
MudParseResult parse_mud_file(const std::string& path);

/// One row of the vocabulary table: a key permitted inside a context.
struct MudSchemaEntry {
    std::string_view context;
    std::string_view key;
    std::string_view type; // object, array, string, integer, boolean, null-list
    std::string_view child;
};
const std::vector<MudSchemaEntry>& mud_schema();

struct ScopeFinding {
    std::string ace_name;
    std::string address;
    std::string reason;

    auto operator<=>(const ScopeFinding&) const = default;
};

struct ScopeReport {
    std::vector<ScopeFinding> violations;
    std::vector<ScopeFinding> warnings;
};

ScopeReport validate_address_scope(const MudProfile& profile);

/// 2-space indented JSON with the fixed key order of the mud and acls containers, LF, trailing newline.
std::string emit_mud_json(const MudProfile& profile);

std::string format_timestamp(double unix_seconds);

} // namespace mudscope
