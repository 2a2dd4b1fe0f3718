#pragma once

#include "mudscope/dns.hpp"
#include "mudscope/net.hpp"
#include "mudscope/pcap.hpp"
#include "mudscope/ssdp.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

namespace mudscope {

/// DNS bindings observed on the wire, with history so a name can be asked for
/// "as of" a given time.
class DnsCache {
public:
    explicit DnsCache(std::uint32_t ttl_floor = 60) : ttl_floor_(ttl_floor) {}

    void insert(const DnsAnswer& answer);
    /// Latest binding observed at or before `at` that has not expired by `at`.
    std::optional<std::string> lookup(Ipv4 ip, double at) const;
    /// Every address ever bound to `name`.
    std::vector<Ipv4> addresses_of(const std::string& name) const;
    std::size_t size() const { return bindings_.size(); }
    std::uint32_t ttl_floor() const { return ttl_floor_; }

private:
    struct Binding {
        std::string name;
        double observed_at;
        double expiry;
    };
    std::uint32_t ttl_floor_;
    std::map<Ipv4, std::vector<Binding>> bindings_;
};

enum class EndpointKind : std::uint8_t { Wildcard, Device, Literal, Domain, Gateway, LocalNetwork };

struct EndpointMatch {
    EndpointKind kind = EndpointKind::Wildcard;
    Ipv4 ip;
    std::string name;

    static EndpointMatch any() { return {}; }
    static EndpointMatch device() { return {EndpointKind::Device, {}, {}}; }
    static EndpointMatch literal(Ipv4 ip) { return {EndpointKind::Literal, ip, {}}; }
    static EndpointMatch domain(std::string n) { return {EndpointKind::Domain, {}, std::move(n)}; }
    static EndpointMatch gateway() { return {EndpointKind::Gateway, {}, {}}; }
    static EndpointMatch local_network() { return {EndpointKind::LocalNetwork, {}, {}}; }

    std::string to_string() const;
    auto operator<=>(const EndpointMatch&) const = default;
};

/// What the tracker knows about one side of a packet.
struct SideInfo {
    Ipv4 ip;
    bool is_device = false;
    bool is_gateway = false;
    bool is_local = false;
    std::optional<std::string> name;
};

struct MatchSpec {
    EndpointMatch src;
    EndpointMatch dst;
    std::optional<int> ip_proto;
    PortRange src_port;
    PortRange dst_port;
    std::optional<std::uint8_t> icmp_type;
    std::optional<std::uint8_t> icmp_code;
    /// Only initial handshake segments (SYN without ACK).
    bool syn_only = false;

    bool matches(const PacketEvent& ev, const SideInfo& src_side, const SideInfo& dst_side) const;
    std::string to_string() const;
    auto operator<=>(const MatchSpec&) const = default;
};

enum class RuleAction : std::uint8_t { Forward, Mirror };
enum class RuleOrigin : std::uint8_t { Proactive, Reactive };
enum class RuleGroup : std::uint8_t { None, FromLocal, ToLocal, FromInternet, ToInternet };

std::string_view to_string(RuleGroup g);
RuleGroup group_of(Direction d, Channel c);

namespace priority {
inline constexpr int dns_reply = 1090;
inline constexpr int dns_query = 1080;
inline constexpr int ssdp = 1070;
inline constexpr int tcp_syn = 1060;
// Reactive bands; flows established by a SYN sit 50 above their group's base.
inline constexpr int from_internet = 800;
inline constexpr int to_internet = 700;
inline constexpr int from_local = 600;
inline constexpr int to_local = 500;
inline constexpr int syn_bonus = 50;
inline constexpr int unknown_udp = 300;
inline constexpr int icmp = 290;
inline constexpr int unknown_tcp = 280;
inline constexpr int default_forward = 1;
} // namespace priority

struct Rule {
    MatchSpec match;
    int priority = 0;
    RuleAction action = RuleAction::Forward;
    RuleOrigin origin = RuleOrigin::Proactive;
    RuleGroup group = RuleGroup::None;
    std::string label;
    std::uint64_t seq = 0;
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;

    std::string to_string() const;
};

/// Priority table; the highest priority match fires, earliest insertion breaks ties.
class RuleTable {
public:
    /// Returns the rule's sequence number (also its index in rules()).
    std::size_t insert(Rule rule);
    std::optional<std::size_t> lookup(const PacketEvent& ev, const SideInfo& src, const SideInfo& dst) const;
    bool contains(const MatchSpec& m, RuleOrigin origin) const;

    const std::vector<Rule>& rules() const { return rules_; }
    Rule& at(std::size_t seq) { return rules_[seq]; }

private:
    std::vector<Rule> rules_;
    std::vector<std::size_t> order_; // by priority desc, seq asc
};

/// Proactive inspection rules plus the default forward. Device, gateway and local
/// networks are resolved per packet by the tracker (see SideInfo), so the table
/// itself is the same for every device.
RuleTable init_rule_table();

enum class Initiator : std::uint8_t { Device, Remote, Unknown };
std::string_view to_string(Initiator i);

struct FlowEndpoint {
    enum class Kind : std::uint8_t { Gateway, LocalNetwork, Domain, Literal };
    Kind kind = Kind::Literal;
    std::string name; // Domain
    Ipv4 ip;          // Literal

    static FlowEndpoint gateway() { return {Kind::Gateway, {}, {}}; }
    static FlowEndpoint local_network() { return {Kind::LocalNetwork, {}, {}}; }
    static FlowEndpoint domain(std::string n) { return {Kind::Domain, std::move(n), {}}; }
    static FlowEndpoint literal(Ipv4 ip) { return {Kind::Literal, {}, ip}; }

    std::string to_string() const;
    auto operator<=>(const FlowEndpoint&) const = default;
};

struct FlowRecord {
    MacAddress device_mac;
    Channel channel = Channel::Local;
    Direction direction = Direction::FromDevice;
    FlowEndpoint remote;
    int ip_proto = 0;
    PortRange device_port;
    PortRange remote_port;
    std::optional<std::uint8_t> icmp_type;
    std::optional<std::uint8_t> icmp_code;
    Initiator initiated_by = Initiator::Unknown;
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;
    double first_seen = 0.0;
    double last_seen = 0.0;
    bool stun = false;
    // Wire ports of the (first) conversation behind this record; 0 for ICMP.
    std::uint16_t observed_device_port = 0;
    std::uint16_t observed_remote_port = 0;

    /// Everything but the counters/timestamps; records with equal keys are merged.
    auto key() const {
        return std::tie(device_mac, channel, direction, remote, ip_proto, device_port, remote_port, icmp_type,
                        icmp_code);
    }
    bool operator<(const FlowRecord& o) const { return key() < o.key(); }
    bool operator==(const FlowRecord& o) const;
};

struct TrackerOptions {
    std::uint32_t dns_ttl_floor = 60;
    /// Responder sends at least this multiple of the initiator's bytes...
    double udp_byte_ratio = 2.0;
    /// ...after at least this many packets.
    std::uint64_t udp_min_packets = 3;
};

struct ProcessResult {
    std::size_t fired = 0;
    std::vector<Rule> inserted;
};

/// Replays one device's packets through a simulated switch and accumulates its flows.
class FlowTracker {
public:
    FlowTracker(MacAddress device_mac, MacAddress gateway_mac, std::vector<Subnet> local_subnets,
                TrackerOptions opts = {});

    /// Returns nullopt when the event does not involve the device.
    std::optional<ProcessResult> process(const PacketEvent& ev);
    std::vector<FlowRecord> finalize() const;
    /// One record per conversation and direction with traffic, before merging.
    std::vector<FlowRecord> conversation_flows() const;

    const RuleTable& table() const { return table_; }
    const DnsCache& dns_cache() const { return dns_; }
    const DnsStats& dns_stats() const { return dns_stats_; }
    const std::vector<SsdpEvent>& ssdp_events() const { return ssdp_events_; }
    const std::set<std::uint16_t>& ssdp_ports() const { return ssdp_.learned_ports(); }
    double first_timestamp() const { return first_ts_; }
    double last_timestamp() const { return last_ts_; }
    std::size_t packets_seen() const { return packets_; }

    bool is_local(Ipv4 ip) const;

private:
    struct ConvKey {
        int proto;
        Ipv4 remote_ip;
        std::uint16_t device_port;
        std::uint16_t remote_port;
        // ICMP only
        Direction direction;
        std::uint8_t icmp_type;
        std::uint8_t icmp_code;
        auto operator<=>(const ConvKey&) const = default;
    };
    struct Conversation {
        Channel channel;
        FlowEndpoint remote;
        double first_seen = 0, last_seen = 0;
        std::uint64_t packets[2] = {0, 0}; // indexed by Direction
        std::uint64_t bytes[2] = {0, 0};
        std::optional<Direction> syn_from;
        std::optional<Direction> synack_from;
        bool stun = false;
    };

    std::vector<FlowRecord> staged(bool with_alternatives) const;
    SideInfo side(Ipv4 ip, const MacAddress& mac, double at) const;
    void insert_reactive(const ConvKey& key, const Conversation& conv, Direction dir, bool syn,
                         std::vector<Rule>& out);

    MacAddress device_;
    MacAddress gateway_;
    std::vector<Subnet> subnets_;
    TrackerOptions opts_;
    RuleTable table_;
    DnsCache dns_;
    DnsStats dns_stats_;
    SsdpTracker ssdp_;
    std::vector<SsdpEvent> ssdp_events_;
    std::map<ConvKey, Conversation> convs_;
    double first_ts_ = 0, last_ts_ = 0;
    std::size_t packets_ = 0;
};

/// Runs a whole trace through a fresh tracker.
struct TrackResult {
    std::vector<FlowRecord> flows;
    DnsCache dns;
    std::vector<SsdpEvent> ssdp_events;
    std::set<std::uint16_t> ssdp_ports;
    double first_timestamp = 0;
    double last_timestamp = 0;
    std::size_t device_packets = 0;
};

TrackResult track_device(const std::vector<PacketEvent>& events, const MacAddress& device_mac,
                         const MacAddress& gateway_mac, const std::vector<Subnet>& local_subnets,
                         TrackerOptions opts = {});

std::vector<Subnet> default_local_subnets();

/// CSV columns: device_mac,channel,direction,endpoint,proto,device_port,remote_port,
/// icmp_type,icmp_code,initiated_by,packets,bytes
void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& flows);

} // namespace mudscope
