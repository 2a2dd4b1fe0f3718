#pragma once

#include "mudscope/endpoint_class.hpp"
#include "mudscope/flow_tracker.hpp"
#include "mudscope/mud.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mudscope {

/// One root-to-leaf path of a profile tree.
struct Branch {
    Channel channel = Channel::Local;
    Direction direction = Direction::FromDevice;
    EndpointClass endpoint;
    std::optional<int> proto; // nullopt: any protocol
    PortRange device_port;
    PortRange remote_port;
    std::optional<std::uint8_t> icmp_type;
    std::optional<std::uint8_t> icmp_code;

    /// Whether every packet of this branch falls under `rule` (a MUD-derived branch).
    bool within(const Branch& rule) const;
    std::string endpoint_label() const;
    std::string leaf_label() const;

    auto operator<=>(const Branch&) const = default;
};

Branch branch_of(const MudAce& ace, std::string_view gateway_namespace = kGatewayNamespace);
EndpointClass endpoint_class_of(const FlowEndpoint& e, std::string_view gateway_namespace = kGatewayNamespace);

/// root -> channel -> direction -> endpoint -> leaf, with per-node first/last seen.
class ProfileTree {
public:
    struct Node {
        enum class Kind : std::uint8_t { Root, Channel, Direction, Endpoint, Leaf };
        Kind kind = Kind::Root;
        std::string label;
        int parent = -1;
        std::vector<int> children;
        double first_seen = 0;
        double last_seen = 0;
    };
    enum class Insert : std::uint8_t { Added, Duplicate, Rejected };

    explicit ProfileTree(std::size_t branch_cap = 512, std::string root_label = "device");

    Insert insert(const Branch& b, double first_seen = 0, double last_seen = 0);
    bool contains(const Branch& b) const { return leaf_of_.contains(b); }

    /// Sorted.
    std::vector<Branch> branches() const;
    std::size_t branch_count() const { return leaf_of_.size(); }
    std::size_t branch_count(Channel c) const;
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t rejected() const { return rejected_; }
    std::size_t branch_cap() const { return cap_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    std::pair<double, double> seen(const Branch& b) const;

    /// Heap plus inline bytes held by the nodes.
    std::size_t memory_bytes() const;

    /// Two-space indentation per level.
    std::string render_text() const;
    std::string to_json() const;

    static ProfileTree from_mud(const MudProfile& profile, std::string_view gateway_namespace = kGatewayNamespace,
                                std::size_t branch_cap = 1u << 20);

private:
    int child(int parent, Node::Kind kind, const std::string& label, double first, double last);

    std::size_t cap_;
    std::size_t rejected_ = 0;
    std::vector<Node> nodes_;
    std::map<Branch, int> leaf_of_;
};

/// A library profile with its morph-normalized branch set.
struct KnownMud {
    std::string name;
    MudProfile profile;
    std::vector<Branch> branches; // distinct, sorted, accept ACEs only
};

KnownMud make_known(std::string name, const MudProfile& profile,
                    std::string_view gateway_namespace = kGatewayNamespace);

/// Adds the flow's branches. TCP and ICMP go in directly; a UDP flow adopts the narrowest
/// library port box containing its wire ports, else splits into a device-port leaf and a
/// remote-port leaf. Returns the number of branches added.
std::size_t update_tree(ProfileTree& tree, const FlowRecord& flow, const std::vector<KnownMud>& known,
                        std::string_view gateway_namespace = kGatewayNamespace);

struct ChannelScore {
    double sim_d = 0;
    double sim_s = 0;
    std::size_t intersection = 0;
    std::size_t r_size = 0;
    std::size_t m_size = 0;
};

struct SimilarityScore {
    ChannelScore local;
    ChannelScore internet;
    ChannelScore aggregate;

    const ChannelScore& channel(Channel c) const { return c == Channel::Local ? local : internet; }
};

/// Index into `m.branches` that `b` morphs onto, or nullopt when no MUD branch admits it.
/// Among several candidates the deepest endpoint class, then the narrowest box, wins.
std::optional<std::size_t> morph_target(const Branch& b, const KnownMud& m);

/// |R ∩ M| after morphing R onto M.
std::size_t intersect(const ProfileTree& r, const KnownMud& m);
SimilarityScore score(const ProfileTree& r, const KnownMud& m);

/// Branches of R that M does not admit.
ProfileTree diff(const ProfileTree& r, const KnownMud& m);

struct Thresholds {
    double dyn_internet = 0.60;
    double dyn_local = 0.75;
    double static_internet = 0.50;
    double epoch_seconds = 900;
    /// Identification that has not settled on one winner by then counts as non-converged.
    double convergence_seconds = 12 * 900;
    /// Endpoint compaction kicks in after this long without convergence.
    std::optional<double> compaction_after_seconds;

    /// "dyn_internet,dyn_local,static_internet"
    static std::optional<Thresholds> parse(std::string_view text);
};

/// 1: high/high, 2: high dynamic only, 3: high static only, 4: low/low.
int classify_state(double sim_d, double sim_s, const Thresholds& t);
/// Dynamic is high when every channel R uses clears its threshold; static uses the Internet
/// channel when M has one, the aggregate otherwise.
int classify_state(const SimilarityScore& s, const Thresholds& t);

struct CandidateScore {
    std::string name;
    SimilarityScore score;
};

struct IdentificationState {
    std::vector<std::string> winners; // sorted
    /// Last non-empty winner set; kept so a deviating device still has a reference profile.
    std::vector<std::string> reference;
    std::optional<int> state;
    int epochs = 0;
    bool compacted = false;
    bool channel_disagreement = false;

    bool converged() const { return winners.size() == 1; }
};

IdentificationState epoch_step(const IdentificationState& prev, const ProfileTree& tree,
                               const std::vector<KnownMud>& known, const Thresholds& t,
                               std::vector<CandidateScore>* scores = nullptr);

ProfileTree compact_endpoints(const ProfileTree& tree);
MudProfile compact_endpoints(const MudProfile& profile);

struct SsdpSplit {
    ProfileTree ssdp;
    std::vector<FlowRecord> remaining;
};

/// Local UDP flows on port 1900 or a learned SSDP port go to the discovery profile.
SsdpSplit ssdp_split(const std::vector<FlowRecord>& flows, const std::set<std::uint16_t>& learned_ports);

struct EpochReport {
    std::string device;
    int epoch = 0;
    double end_time = 0;
    std::size_t branches = 0;
    std::vector<CandidateScore> scores;
    std::vector<std::string> winners;
    std::optional<int> state;
    bool channel_disagreement = false;
    bool compacted = false;
};

std::string epoch_report_json(const EpochReport& r);

struct IdentifyOptions {
    Thresholds thresholds;
    bool compact = false;
    bool split_ssdp = true;
    std::size_t branch_cap = 512;
    std::string gateway_namespace{kGatewayNamespace};
    TrackerOptions tracker;
    /// Epoch boundaries count from here; the first packet when unset.
    std::optional<double> start_time;
};

struct IdentifyResult {
    std::vector<EpochReport> epochs;
    IdentificationState final_state;
    ProfileTree tree;
    ProfileTree ssdp;
    std::vector<FlowRecord> flows;
};

/// Replays one device's packets in epochs, rescoring the library at each boundary.
IdentifyResult identify_device(const std::vector<PacketEvent>& events, const MacAddress& device_mac,
                               const MacAddress& gateway_mac, const std::vector<Subnet>& local_subnets,
                               const std::vector<KnownMud>& library, const IdentifyOptions& opts = {},
                               const std::string& device_label = "device");

/// Rows are true labels, columns library names then "none" and "multiple".
void write_confusion_csv(std::ostream& out, const std::vector<std::string>& library_names,
                         const std::vector<std::pair<std::string, std::vector<std::string>>>& outcomes);

} // namespace mudscope
