#include "mudscope/runtime.hpp"

#include "mudscope/public_suffix.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <ostream>
#include <sstream>

namespace mudscope {

namespace {

bool ported(const std::optional<int>& proto) {
    return proto && (*proto == ipproto::tcp || *proto == ipproto::udp);
}

double span(PortRange r) { return double(r.hi) - double(r.lo) + 1.0; }

double volume(const Branch& b) {
    if (!b.proto) return 256.0 * 65536.0 * 65536.0;
    if (*b.proto == ipproto::icmp) return (b.icmp_type ? 1.0 : 256.0) * (b.icmp_code ? 1.0 : 256.0);
    if (ported(b.proto)) return span(b.device_port) * span(b.remote_port);
    return 1.0;
}

} // namespace

bool Branch::within(const Branch& rule) const {
    if (direction != rule.direction) return false;
    if (rule.endpoint.kind == EndpointClass::Kind::Any) {
        if (channel != Channel::Internet) return false;
    } else if (!rule.endpoint.covers(endpoint)) {
        return false;
    }
    if (!rule.proto) return true;
    if (proto != rule.proto) return false;
    if (ported(proto)) return rule.device_port.contains(device_port) && rule.remote_port.contains(remote_port);
    if (*proto == ipproto::icmp) {
        if (rule.icmp_type && icmp_type != rule.icmp_type) return false;
        if (rule.icmp_code && icmp_code != rule.icmp_code) return false;
    }
    return true;
}

std::string Branch::endpoint_label() const {
    switch (endpoint.kind) {
    case EndpointClass::Kind::Domain: return endpoint.value;
    case EndpointClass::Kind::Controller:
        return endpoint.value == kGatewayNamespace ? "gateway" : endpoint.to_string();
    case EndpointClass::Kind::Any: return "*";
    default: return endpoint.to_string();
    }
}

std::string Branch::leaf_label() const {
    if (!proto) return "any";
    std::string s = proto_name(*proto);
    if (ported(proto)) return s + " dev:" + device_port.to_string() + " rem:" + remote_port.to_string();
    if (*proto == ipproto::icmp) {
        s += " type:" + (icmp_type ? std::to_string(*icmp_type) : std::string("*"));
        s += " code:" + (icmp_code ? std::to_string(*icmp_code) : std::string("*"));
    }
    return s;
}

Branch branch_of(const MudAce& ace, std::string_view gateway_namespace) {
    Branch b;
    b.channel = ace.channel();
    b.direction = ace.direction;
    b.endpoint = EndpointClass::of(ace.endpoint);
    if (b.endpoint.kind == EndpointClass::Kind::Controller && b.endpoint.value == gateway_namespace)
        b.endpoint.value = std::string(kGatewayNamespace);
    b.proto = ace.ip_proto;
    if (ported(b.proto)) {
        b.device_port = ace.device_port();
        b.remote_port = ace.remote_port();
    } else if (b.proto == ipproto::icmp) {
        b.icmp_type = ace.icmp_type;
        b.icmp_code = ace.icmp_code;
    }
    return b;
}

EndpointClass endpoint_class_of(const FlowEndpoint& e, std::string_view gateway_namespace) {
    switch (e.kind) {
    case FlowEndpoint::Kind::Gateway: return {EndpointClass::Kind::Controller, std::string(gateway_namespace), {}};
    case FlowEndpoint::Kind::LocalNetwork: return EndpointClass::local_networks();
    case FlowEndpoint::Kind::Domain: return {EndpointClass::Kind::Domain, e.name, {}};
    case FlowEndpoint::Kind::Literal: return {EndpointClass::Kind::Literal, {}, e.ip};
    }
    return {};
}

ProfileTree::ProfileTree(std::size_t branch_cap, std::string root_label) : cap_(branch_cap) {
    Node root;
    root.label = std::move(root_label);
    nodes_.push_back(std::move(root));
}

int ProfileTree::child(int parent, Node::Kind kind, const std::string& label, double first, double last) {
    for (int c : nodes_[static_cast<std::size_t>(parent)].children) {
        Node& n = nodes_[static_cast<std::size_t>(c)];
        if (n.kind == kind && n.label == label) {
            n.first_seen = std::min(n.first_seen, first);
            n.last_seen = std::max(n.last_seen, last);
            return c;
        }
    }
    Node n;
    n.kind = kind;
    n.label = label;
    n.parent = parent;
    n.first_seen = first;
    n.last_seen = last;
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size() - 1);
    auto& kids = nodes_[static_cast<std::size_t>(parent)].children;
    auto pos = std::lower_bound(kids.begin(), kids.end(), label, [&](int k, const std::string& l) {
        return nodes_[static_cast<std::size_t>(k)].label < l;
    });
    kids.insert(pos, id);
    return id;
}

ProfileTree::Insert ProfileTree::insert(const Branch& b, double first_seen, double last_seen) {
    if (auto it = leaf_of_.find(b); it != leaf_of_.end()) {
        for (int n = it->second; n >= 0; n = nodes_[static_cast<std::size_t>(n)].parent) {
            Node& node = nodes_[static_cast<std::size_t>(n)];
            node.first_seen = std::min(node.first_seen, first_seen);
            node.last_seen = std::max(node.last_seen, last_seen);
        }
        return Insert::Duplicate;
    }
    if (leaf_of_.size() >= cap_) {
        ++rejected_;
        return Insert::Rejected;
    }
    Node& root = nodes_.front();
    if (leaf_of_.empty()) {
        root.first_seen = first_seen;
        root.last_seen = last_seen;
    } else {
        root.first_seen = std::min(root.first_seen, first_seen);
        root.last_seen = std::max(root.last_seen, last_seen);
    }
    int n = child(0, Node::Kind::Channel, b.channel == Channel::Internet ? "Internet" : "Local", first_seen, last_seen);
    n = child(n, Node::Kind::Direction, std::string(to_string(b.direction)), first_seen, last_seen);
    n = child(n, Node::Kind::Endpoint, b.endpoint_label(), first_seen, last_seen);
    n = child(n, Node::Kind::Leaf, b.leaf_label(), first_seen, last_seen);
    leaf_of_.emplace(b, n);
    return Insert::Added;
}

std::vector<Branch> ProfileTree::branches() const {
    std::vector<Branch> out;
    out.reserve(leaf_of_.size());
    for (const auto& [b, _] : leaf_of_) out.push_back(b);
    return out;
}

std::size_t ProfileTree::branch_count(Channel c) const {
    return static_cast<std::size_t>(
        std::count_if(leaf_of_.begin(), leaf_of_.end(), [c](const auto& kv) { return kv.first.channel == c; }));
}

std::pair<double, double> ProfileTree::seen(const Branch& b) const {
    auto it = leaf_of_.find(b);
    if (it == leaf_of_.end()) return {0, 0};
    const Node& n = nodes_[static_cast<std::size_t>(it->second)];
    return {n.first_seen, n.last_seen};
}

std::size_t ProfileTree::memory_bytes() const {
    std::size_t bytes = 0;
    for (const auto& n : nodes_) {
        bytes += sizeof(Node) + n.children.capacity() * sizeof(int);
        if (n.label.capacity() > 15) bytes += n.label.capacity() + 1;
    }
    return bytes;
}

std::string ProfileTree::render_text() const {
    std::ostringstream out;
    auto walk = [&](auto&& self, int id, int depth) -> void {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << n.label << '\n';
        for (int c : n.children) self(self, c, depth + 1);
    };
    walk(walk, 0, 0);
    return out.str();
}

std::string ProfileTree::to_json() const {
    auto walk = [&](auto&& self, int id) -> nlohmann::ordered_json {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        nlohmann::ordered_json j;
        j["name"] = n.label;
        j["first_seen"] = n.first_seen;
        j["last_seen"] = n.last_seen;
        if (!n.children.empty()) {
            auto kids = nlohmann::ordered_json::array();
            for (int c : n.children) kids.push_back(self(self, c));
            j["children"] = std::move(kids);
        }
        return j;
    };
    return walk(walk, 0).dump(2);
}

ProfileTree ProfileTree::from_mud(const MudProfile& profile, std::string_view gateway_namespace,
                                  std::size_t branch_cap) {
    ProfileTree t(branch_cap, profile.systeminfo.empty() ? "device" : profile.systeminfo);
    for (const auto& ace : profile.aces())
        if (ace.action == AceAction::Accept) t.insert(branch_of(ace, gateway_namespace));
    return t;
}

KnownMud make_known(std::string name, const MudProfile& profile, std::string_view gateway_namespace) {
    KnownMud k{std::move(name), profile, {}};
    for (const auto& ace : profile.aces())
        if (ace.action == AceAction::Accept) k.branches.push_back(branch_of(ace, gateway_namespace));
    std::sort(k.branches.begin(), k.branches.end());
    k.branches.erase(std::unique(k.branches.begin(), k.branches.end()), k.branches.end());
    return k;
}

std::size_t update_tree(ProfileTree& tree, const FlowRecord& flow, const std::vector<KnownMud>& known,
                        std::string_view gateway_namespace) {
    if (flow.packets == 0) return 0;
    Branch b;
    b.channel = flow.channel;
    b.direction = flow.direction;
    b.endpoint = endpoint_class_of(flow.remote, gateway_namespace);
    b.proto = flow.ip_proto;
    auto add = [&](const Branch& x) {
        return tree.insert(x, flow.first_seen, flow.last_seen) == ProfileTree::Insert::Added ? 1u : 0u;
    };

    if (flow.ip_proto == ipproto::icmp) {
        b.icmp_type = flow.icmp_type;
        b.icmp_code = flow.icmp_code;
        return add(b);
    }
    if (flow.ip_proto == ipproto::tcp) {
        b.device_port = flow.device_port;
        b.remote_port = flow.remote_port;
        return add(b);
    }
    if (flow.ip_proto != ipproto::udp) return add(b);

    if (flow.observed_device_port == 0 && flow.observed_remote_port == 0) {
        b.device_port = flow.device_port;
        b.remote_port = flow.remote_port;
        return add(b);
    }
    Branch point = b;
    point.device_port = PortRange::exact(flow.observed_device_port);
    point.remote_port = PortRange::exact(flow.observed_remote_port);
    const Branch* best = nullptr;
    for (const auto& m : known)
        for (const auto& mb : m.branches) {
            if (mb.proto != ipproto::udp || !point.within(mb)) continue;
            if (!best || volume(mb) < volume(*best) ||
                (volume(mb) == volume(*best) && mb.endpoint.depth() > best->endpoint.depth()))
                best = &mb;
        }
    if (best) {
        b.device_port = best->device_port;
        b.remote_port = best->remote_port;
        return add(b);
    }
    Branch by_device = b, by_remote = b;
    by_device.device_port = point.device_port;
    by_remote.remote_port = point.remote_port;
    return add(by_device) + add(by_remote);
}

std::optional<std::size_t> morph_target(const Branch& b, const KnownMud& m) {
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < m.branches.size(); ++j) {
        const Branch& mb = m.branches[j];
        if (!b.within(mb)) continue;
        if (!best) {
            best = j;
            continue;
        }
        const Branch& cur = m.branches[*best];
        const int dj = mb.endpoint.depth(), dc = cur.endpoint.depth();
        if (dj > dc || (dj == dc && volume(mb) < volume(cur))) best = j;
    }
    return best;
}

SimilarityScore score(const ProfileTree& r, const KnownMud& m) {
    std::vector<bool> hit(m.branches.size(), false);
    std::size_t unmatched[2] = {0, 0};
    for (const auto& b : r.branches()) {
        if (auto j = morph_target(b, m)) hit[*j] = true;
        else ++unmatched[static_cast<int>(b.channel)];
    }
    SimilarityScore s;
    auto fill = [](ChannelScore& c) {
        c.sim_d = c.r_size ? double(c.intersection) / double(c.r_size) : 0.0;
        c.sim_s = c.m_size ? double(c.intersection) / double(c.m_size) : 0.0;
    };
    for (Channel c : {Channel::Local, Channel::Internet}) {
        ChannelScore& cs = c == Channel::Local ? s.local : s.internet;
        for (std::size_t j = 0; j < m.branches.size(); ++j) {
            if (m.branches[j].channel != c) continue;
            ++cs.m_size;
            if (hit[j]) ++cs.intersection;
        }
        cs.r_size = cs.intersection + unmatched[static_cast<int>(c)];
        fill(cs);
        s.aggregate.intersection += cs.intersection;
        s.aggregate.r_size += cs.r_size;
        s.aggregate.m_size += cs.m_size;
    }
    fill(s.aggregate);
    return s;
}

std::size_t intersect(const ProfileTree& r, const KnownMud& m) { return score(r, m).aggregate.intersection; }

ProfileTree diff(const ProfileTree& r, const KnownMud& m) {
    ProfileTree out(r.branch_cap(), r.nodes().front().label);
    for (const auto& b : r.branches()) {
        if (morph_target(b, m)) continue;
        auto [first, last] = r.seen(b);
        out.insert(b, first, last);
    }
    return out;
}

std::optional<Thresholds> Thresholds::parse(std::string_view text) {
    Thresholds t;
    double* fields[] = {&t.dyn_internet, &t.dyn_local, &t.static_internet};
    std::size_t i = 0;
    while (true) {
        auto comma = text.find(',');
        std::string_view part = text.substr(0, comma);
        if (i >= 3) return std::nullopt;
        double v = 0;
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc() || p != part.data() + part.size() || v < 0.0 || v > 1.0) return std::nullopt;
        *fields[i++] = v;
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    if (i != 3) return std::nullopt;
    return t;
}

int classify_state(double sim_d, double sim_s, const Thresholds& t) {
    const bool dyn = sim_d >= t.dyn_internet, stat = sim_s >= t.static_internet;
    if (dyn) return stat ? 1 : 2;
    return stat ? 3 : 4;
}

int classify_state(const SimilarityScore& s, const Thresholds& t) {
    bool any_active = false, dyn = true;
    if (s.internet.r_size) {
        any_active = true;
        dyn = dyn && s.internet.sim_d >= t.dyn_internet;
    }
    if (s.local.r_size) {
        any_active = true;
        dyn = dyn && s.local.sim_d >= t.dyn_local;
    }
    dyn = dyn && any_active;
    const double stat_score = s.internet.m_size ? s.internet.sim_s : s.aggregate.sim_s;
    const bool stat = stat_score >= t.static_internet;
    if (dyn) return stat ? 1 : 2;
    return stat ? 3 : 4;
}

IdentificationState epoch_step(const IdentificationState& prev, const ProfileTree& tree,
                               const std::vector<KnownMud>& known, const Thresholds& t,
                               std::vector<CandidateScore>* scores_out) {
    constexpr double eps = 1e-12;
    std::vector<CandidateScore> scores;
    scores.reserve(known.size());
    for (const auto& m : known) scores.push_back({m.name, score(tree, m)});

    const bool active[2] = {tree.branch_count(Channel::Local) > 0, tree.branch_count(Channel::Internet) > 0};
    const double dyn_threshold[2] = {t.dyn_local, t.dyn_internet};

    std::vector<std::size_t> eligible;
    if (active[0] || active[1]) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            bool ok = true;
            for (Channel c : {Channel::Local, Channel::Internet}) {
                const int ci = static_cast<int>(c);
                if (active[ci] && scores[i].score.channel(c).sim_d < dyn_threshold[ci]) ok = false;
            }
            if (ok) eligible.push_back(i);
        }
    }

    auto argmax = [&](auto value) {
        std::set<std::string> out;
        double best = -1;
        for (auto i : eligible) best = std::max(best, value(scores[i].score));
        for (auto i : eligible)
            if (value(scores[i].score) >= best - eps) out.insert(scores[i].name);
        return out;
    };

    IdentificationState next = prev;
    next.epochs = prev.epochs + 1;
    next.channel_disagreement = false;
    std::set<std::string> winners;
    bool first = true;
    for (Channel c : {Channel::Local, Channel::Internet}) {
        if (!active[static_cast<int>(c)] || eligible.empty()) continue;
        auto w = argmax([c](const SimilarityScore& s) { return s.channel(c).sim_d; });
        if (first) {
            winners = std::move(w);
            first = false;
        } else {
            std::set<std::string> both;
            std::set_intersection(winners.begin(), winners.end(), w.begin(), w.end(),
                                  std::inserter(both, both.end()));
            winners = std::move(both);
        }
    }
    if (winners.empty() && !eligible.empty()) {
        next.channel_disagreement = true;
        winners = argmax([](const SimilarityScore& s) { return s.aggregate.sim_d; });
    }

    if (!prev.winners.empty()) {
        std::set<std::string> kept;
        for (const auto& w : prev.winners)
            if (winners.contains(w)) kept.insert(w);
        if (!kept.empty()) winners = std::move(kept);
    }
    next.winners.assign(winners.begin(), winners.end());
    if (!next.winners.empty()) next.reference = next.winners;

    next.state.reset();
    if (!next.reference.empty()) {
        for (const auto& s : scores)
            if (s.name == next.reference.front()) next.state = classify_state(s.score, t);
    }
    if (scores_out) *scores_out = std::move(scores);
    return next;
}

ProfileTree compact_endpoints(const ProfileTree& tree) {
    ProfileTree out(tree.branch_cap(), tree.nodes().front().label);
    for (const auto& b : tree.branches()) {
        auto [first, last] = tree.seen(b);
        Branch c = b;
        if (c.endpoint.kind == EndpointClass::Kind::Domain) c.endpoint.value = compact_domain(c.endpoint.value);
        out.insert(c, first, last);
    }
    return out;
}

MudProfile compact_endpoints(const MudProfile& profile) {
    MudProfile out = profile;
    for (auto* list : {&out.from_device, &out.to_device}) {
        std::vector<MudAce> kept;
        for (auto ace : *list) {
            if (ace.endpoint.kind == AceEndpoint::Kind::Domain) ace.endpoint.value = compact_domain(ace.endpoint.value);
            bool dup = std::any_of(kept.begin(), kept.end(), [&](const MudAce& k) {
                MudAce a = ace;
                a.name = k.name;
                return a == k;
            });
            if (!dup) kept.push_back(std::move(ace));
        }
        *list = std::move(kept);
    }
    return out;
}

SsdpSplit ssdp_split(const std::vector<FlowRecord>& flows, const std::set<std::uint16_t>& learned_ports) {
    SsdpSplit out{ProfileTree(1u << 20, "discovery"), {}};
    auto ssdp_port = [&](std::uint16_t p) { return p == 1900 || learned_ports.contains(p); };
    for (const auto& f : flows) {
        bool ssdp = false;
        if (f.channel == Channel::Local && f.ip_proto == ipproto::udp) {
            if (f.observed_device_port || f.observed_remote_port) {
                ssdp = ssdp_port(f.observed_device_port) || ssdp_port(f.observed_remote_port);
            } else {
                ssdp = (f.device_port.is_exact() && ssdp_port(f.device_port.lo)) ||
                       (f.remote_port.is_exact() && ssdp_port(f.remote_port.lo));
            }
        }
        if (ssdp) update_tree(out.ssdp, f, {});
        else out.remaining.push_back(f);
    }
    return out;
}

namespace {

nlohmann::ordered_json channel_json(const ChannelScore& c) {
    nlohmann::ordered_json j;
    j["sim_d"] = c.sim_d;
    j["sim_s"] = c.sim_s;
    j["intersection"] = c.intersection;
    j["r"] = c.r_size;
    j["m"] = c.m_size;
    return j;
}

} // namespace

std::string epoch_report_json(const EpochReport& r) {
    nlohmann::ordered_json j;
    j["device"] = r.device;
    j["epoch"] = r.epoch;
    j["end_time"] = r.end_time;
    j["branches"] = r.branches;
    auto scores = nlohmann::ordered_json::array();
    for (const auto& s : r.scores) {
        nlohmann::ordered_json e;
        e["mud"] = s.name;
        e["local"] = channel_json(s.score.local);
        e["internet"] = channel_json(s.score.internet);
        e["aggregate"] = channel_json(s.score.aggregate);
        scores.push_back(std::move(e));
    }
    j["scores"] = std::move(scores);
    j["winners"] = r.winners;
    j["state"] = r.state ? nlohmann::ordered_json(*r.state) : nlohmann::ordered_json(nullptr);
    j["channel_disagreement"] = r.channel_disagreement;
    j["compacted"] = r.compacted;
    return j.dump();
}

IdentifyResult identify_device(const std::vector<PacketEvent>& events, const MacAddress& device_mac,
                               const MacAddress& gateway_mac, const std::vector<Subnet>& local_subnets,
                               const std::vector<KnownMud>& library, const IdentifyOptions& opts,
                               const std::string& device_label) {
    const Thresholds& th = opts.thresholds;
    IdentifyResult result{{}, {}, ProfileTree(opts.branch_cap, device_label), ProfileTree(1u << 20, "discovery"), {}};
    if (events.empty()) return result;

    std::vector<const PacketEvent*> order;
    order.reserve(events.size());
    for (const auto& e : events) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(),
                     [](const PacketEvent* a, const PacketEvent* b) { return a->timestamp < b->timestamp; });

    FlowTracker tracker(device_mac, gateway_mac, local_subnets, opts.tracker);
    std::vector<KnownMud> lib = library;
    IdentificationState state;
    auto compact_library = [&] {
        for (auto& m : lib) m = make_known(m.name, compact_endpoints(m.profile), opts.gateway_namespace);
        // Rebuilt from the flows so UDP leaves get another chance to adopt a library box.
        result.tree = ProfileTree(opts.branch_cap, device_label);
        state.compacted = true;
    };
    if (opts.compact) compact_library();

    const double t0 = opts.start_time ? *opts.start_time : order.front()->timestamp;
    const double epoch = th.epoch_seconds > 0 ? th.epoch_seconds : 900;

    auto close_epoch = [&](double end) {
        std::vector<FlowRecord> flows = tracker.conversation_flows();
        if (opts.split_ssdp) {
            SsdpSplit split = ssdp_split(flows, tracker.ssdp_ports());
            for (const auto& b : split.ssdp.branches()) {
                auto [first, last] = split.ssdp.seen(b);
                result.ssdp.insert(b, first, last);
            }
            flows = std::move(split.remaining);
        }
        auto feed = [&] {
            for (auto f : flows) {
                if (state.compacted && f.remote.kind == FlowEndpoint::Kind::Domain)
                    f.remote.name = compact_domain(f.remote.name);
                update_tree(result.tree, f, lib, opts.gateway_namespace);
            }
        };
        feed();
        const IdentificationState before = state;
        std::vector<CandidateScore> scores;
        state = epoch_step(before, result.tree, lib, th, &scores);
        if (!state.compacted && th.compaction_after_seconds && end - t0 >= *th.compaction_after_seconds &&
            !state.converged()) {
            compact_library();
            feed();
            IdentificationState redo = before;
            redo.compacted = true;
            state = epoch_step(redo, result.tree, lib, th, &scores);
        }
        EpochReport rep;
        rep.device = device_label;
        rep.epoch = state.epochs;
        rep.end_time = end;
        rep.branches = result.tree.branch_count();
        rep.scores = std::move(scores);
        rep.winners = state.winners;
        rep.state = state.state;
        rep.channel_disagreement = state.channel_disagreement;
        rep.compacted = state.compacted;
        result.epochs.push_back(std::move(rep));
    };

    double boundary = t0 + epoch;
    for (const PacketEvent* ev : order) {
        while (ev->timestamp >= boundary) {
            close_epoch(boundary);
            boundary += epoch;
        }
        tracker.process(*ev);
    }
    close_epoch(boundary);

    result.final_state = state;
    result.flows = tracker.finalize();
    return result;
}

void write_confusion_csv(std::ostream& out, const std::vector<std::string>& library_names,
                         const std::vector<std::pair<std::string, std::vector<std::string>>>& outcomes) {
    std::vector<std::string> cols = library_names;
    cols.push_back("none");
    cols.push_back("multiple");
    std::vector<std::string> rows;
    for (const auto& [label, _] : outcomes)
        if (std::find(rows.begin(), rows.end(), label) == rows.end()) rows.push_back(label);
    std::sort(rows.begin(), rows.end());

    std::map<std::pair<std::string, std::string>, int> counts;
    for (const auto& [label, winners] : outcomes) {
        const std::string col = winners.empty() ? "none" : winners.size() > 1 ? "multiple" : winners.front();
        ++counts[{label, col}];
    }
    out << "actual";
    for (const auto& c : cols) out << ',' << c;
    out << '\n';
    for (const auto& r : rows) {
        out << r;
        for (const auto& c : cols) {
            auto it = counts.find({r, c});
            out << ',' << (it == counts.end() ? 0 : it->second);
        }
        out << '\n';
    }
}

} // namespace mudscope
