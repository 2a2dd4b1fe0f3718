#include "mudscope/flow_tracker.hpp"

#include <algorithm>

namespace mudscope {

void DnsCache::insert(const DnsAnswer& a) {
    double ttl = std::max<double>(a.ttl, ttl_floor_);
    auto& v = bindings_[a.answer_ip];
    v.push_back({a.query_name, a.observed_at, a.observed_at + ttl});
}

std::optional<std::string> DnsCache::lookup(Ipv4 ip, double at) const {
    auto it = bindings_.find(ip);
    if (it == bindings_.end()) return std::nullopt;
    const Binding* best = nullptr;
    for (const auto& b : it->second)
        if (b.observed_at <= at && (!best || b.observed_at >= best->observed_at)) best = &b;
    if (!best || at > best->expiry) return std::nullopt;
    return best->name;
}

std::vector<Ipv4> DnsCache::addresses_of(const std::string& name) const {
    std::vector<Ipv4> out;
    for (const auto& [ip, v] : bindings_)
        if (std::any_of(v.begin(), v.end(), [&](const Binding& b) { return b.name == name; })) out.push_back(ip);
    return out;
}

std::string EndpointMatch::to_string() const {
    switch (kind) {
    case EndpointKind::Wildcard: return "*";
    case EndpointKind::Device: return "device";
    case EndpointKind::Literal: return ip.to_string();
    case EndpointKind::Domain: return name;
    case EndpointKind::Gateway: return "gateway";
    case EndpointKind::LocalNetwork: return "local-network";
    }
    return "?";
}

namespace {

bool endpoint_matches(const EndpointMatch& m, const SideInfo& s) {
    switch (m.kind) {
    case EndpointKind::Wildcard: return true;
    case EndpointKind::Device: return s.is_device;
    case EndpointKind::Literal: return s.ip == m.ip;
    case EndpointKind::Domain: return s.name && *s.name == m.name;
    case EndpointKind::Gateway: return s.is_gateway;
    case EndpointKind::LocalNetwork: return s.is_local && !s.is_device;
    }
    return false;
}

} // namespace

bool MatchSpec::matches(const PacketEvent& ev, const SideInfo& s, const SideInfo& d) const {
    if (ip_proto && *ip_proto != ev.ip_proto) return false;
    if (ev.ip_proto == ipproto::icmp) {
        if (!src_port.is_any() || !dst_port.is_any()) return false;
        if (icmp_type && ev.icmp_type != icmp_type) return false;
        if (icmp_code && ev.icmp_code != icmp_code) return false;
    } else {
        if (icmp_type || icmp_code) return false;
        if (!src_port.contains(ev.src_port) || !dst_port.contains(ev.dst_port)) return false;
    }
    if (syn_only && !(ev.ip_proto == ipproto::tcp && ev.tcp_syn && !ev.tcp_ack)) return false;
    return endpoint_matches(src, s) && endpoint_matches(dst, d);
}

std::string MatchSpec::to_string() const {
    std::string s = src.to_string() + " -> " + dst.to_string();
    s += " proto=" + (ip_proto ? proto_name(*ip_proto) : std::string("*"));
    if (icmp_type || icmp_code) {
        s += " icmp=" + (icmp_type ? std::to_string(*icmp_type) : std::string("*")) + "/" +
             (icmp_code ? std::to_string(*icmp_code) : std::string("*"));
    } else {
        s += " sport=" + src_port.to_string() + " dport=" + dst_port.to_string();
    }
    if (syn_only) s += " syn";
    return s;
}

std::string_view to_string(RuleGroup g) {
    switch (g) {
    case RuleGroup::None: return "-";
    case RuleGroup::FromLocal: return "from-local";
    case RuleGroup::ToLocal: return "to-local";
    case RuleGroup::FromInternet: return "from-internet";
    case RuleGroup::ToInternet: return "to-internet";
    }
    return "?";
}

RuleGroup group_of(Direction d, Channel c) {
    if (c == Channel::Local) return d == Direction::FromDevice ? RuleGroup::FromLocal : RuleGroup::ToLocal;
    return d == Direction::FromDevice ? RuleGroup::FromInternet : RuleGroup::ToInternet;
}

std::string Rule::to_string() const {
    std::string s = std::to_string(priority) + " " + (action == RuleAction::Mirror ? "mirror " : "forward ");
    s += origin == RuleOrigin::Proactive ? "proactive " : "reactive ";
    s += std::string(mudscope::to_string(group)) + " " + match.to_string();
    if (!label.empty()) s += " [" + label + "]";
    return s;
}

std::size_t RuleTable::insert(Rule rule) {
    rule.seq = rules_.size();
    rules_.push_back(std::move(rule));
    std::size_t id = rules_.size() - 1;
    auto pos = std::upper_bound(order_.begin(), order_.end(), id, [&](std::size_t a, std::size_t b) {
        if (rules_[a].priority != rules_[b].priority) return rules_[a].priority > rules_[b].priority;
        return a < b;
    });
    order_.insert(pos, id);
    return id;
}

std::optional<std::size_t> RuleTable::lookup(const PacketEvent& ev, const SideInfo& src, const SideInfo& dst) const {
    for (auto id : order_)
        if (rules_[id].match.matches(ev, src, dst)) return id;
    return std::nullopt;
}

bool RuleTable::contains(const MatchSpec& m, RuleOrigin origin) const {
    return std::any_of(rules_.begin(), rules_.end(),
                       [&](const Rule& r) { return r.origin == origin && r.match == m; });
}

RuleTable init_rule_table() {
    RuleTable t;
    auto mirror = [&](std::string label, int prio, MatchSpec m) {
        // Each inspection rule exists once per direction relative to the device.
        for (bool from_device : {true, false}) {
            Rule r;
            r.match = m;
            (from_device ? r.match.src : r.match.dst) = EndpointMatch::device();
            r.priority = prio;
            r.action = RuleAction::Mirror;
            r.label = label + (from_device ? "/from-device" : "/to-device");
            t.insert(std::move(r));
        }
    };
    MatchSpec dns_reply;
    dns_reply.src_port = PortRange::exact(53);
    mirror("dns-reply", priority::dns_reply, dns_reply);
    MatchSpec dns_query;
    dns_query.dst_port = PortRange::exact(53);
    mirror("dns-query", priority::dns_query, dns_query);
    MatchSpec ssdp;
    ssdp.ip_proto = ipproto::udp;
    ssdp.dst_port = PortRange::exact(1900);
    mirror("ssdp", priority::ssdp, ssdp);
    MatchSpec syn;
    syn.ip_proto = ipproto::tcp;
    syn.syn_only = true;
    mirror("tcp-syn", priority::tcp_syn, syn);
    MatchSpec udp;
    udp.ip_proto = ipproto::udp;
    mirror("unknown-udp", priority::unknown_udp, udp);
    MatchSpec icmp;
    icmp.ip_proto = ipproto::icmp;
    mirror("icmp", priority::icmp, icmp);
    MatchSpec tcp;
    tcp.ip_proto = ipproto::tcp;
    mirror("unknown-tcp", priority::unknown_tcp, tcp);
    Rule def;
    def.priority = priority::default_forward;
    def.label = "default";
    t.insert(std::move(def));
    return t;
}

std::string_view to_string(Initiator i) {
    switch (i) {
    case Initiator::Device: return "device";
    case Initiator::Remote: return "remote";
    case Initiator::Unknown: return "unknown";
    }
    return "?";
}

std::string FlowEndpoint::to_string() const {
    switch (kind) {
    case Kind::Gateway: return "gateway";
    case Kind::LocalNetwork: return "local-network";
    case Kind::Domain: return name;
    case Kind::Literal: return ip.to_string();
    }
    return "?";
}

bool FlowRecord::operator==(const FlowRecord& o) const {
    return key() == o.key() && initiated_by == o.initiated_by && packets == o.packets && bytes == o.bytes &&
           first_seen == o.first_seen && last_seen == o.last_seen && stun == o.stun;
}

std::vector<Subnet> default_local_subnets() {
    return {*Subnet::parse("10.0.0.0/8"), *Subnet::parse("172.16.0.0/12"), *Subnet::parse("192.168.0.0/16")};
}

FlowTracker::FlowTracker(MacAddress device_mac, MacAddress gateway_mac, std::vector<Subnet> local_subnets,
                         TrackerOptions opts)
    : device_(device_mac), gateway_(gateway_mac), subnets_(std::move(local_subnets)), opts_(opts),
      table_(init_rule_table()), dns_(opts.dns_ttl_floor) {}

bool FlowTracker::is_local(Ipv4 ip) const {
    if (ip.is_multicast() || ip.is_broadcast() || ip.is_link_local() || ip.is_loopback()) return true;
    return std::any_of(subnets_.begin(), subnets_.end(), [&](const Subnet& s) { return s.contains(ip); });
}

SideInfo FlowTracker::side(Ipv4 ip, const MacAddress& mac, double at) const {
    SideInfo s;
    s.ip = ip;
    s.is_device = mac == device_;
    s.is_local = is_local(ip);
    s.is_gateway = !s.is_device && mac == gateway_ && s.is_local && !ip.is_multicast() && !ip.is_broadcast();
    if (!s.is_local) s.name = dns_.lookup(ip, at);
    return s;
}

std::optional<ProcessResult> FlowTracker::process(const PacketEvent& ev) {
    if (!ev.involves(device_)) return std::nullopt;
    if (ev.ip_proto != ipproto::tcp && ev.ip_proto != ipproto::udp && ev.ip_proto != ipproto::icmp)
        return std::nullopt;
    const Direction dir = ev.src_mac == device_ ? Direction::FromDevice : Direction::ToDevice;
    if (packets_ == 0) first_ts_ = ev.timestamp;
    last_ts_ = std::max(last_ts_, ev.timestamp);
    ++packets_;

    if (ev.src_port == 53 || ev.dst_port == 53)
        for (const auto& a : extract_dns_answers(ev, dns_stats_)) dns_.insert(a);
    if (ev.ip_proto == ipproto::udp)
        if (auto s = ssdp_.observe(ev)) ssdp_events_.push_back(*s);

    SideInfo src = side(ev.src_ip, ev.src_mac, ev.timestamp);
    SideInfo dst = side(ev.dst_ip, ev.dst_mac, ev.timestamp);
    const SideInfo& remote = dir == Direction::FromDevice ? dst : src;

    ProcessResult result;
    result.fired = *table_.lookup(ev, src, dst);
    Rule& fired = table_.at(result.fired);
    ++fired.packets;
    fired.bytes += ev.length;

    ConvKey key{ev.ip_proto, remote.ip, 0, 0, Direction::FromDevice, 0, 0};
    if (ev.ip_proto == ipproto::icmp) {
        key.direction = dir;
        key.icmp_type = ev.icmp_type.value_or(0);
        key.icmp_code = ev.icmp_code.value_or(0);
    } else {
        key.device_port = dir == Direction::FromDevice ? ev.src_port : ev.dst_port;
        key.remote_port = dir == Direction::FromDevice ? ev.dst_port : ev.src_port;
    }
    auto [it, fresh] = convs_.try_emplace(key);
    Conversation& conv = it->second;
    if (fresh) {
        conv.channel = remote.is_local ? Channel::Local : Channel::Internet;
        if (remote.is_gateway) conv.remote = FlowEndpoint::gateway();
        else if (remote.is_local) conv.remote = FlowEndpoint::local_network();
        else if (remote.name) conv.remote = FlowEndpoint::domain(*remote.name);
        else conv.remote = FlowEndpoint::literal(remote.ip);
        conv.first_seen = ev.timestamp;
    }
    conv.last_seen = std::max(conv.last_seen, ev.timestamp);
    auto d = static_cast<int>(dir);
    ++conv.packets[d];
    conv.bytes[d] += ev.length;
    conv.stun = conv.stun || ev.stun_cookie;
    if (ev.ip_proto == ipproto::tcp && ev.tcp_syn) {
        if (!ev.tcp_ack && !conv.syn_from) conv.syn_from = dir;
        if (ev.tcp_ack && !conv.synack_from) conv.synack_from = dir;
    }

    if (fired.action == RuleAction::Mirror)
        insert_reactive(key, conv, dir, ev.ip_proto == ipproto::tcp && ev.tcp_syn && !ev.tcp_ack, result.inserted);
    return result;
}

void FlowTracker::insert_reactive(const ConvKey& key, const Conversation& conv, Direction dir, bool syn,
                                  std::vector<Rule>& out) {
    const EndpointMatch remote = conv.remote.kind == FlowEndpoint::Kind::Gateway ? EndpointMatch::gateway()
                                                                                 : EndpointMatch::literal(key.remote_ip);
    auto add = [&](Direction d, MatchSpec m, bool syn_flow) {
        if (table_.contains(m, RuleOrigin::Reactive)) return;
        Rule r;
        r.match = std::move(m);
        r.action = RuleAction::Forward;
        r.origin = RuleOrigin::Reactive;
        r.group = group_of(d, conv.channel);
        switch (r.group) {
        case RuleGroup::FromInternet: r.priority = priority::from_internet; break;
        case RuleGroup::ToInternet: r.priority = priority::to_internet; break;
        case RuleGroup::FromLocal: r.priority = priority::from_local; break;
        default: r.priority = priority::to_local; break;
        }
        if (syn_flow) r.priority += priority::syn_bonus;
        table_.insert(r);
        out.push_back(std::move(r));
    };
    auto base = [&](Direction d) {
        MatchSpec m;
        m.ip_proto = key.proto;
        m.src = d == Direction::FromDevice ? EndpointMatch::device() : remote;
        m.dst = d == Direction::FromDevice ? remote : EndpointMatch::device();
        return m;
    };

    if (key.proto == ipproto::icmp) {
        MatchSpec m = base(key.direction);
        m.icmp_type = key.icmp_type;
        m.icmp_code = key.icmp_code;
        add(key.direction, m, false);
        return;
    }
    // Server port on the remote side: device port free, remote port fixed.
    auto remote_server = [&](bool syn_flow) {
        MatchSpec f = base(Direction::FromDevice);
        f.dst_port = PortRange::exact(key.remote_port);
        add(Direction::FromDevice, f, syn_flow);
        MatchSpec t = base(Direction::ToDevice);
        t.src_port = PortRange::exact(key.remote_port);
        add(Direction::ToDevice, t, syn_flow);
    };
    auto device_server = [&](bool syn_flow) {
        MatchSpec f = base(Direction::FromDevice);
        f.src_port = PortRange::exact(key.device_port);
        add(Direction::FromDevice, f, syn_flow);
        MatchSpec t = base(Direction::ToDevice);
        t.dst_port = PortRange::exact(key.device_port);
        add(Direction::ToDevice, t, syn_flow);
    };
    if (syn) {
        if (dir == Direction::FromDevice) remote_server(true);
        else device_server(true);
    } else if (key.remote_port == 53 && key.device_port != 53) {
        remote_server(false);
    } else if (key.device_port == 53 && key.remote_port != 53) {
        device_server(false);
    } else {
        // Provisional pair; finalize() keeps whichever orientation the traffic supports.
        remote_server(false);
        device_server(false);
    }
}

std::vector<FlowRecord> FlowTracker::staged(bool with_alternatives) const {
    enum class Server { Device, Remote, Ambiguous };
    std::vector<FlowRecord> staged;

    for (const auto& [key, conv] : convs_) {
        auto make = [&](Direction d) {
            FlowRecord r;
            r.device_mac = device_;
            r.channel = conv.channel;
            r.direction = d;
            r.remote = conv.remote;
            r.ip_proto = key.proto;
            r.packets = conv.packets[static_cast<int>(d)];
            r.bytes = conv.bytes[static_cast<int>(d)];
            r.first_seen = conv.first_seen;
            r.last_seen = conv.last_seen;
            r.stun = conv.stun;
            r.observed_device_port = key.device_port;
            r.observed_remote_port = key.remote_port;
            return r;
        };
        if (key.proto == ipproto::icmp) {
            FlowRecord r = make(key.direction);
            r.icmp_type = key.icmp_type;
            r.icmp_code = key.icmp_code;
            r.initiated_by = key.direction == Direction::FromDevice ? Initiator::Device : Initiator::Remote;
            staged.push_back(std::move(r));
            continue;
        }

        const std::uint64_t dev_pk = conv.packets[0], rem_pk = conv.packets[1];
        const double dev_b = double(conv.bytes[0]), rem_b = double(conv.bytes[1]);
        Server server = Server::Ambiguous;
        if (key.remote_port == 53 && key.device_port != 53) server = Server::Remote;
        else if (key.device_port == 53 && key.remote_port != 53) server = Server::Device;
        else if (conv.syn_from) server = *conv.syn_from == Direction::FromDevice ? Server::Remote : Server::Device;
        else if (conv.synack_from)
            server = *conv.synack_from == Direction::FromDevice ? Server::Device : Server::Remote;
        else if (dev_pk == 0) server = Server::Device;
        else if (rem_pk == 0) server = Server::Remote;
        else if (dev_pk + rem_pk >= opts_.udp_min_packets) {
            if (rem_b >= opts_.udp_byte_ratio * dev_b) server = Server::Remote;
            else if (dev_b >= opts_.udp_byte_ratio * rem_b) server = Server::Device;
        }

        for (Direction d : {Direction::FromDevice, Direction::ToDevice}) {
            if (conv.packets[static_cast<int>(d)] == 0) continue;
            FlowRecord r = make(d);
            if (server == Server::Device) {
                r.device_port = PortRange::exact(key.device_port);
                r.initiated_by = Initiator::Remote;
            } else {
                r.remote_port = PortRange::exact(key.remote_port);
                r.initiated_by = server == Server::Remote ? Initiator::Device : Initiator::Unknown;
            }
            if (server == Server::Ambiguous && with_alternatives) {
                // The other orientation is kept too, without traffic attributed to it.
                FlowRecord alt = make(d);
                alt.packets = alt.bytes = 0;
                alt.device_port = PortRange::exact(key.device_port);
                alt.initiated_by = Initiator::Unknown;
                staged.push_back(std::move(alt));
            }
            staged.push_back(std::move(r));
        }
    }
    return staged;
}

std::vector<FlowRecord> FlowTracker::conversation_flows() const { return staged(false); }

std::vector<FlowRecord> FlowTracker::finalize() const {
    std::vector<FlowRecord> staged = this->staged(true);
    std::stable_sort(staged.begin(), staged.end());
    std::vector<FlowRecord> out;
    for (auto& r : staged) {
        if (out.empty() || out.back().key() != r.key()) {
            out.push_back(std::move(r));
            continue;
        }
        FlowRecord& m = out.back();
        m.packets += r.packets;
        m.bytes += r.bytes;
        m.first_seen = std::min(m.first_seen, r.first_seen);
        m.last_seen = std::max(m.last_seen, r.last_seen);
        m.stun = m.stun || r.stun;
        if (m.initiated_by != r.initiated_by) m.initiated_by = Initiator::Unknown;
    }
    return out;
}

TrackResult track_device(const std::vector<PacketEvent>& events, const MacAddress& device_mac,
                         const MacAddress& gateway_mac, const std::vector<Subnet>& local_subnets,
                         TrackerOptions opts) {
    FlowTracker tracker(device_mac, gateway_mac, local_subnets, opts);
    for (const auto& ev : events) tracker.process(ev);
    TrackResult r;
    r.flows = tracker.finalize();
    r.dns = tracker.dns_cache();
    r.ssdp_events = tracker.ssdp_events();
    r.ssdp_ports = tracker.ssdp_ports();
    r.first_timestamp = tracker.first_timestamp();
    r.last_timestamp = tracker.last_timestamp();
    r.device_packets = tracker.packets_seen();
    return r;
}

void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& flows) {
    out << "device_mac,channel,direction,endpoint,proto,device_port,remote_port,icmp_type,icmp_code,"
           "initiated_by,packets,bytes\n";
    for (const auto& f : flows) {
        out << f.device_mac.to_string() << ',' << to_string(f.channel) << ',' << to_string(f.direction) << ','
            << f.remote.to_string() << ',' << proto_name(f.ip_proto) << ',' << f.device_port.to_string() << ','
            << f.remote_port.to_string() << ',' << (f.icmp_type ? std::to_string(*f.icmp_type) : "") << ','
            << (f.icmp_code ? std::to_string(*f.icmp_code) : "") << ',' << to_string(f.initiated_by) << ','
            << f.packets << ',' << f.bytes << '\n';
    }
}

} // namespace mudscope
