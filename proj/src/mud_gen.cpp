#include "mudscope/mud_gen.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace mudscope {

namespace {

auto ace_key(const MudAce& a) {
    return std::tie(a.direction, a.endpoint, a.ip_proto, a.src_port, a.dst_port, a.icmp_type, a.icmp_code);
}

std::string name_slug(const std::string& systeminfo) {
    std::string out;
    for (char c : systeminfo) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) out += static_cast<char>(std::tolower(u));
        else if (!out.empty() && out.back() != '-') out += '-';
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "device" : out;
}

} // namespace

bool is_stun_flow(const FlowRecord& f) {
    if (f.ip_proto != ipproto::udp) return false;
    if (f.stun) return true;
    if (f.remote.kind != FlowEndpoint::Kind::Domain) return false;
    std::string_view name = f.remote.name;
    while (!name.empty()) {
        auto dot = name.find('.');
        if (name.substr(0, dot).starts_with("stun")) return true;
        if (dot == std::string_view::npos) break;
        name.remove_prefix(dot + 1);
    }
    return false;
}

GenResult translate(const std::vector<FlowRecord>& flows, const DnsCache& dns, const GenOptions& opts,
                    const ProfileMeta& meta) {
    if (opts.wildcard_endpoint_threshold < 2)
        throw std::invalid_argument("wildcard endpoint threshold must be at least 2");
    GenResult out;
    std::vector<MudAce> aces;

    bool stun = false;
    if (opts.stun_detection)
        stun = std::any_of(flows.begin(), flows.end(), [](const FlowRecord& f) {
            return f.channel == Channel::Internet && is_stun_flow(f);
        });

    // (direction, proto, device port, remote port, icmp) -> unnamed addresses
    using GroupKey = std::tuple<Direction, int, PortRange, PortRange, std::optional<std::uint8_t>,
                                std::optional<std::uint8_t>>;
    std::map<GroupKey, std::set<Ipv4>> unnamed;

    for (const auto& f : flows) {
        MudAce a;
        a.direction = f.direction;
        a.ip_proto = f.ip_proto;
        a.set_ports(f.device_port, f.remote_port);
        a.icmp_type = f.icmp_type;
        a.icmp_code = f.icmp_code;
        switch (f.remote.kind) {
        case FlowEndpoint::Kind::Gateway: a.endpoint = AceEndpoint::controller(opts.gateway_namespace); break;
        case FlowEndpoint::Kind::LocalNetwork: a.endpoint = AceEndpoint::local_networks(); break;
        case FlowEndpoint::Kind::Domain: a.endpoint = AceEndpoint::domain(f.remote.name); break;
        case FlowEndpoint::Kind::Literal:
            if (auto name = dns.lookup(f.remote.ip, f.first_seen)) a.endpoint = AceEndpoint::domain(*name);
            else a.endpoint = AceEndpoint::literal(f.remote.ip);
            break;
        }
        if (stun && f.channel == Channel::Internet && f.ip_proto == ipproto::udp) continue;
        if (a.endpoint.kind == AceEndpoint::Kind::Literal) {
            if (a.endpoint.ip.has_local_significance())
                out.warnings.push_back("flow to " + a.endpoint.ip.to_string() +
                                       " has a locally significant address; emitted as a literal");
            else
                unnamed[{a.direction, f.ip_proto, f.device_port, f.remote_port, f.icmp_type, f.icmp_code}].insert(
                    a.endpoint.ip);
        }
        aces.push_back(std::move(a));
    }

    for (const auto& [key, ips] : unnamed) {
        if (static_cast<int>(ips.size()) <= opts.wildcard_endpoint_threshold) continue;
        const auto& [dir, proto, dport, rport, itype, icode] = key;
        std::erase_if(aces, [&](const MudAce& a) {
            return a.endpoint.kind == AceEndpoint::Kind::Literal && ips.count(a.endpoint.ip) && a.direction == dir &&
                   a.ip_proto == proto && a.device_port() == dport && a.remote_port() == rport &&
                   a.icmp_type == itype && a.icmp_code == icode;
        });
        MudAce w;
        w.direction = dir;
        w.ip_proto = proto;
        w.set_ports(dport, rport);
        w.icmp_type = itype;
        w.icmp_code = icode;
        aces.push_back(std::move(w));
    }

    if (stun) {
        for (Direction d : {Direction::FromDevice, Direction::ToDevice}) {
            MudAce w;
            w.direction = d;
            w.ip_proto = ipproto::udp;
            aces.push_back(std::move(w));
        }
    }
    for (const auto& extra : opts.extra_aces) {
        MudAce a = extra;
        a.name.clear();
        aces.push_back(std::move(a));
    }

    std::sort(aces.begin(), aces.end(), [](const MudAce& a, const MudAce& b) { return ace_key(a) < ace_key(b); });
    aces.erase(std::unique(aces.begin(), aces.end(),
                           [](const MudAce& a, const MudAce& b) { return ace_key(a) == ace_key(b); }),
               aces.end());

    MudProfile& p = out.profile;
    p.mud_url = meta.mud_url;
    p.systeminfo = meta.systeminfo;
    p.last_update = format_timestamp(meta.trace_end);
    const std::string slug = name_slug(meta.systeminfo);
    int n_from = 0, n_to = 0;
    for (auto& a : aces) {
        if (a.direction == Direction::FromDevice) {
            a.name = "from-ipv4-" + slug + "-" + std::to_string(n_from++);
            p.from_device.push_back(std::move(a));
        } else {
            a.name = "to-ipv4-" + slug + "-" + std::to_string(n_to++);
            p.to_device.push_back(std::move(a));
        }
    }
    return out;
}

bool ace_covers(const MudAce& a, const FlowRecord& f, std::string_view gateway_namespace) {
    if (a.action != AceAction::Accept || a.direction != f.direction) return false;
    if (a.ip_proto && *a.ip_proto != f.ip_proto) return false;
    if (f.ip_proto == ipproto::icmp) {
        if (a.icmp_type && a.icmp_type != f.icmp_type) return false;
        if (a.icmp_code && a.icmp_code != f.icmp_code) return false;
    } else if (!a.device_port().contains(f.device_port) || !a.remote_port().contains(f.remote_port)) {
        return false;
    }
    switch (a.endpoint.kind) {
    case AceEndpoint::Kind::Wildcard: return true;
    case AceEndpoint::Kind::Controller:
        return f.remote.kind == FlowEndpoint::Kind::Gateway && a.endpoint.value == gateway_namespace;
    case AceEndpoint::Kind::MyController: return f.remote.kind == FlowEndpoint::Kind::Gateway;
    case AceEndpoint::Kind::LocalNetworks:
        return f.remote.kind == FlowEndpoint::Kind::LocalNetwork || f.remote.kind == FlowEndpoint::Kind::Gateway;
    case AceEndpoint::Kind::SameManufacturer: return false;
    case AceEndpoint::Kind::Domain: return f.remote.kind == FlowEndpoint::Kind::Domain && f.remote.name == a.endpoint.value;
    case AceEndpoint::Kind::Literal: return f.remote.kind == FlowEndpoint::Kind::Literal && f.remote.ip == a.endpoint.ip;
    }
    return false;
}

std::string emit_flow_report(const MudProfile& profile) {
    using ojson = nlohmann::ordered_json;
    struct Link {
        std::string channel, direction, endpoint, proto, port, ace;
        auto key() const { return std::tie(channel, direction, endpoint, proto, port, ace); }
    };
    std::vector<Link> links;
    std::set<std::string> endpoints;
    for (const auto& a : profile.aces()) {
        Link l;
        l.channel = std::string(to_string(a.channel()));
        l.direction = std::string(to_string(a.direction));
        l.endpoint = a.endpoint.to_string();
        l.proto = a.ip_proto ? proto_name(*a.ip_proto) : "*";
        if (a.ip_proto == ipproto::icmp)
            l.port = (a.icmp_type ? std::to_string(*a.icmp_type) : "*") + "/" +
                     (a.icmp_code ? std::to_string(*a.icmp_code) : "*");
        else
            l.port = a.remote_port().is_any() && !a.device_port().is_any() ? "device:" + a.device_port().to_string()
                                                                          : a.remote_port().to_string();
        l.ace = a.name;
        endpoints.insert(l.endpoint);
        links.push_back(std::move(l));
    }
    std::sort(links.begin(), links.end(), [](const Link& x, const Link& y) { return x.key() < y.key(); });

    ojson nodes = ojson::array();
    nodes.push_back({{"id", "device"}, {"kind", "device"}});
    for (const auto& e : endpoints) nodes.push_back({{"id", e}, {"kind", "endpoint"}});
    ojson jl = ojson::array();
    for (const auto& l : links) {
        const bool from = l.direction == "from-device";
        ojson j = ojson::object();
        j["source"] = from ? "device" : l.endpoint;
        j["target"] = from ? l.endpoint : "device";
        j["channel"] = l.channel;
        j["direction"] = l.direction;
        j["proto"] = l.proto;
        j["port"] = l.port;
        j["ace"] = l.ace;
        jl.push_back(std::move(j));
    }
    ojson doc = ojson::object();
    doc["device"] = profile.systeminfo;
    doc["nodes"] = nodes;
    doc["links"] = jl;
    return doc.dump(2) + "\n";
}

} // namespace mudscope
