#include "mudscope/compliance.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mudscope {

namespace {

constexpr std::uint32_t kPortMax = 65535;
constexpr std::uint32_t kIcmpMax = 255;

Interval iv(PortRange r) { return {r.lo, r.hi}; }

} // namespace

Region traffic_region(std::optional<int> proto, PortRange device_port, PortRange remote_port,
                      std::optional<std::uint8_t> icmp_type, std::optional<std::uint8_t> icmp_code) {
    auto icmp_box = [&] {
        Interval t = icmp_type ? Interval{*icmp_type, *icmp_type} : Interval{0, kIcmpMax};
        Interval c = icmp_code ? Interval{*icmp_code, *icmp_code} : Interval{0, kIcmpMax};
        return Region::from_box({{1, 1}, t, c});
    };
    if (!proto) {
        // Any protocol: ICMP gets its full type/code plane, TCP/UDP the full port plane,
        // everything else has no port axes (collapsed to 0).
        Region r = icmp_box();
        for (std::uint32_t p : {6u, 17u}) r = r.unite(Region::from_box({{p, p}, {0, kPortMax}, {0, kPortMax}}));
        for (Interval span : {Interval{0, 0}, Interval{2, 5}, Interval{7, 16}, Interval{18, 255}})
            r = r.unite(Region::from_box({span, {0, 0}, {0, 0}}));
        return r;
    }
    auto p = static_cast<std::uint32_t>(*proto);
    if (*proto == ipproto::icmp) return icmp_box();
    if (*proto == ipproto::tcp || *proto == ipproto::udp)
        return Region::from_box({{p, p}, iv(device_port), iv(remote_port)});
    return Region::from_box({{p, p}, {0, 0}, {0, 0}});
}

Region ace_region(const MudAce& a) {
    return traffic_region(a.ip_proto, a.device_port(), a.remote_port(), a.icmp_type, a.icmp_code);
}

std::vector<PolicyRule> policy_rules(const MudProfile& profile) {
    std::vector<PolicyRule> out;
    for (const auto& a : profile.aces()) {
        if (a.action != AceAction::Accept)
            throw std::invalid_argument("ACE '" + a.name + "' is not an accept rule");
        out.push_back({EndpointClass::of(a.endpoint), a.direction, ace_region(a)});
    }
    return out;
}

std::string CanonicalTuple::to_string() const {
    auto span = [](Interval i) {
        return i.lo == i.hi ? std::to_string(i.lo) : std::to_string(i.lo) + "-" + std::to_string(i.hi);
    };
    return endpoint.to_string() + " " + std::string(mudscope::to_string(direction)) + " proto=" + span(proto) +
           " dev=" + span(device_port) + " rem=" + span(remote_port);
}

namespace {

using Key = std::pair<EndpointClass, Direction>;

// Per (class, direction): the directly granted region, closed under ancestors.
struct Permissions {
    std::map<Key, Region> direct;
    std::set<EndpointClass> nodes;

    explicit Permissions(const std::vector<PolicyRule>& rules) {
        for (const auto& r : rules) {
            auto [it, fresh] = direct.try_emplace({r.endpoint, r.direction}, r.region);
            if (!fresh) it->second = it->second.unite(r.region);
            add_node(r.endpoint);
        }
        add_node(EndpointClass::local_networks());
        add_node(EndpointClass::internet());
    }

    void add_node(const EndpointClass& c) {
        for (std::optional<EndpointClass> n = c; n; n = n->parent()) nodes.insert(*n);
    }

    Region effective(const EndpointClass& c, Direction d) const {
        Region r(3);
        for (std::optional<EndpointClass> n = c; n; n = n->parent()) {
            auto it = direct.find({*n, d});
            if (it != direct.end()) r = r.unite(it->second);
        }
        return r;
    }
};

} // namespace

CanonicalPolicy canonicalize(const std::vector<PolicyRule>& rules) {
    Permissions perms(rules);
    CanonicalPolicy out;
    for (const auto& node : perms.nodes) {
        for (Direction d : {Direction::FromDevice, Direction::ToDevice}) {
            Region own = perms.effective(node, d);
            if (auto parent = node.parent()) own = own.subtract(perms.effective(*parent, d));
            for (const auto& b : own.boxes()) out.tuples.push_back({node, d, b[0], b[1], b[2]});
        }
    }
    std::sort(out.tuples.begin(), out.tuples.end());
    return out;
}

CanonicalPolicy canonicalize(const MudProfile& profile) { return canonicalize(policy_rules(profile)); }

bool equivalent(const MudProfile& a, const MudProfile& b) { return canonicalize(a) == canonicalize(b); }

bool includes(const std::vector<PolicyRule>& a, const std::vector<PolicyRule>& b) {
    Permissions pa(a), pb(b);
    std::set<EndpointClass> nodes = pa.nodes;
    nodes.insert(pb.nodes.begin(), pb.nodes.end());
    for (const auto& n : nodes) {
        if (n.kind == EndpointClass::Kind::Any) continue; // every host sits below local-networks or internet
        for (Direction d : {Direction::FromDevice, Direction::ToDevice})
            if (!pa.effective(n, d).subset_of(pb.effective(n, d))) return false;
    }
    return true;
}

bool includes(const MudProfile& a, const MudProfile& b) { return includes(policy_rules(a), policy_rules(b)); }

ZonePolicy parse_zone(std::string_view text) {
    using json = nlohmann::json;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ZoneError(std::string("invalid zone JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("zone") || !doc["zone"].is_string())
        throw ZoneError("zone file needs a string 'zone' field");
    ZonePolicy z;
    z.name = doc["zone"].get<std::string>();
    z.rank = doc.value("rank", 0);
    z.notes = doc.value("notes", "");
    if (!doc.contains("permit") || !doc["permit"].is_array()) throw ZoneError("zone '" + z.name + "' has no permit list");
    auto range = [&](const json& p, const char* key) {
        if (!p.contains(key)) return PortRange::any();
        const json& r = p[key];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
            throw ZoneError(std::string("'") + key + "' must be [lo, hi]");
        auto lo = r[0].get<long long>(), hi = r[1].get<long long>();
        if (lo < 0 || hi > 65535 || lo > hi) throw ZoneError(std::string("bad range in '") + key + "'");
        return PortRange{static_cast<std::uint16_t>(lo), static_cast<std::uint16_t>(hi)};
    };
    for (const auto& p : doc["permit"]) {
        auto ep = EndpointClass::parse(p.value("endpoint", "any"));
        if (!ep) throw ZoneError("unknown endpoint class '" + p.value("endpoint", "") + "'");
        std::string dir = p.value("direction", "both");
        std::optional<int> proto;
        if (p.contains("proto") && p["proto"].is_number_integer()) proto = p["proto"].get<int>();
        else if (p.contains("proto") && p["proto"] != "any") throw ZoneError("'proto' must be a number or \"any\"");
        std::optional<std::uint8_t> itype, icode;
        if (p.contains("icmp_type")) itype = static_cast<std::uint8_t>(p["icmp_type"].get<int>());
        if (p.contains("icmp_code")) icode = static_cast<std::uint8_t>(p["icmp_code"].get<int>());
        Region region = traffic_region(proto, range(p, "device_port"), range(p, "remote_port"), itype, icode);
        std::vector<Direction> dirs;
        if (dir == "both") dirs = {Direction::FromDevice, Direction::ToDevice};
        else if (auto d = parse_direction(dir)) dirs = {*d};
        else throw ZoneError("unknown direction '" + dir + "'");
        for (auto d : dirs) z.permits.push_back({*ep, d, region});
    }
    return z;
}

ZonePolicy load_zone(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ZoneError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_zone(ss.str());
    } catch (const ZoneError& e) {
        throw ZoneError(path.string() + ": " + e.what());
    }
}

std::vector<ZonePolicy> load_zones(const std::filesystem::path& dir) {
    std::vector<ZonePolicy> zones;
    if (std::filesystem::is_regular_file(dir)) {
        zones.push_back(load_zone(dir));
        return zones;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) zones.push_back(load_zone(f));
    std::stable_sort(zones.begin(), zones.end(), [](const ZonePolicy& a, const ZonePolicy& b) { return a.rank < b.rank; });
    return zones;
}

ComplianceReport check_zone(const MudProfile& profile, const ZonePolicy& zone) {
    ComplianceReport r;
    r.zone = zone.name;
    if (profile.has_drop()) {
        r.rejected = true;
        r.reason = "profile contains drop ACEs; only whitelists can be checked";
        return r;
    }
    for (const auto& a : profile.aces()) {
        std::vector<PolicyRule> single{{EndpointClass::of(a.endpoint), a.direction, ace_region(a)}};
        bool ok = includes(single, zone.permits);
        r.verdicts.push_back({a.name, ok});
        ++r.total;
        if (!ok) ++r.violating;
    }
    return r;
}

std::vector<std::string> safe_zones(const MudProfile& profile, const std::vector<ZonePolicy>& zones) {
    std::vector<const ZonePolicy*> sorted;
    for (const auto& z : zones) sorted.push_back(&z);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
    std::vector<std::string> out;
    for (const auto* z : sorted)
        if (check_zone(profile, *z).safe()) out.push_back(z->name);
    return out;
}

std::string format_report_row(const ComplianceReport& r) {
    if (r.rejected) return r.zone + ": rejected (" + r.reason + ")";
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.1f", r.percent_violating());
    return r.zone + ": rules=" + std::to_string(r.total) + " violating=" + std::to_string(r.violating) + " (" + pct +
           "%)" + (r.safe() ? " safe" : "");
}

std::string report_json(const ComplianceReport& r) {
    nlohmann::ordered_json j;
    j["zone"] = r.zone;
    j["rejected"] = r.rejected;
    if (r.rejected) j["reason"] = r.reason;
    j["rules"] = r.total;
    j["violating"] = r.violating;
    j["percent_violating"] = r.percent_violating();
    j["safe"] = r.safe();
    auto list = nlohmann::ordered_json::array();
    for (const auto& v : r.verdicts) list.push_back({{"ace", v.ace_name}, {"compliant", v.compliant}});
    j["aces"] = list;
    return j.dump(2);
}

} // namespace mudscope
