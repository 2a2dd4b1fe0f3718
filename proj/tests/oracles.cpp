#include "oracles.hpp"

#include <algorithm>
#include <map>

namespace oracle {

bool host_matches(const AceEndpoint& e, const Host& h) {
    using K = Host::Kind;
    switch (e.kind) {
    case AceEndpoint::Kind::Wildcard: return true;
    case AceEndpoint::Kind::Domain: return h.kind == K::Domain && h.name == e.value;
    case AceEndpoint::Kind::Literal:
        return (h.kind == K::PublicLiteral || h.kind == K::PrivateLiteral) && h.ip == e.ip;
    case AceEndpoint::Kind::Controller: return h.kind == K::Controller && h.name == e.value;
    case AceEndpoint::Kind::MyController: return h.kind == K::MyController;
    case AceEndpoint::Kind::SameManufacturer: return h.kind == K::SameManufacturer;
    case AceEndpoint::Kind::LocalNetworks:
        return h.kind == K::PrivateLiteral || h.kind == K::Controller || h.kind == K::MyController ||
               h.kind == K::SameManufacturer || h.kind == K::OtherLocal;
    }
    return false;
}

bool ace_admits(const MudAce& a, const Packet& p) {
    if (a.action != AceAction::Accept || a.direction != p.direction) return false;
    if (!host_matches(a.endpoint, p.host)) return false;
    if (!a.ip_proto) return true;
    if (*a.ip_proto != p.proto) return false;
    if (p.proto == 1) {
        if (a.icmp_type && *a.icmp_type != p.icmp_type) return false;
        if (a.icmp_code && *a.icmp_code != p.icmp_code) return false;
        return true;
    }
    if (p.proto == 6 || p.proto == 17) {
        const PortRange dev = a.direction == Direction::FromDevice ? a.src_port : a.dst_port;
        const PortRange rem = a.direction == Direction::FromDevice ? a.dst_port : a.src_port;
        return dev.lo <= p.device_port && p.device_port <= dev.hi && rem.lo <= p.remote_port &&
               p.remote_port <= rem.hi;
    }
    return true;
}

bool accepts(const MudProfile& profile, const Packet& p) {
    for (const auto* list : {&profile.from_device, &profile.to_device})
        for (const auto& a : *list)
            if (ace_admits(a, p)) return true;
    return false;
}

namespace {

Host host_for(const AceEndpoint& e) {
    using K = Host::Kind;
    switch (e.kind) {
    case AceEndpoint::Kind::Domain: return {K::Domain, e.value, {}};
    case AceEndpoint::Kind::Literal:
        return {e.ip.has_local_significance() ? K::PrivateLiteral : K::PublicLiteral, {}, e.ip};
    case AceEndpoint::Kind::Controller: return {K::Controller, e.value, {}};
    case AceEndpoint::Kind::MyController: return {K::MyController, {}, {}};
    case AceEndpoint::Kind::SameManufacturer: return {K::SameManufacturer, {}, {}};
    default: return {K::OtherLocal, {}, {}};
    }
}

void add_cuts(std::set<std::uint32_t>& cuts, std::uint32_t lo, std::uint32_t hi, std::uint32_t max) {
    cuts.insert(lo);
    if (hi < max) cuts.insert(hi + 1);
}

} // namespace

std::vector<Packet> universe(const std::vector<const MudProfile*>& profiles) {
    std::set<Host> hosts{{Host::Kind::OtherLocal, {}, {}}, {Host::Kind::OtherInternet, {}, {}}};
    std::set<std::uint32_t> dev{0}, rem{0}, types{0}, codes{0};
    for (const auto* p : profiles)
        for (const auto* list : {&p->from_device, &p->to_device})
            for (const auto& a : *list) {
                if (!a.endpoint.is_wildcard() && a.endpoint.kind != AceEndpoint::Kind::LocalNetworks)
                    hosts.insert(host_for(a.endpoint));
                const PortRange d = a.direction == Direction::FromDevice ? a.src_port : a.dst_port;
                const PortRange r = a.direction == Direction::FromDevice ? a.dst_port : a.src_port;
                add_cuts(dev, d.lo, d.hi, 65535);
                add_cuts(rem, r.lo, r.hi, 65535);
                if (a.icmp_type) add_cuts(types, *a.icmp_type, *a.icmp_type, 255);
                if (a.icmp_code) add_cuts(codes, *a.icmp_code, *a.icmp_code, 255);
            }
    std::vector<Packet> out;
    for (const auto& h : hosts)
        for (Direction d : {Direction::FromDevice, Direction::ToDevice}) {
            for (int proto : {6, 17})
                for (auto dp : dev)
                    for (auto rp : rem)
                        out.push_back({h, d, proto, std::uint16_t(dp), std::uint16_t(rp), 0, 0});
            for (auto t : types)
                for (auto c : codes) out.push_back({h, d, 1, 0, 0, std::uint8_t(t), std::uint8_t(c)});
            out.push_back({h, d, 47, 0, 0, 0, 0});
        }
    return out;
}

std::vector<bool> accept_set(const MudProfile& p, const std::vector<Packet>& u) {
    std::vector<bool> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = accepts(p, u[i]);
    return out;
}

bool equivalent(const MudProfile& a, const MudProfile& b) {
    const auto u = universe({&a, &b});
    return accept_set(a, u) == accept_set(b, u);
}

bool includes(const MudProfile& a, const MudProfile& b) {
    const auto u = universe({&a, &b});
    for (const auto& p : u)
        if (accepts(a, p) && !accepts(b, p)) return false;
    return true;
}

namespace {

std::set<int> as_set(const ElementSet& s) { return {s.begin(), s.end()}; }

bool subset(const std::set<int>& a, const std::set<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool meets(const std::set<int>& a, const std::set<int>& b) {
    for (int x : a)
        if (b.count(x)) return true;
    return false;
}

std::vector<std::vector<std::size_t>> subsets_of(const std::vector<std::size_t>& items) {
    std::vector<std::vector<std::size_t>> out;
    for (std::uint32_t mask = 1; mask < (1u << items.size()); ++mask) {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (mask & (1u << i)) s.push_back(items[i]);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

bool is_metapath(const ConditionalMetagraph& g, const ElementSet& source, const ElementSet& target,
                 const std::vector<std::size_t>& edges) {
    if (edges.empty()) return false;
    std::set<std::size_t> uniq(edges.begin(), edges.end());
    if (uniq.size() != edges.size() || *uniq.rbegin() >= g.edges().size()) return false;

    std::set<int> have = as_set(source);
    std::set<std::size_t> waiting = uniq;
    for (bool progress = true; progress && !waiting.empty();) {
        progress = false;
        for (auto it = waiting.begin(); it != waiting.end();) {
            const auto& e = g.edges()[*it];
            if (subset(as_set(e.invertex), have)) {
                for (int x : e.outvertex) have.insert(x);
                it = waiting.erase(it);
                progress = true;
            } else {
                ++it;
            }
        }
    }
    if (!waiting.empty()) return false;

    std::set<int> outputs;
    for (auto i : uniq)
        for (int x : g.edges()[i].outvertex) outputs.insert(x);
    if (!subset(as_set(target), outputs)) return false;

    // Backward from the target through "e's output is f's input".
    std::set<std::size_t> useful;
    for (auto i : uniq)
        if (meets(as_set(g.edges()[i].outvertex), as_set(target))) useful.insert(i);
    for (bool grew = true; grew;) {
        grew = false;
        for (auto i : uniq) {
            if (useful.count(i)) continue;
            for (auto j : useful)
                if (meets(as_set(g.edges()[i].outvertex), as_set(g.edges()[j].invertex))) {
                    useful.insert(i);
                    grew = true;
                    break;
                }
        }
    }
    return useful.size() == uniq.size();
}

std::vector<std::vector<std::size_t>> all_metapaths(const ConditionalMetagraph& g, const ElementSet& source,
                                                    const ElementSet& target) {
    std::vector<std::size_t> all(g.edges().size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<std::vector<std::size_t>> out;
    for (auto& s : subsets_of(all))
        if (oracle::is_metapath(g, source, target, s)) out.push_back(s);
    return out;
}

bool edge_dominant(const ConditionalMetagraph& g, const Metapath& m) {
    for (const auto& s : subsets_of(m.edges))
        if (s.size() < m.edges.size() && oracle::is_metapath(g, m.source, m.target, s)) return false;
    return true;
}

bool input_dominant(const ConditionalMetagraph& g, const Metapath& m) {
    const std::vector<int> b(m.source.begin(), m.source.end());
    std::vector<std::size_t> all(g.edges().size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto edge_sets = subsets_of(all);
    for (std::uint32_t mask = 0; mask + 1 < (1u << b.size()); ++mask) {
        ElementSet smaller;
        for (std::size_t i = 0; i < b.size(); ++i)
            if (mask & (1u << i)) smaller.insert(b[i]);
        for (const auto& s : edge_sets)
            if (oracle::is_metapath(g, smaller, m.target, s)) return false;
    }
    return true;
}

namespace {

template <class T>
const T& pick(std::mt19937& rng, const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool chance(std::mt19937& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

const std::vector<AceEndpoint>& endpoint_pool() {
    static const std::vector<AceEndpoint> pool{
        AceEndpoint::any(),
        AceEndpoint::local_networks(),
        AceEndpoint::controller(std::string(kGatewayNamespace)),
        AceEndpoint::my_controller(),
        AceEndpoint::same_manufacturer(),
        AceEndpoint::domain("a.example.com"),
        AceEndpoint::domain("b.example.net"),
        AceEndpoint::literal(Ipv4{8, 8, 8, 8}),
        AceEndpoint::literal(Ipv4{192, 168, 1, 7}),
    };
    return pool;
}

const std::vector<PortRange>& port_pool() {
    static const std::vector<PortRange> pool{PortRange::any(),   PortRange::any(),   PortRange::exact(53),
                                             PortRange::exact(80), PortRange::exact(443), PortRange::exact(8000),
                                             PortRange{1000, 2000}, PortRange{0, 1023}};
    return pool;
}

} // namespace

MudAce random_ace(std::mt19937& rng, Direction d, const std::string& name) {
    MudAce a;
    a.name = name;
    a.direction = d;
    a.endpoint = pick(rng, endpoint_pool());
    const int roll = std::uniform_int_distribution<int>(0, 9)(rng);
    if (roll < 4) {
        a.ip_proto = 6;
    } else if (roll < 7) {
        a.ip_proto = 17;
    } else if (roll < 9) {
        a.ip_proto = 1;
    }
    if (a.ip_proto && (*a.ip_proto == 6 || *a.ip_proto == 17)) {
        a.set_ports(pick(rng, port_pool()), pick(rng, port_pool()));
    } else if (a.ip_proto) {
        if (chance(rng, 0.6)) a.icmp_type = chance(rng, 0.5) ? 8 : 0;
        if (chance(rng, 0.3)) a.icmp_code = 0;
    }
    return a;
}

MudProfile random_profile(std::mt19937& rng, int aces, const std::string& tag) {
    MudProfile p;
    p.mud_url = "https://mud.example.com/" + tag + ".json";
    p.systeminfo = tag;
    for (int i = 0; i < aces; ++i) {
        const Direction d = chance(rng, 0.5) ? Direction::FromDevice : Direction::ToDevice;
        auto a = random_ace(rng, d, tag + "-" + std::to_string(i));
        (d == Direction::FromDevice ? p.from_device : p.to_device).push_back(std::move(a));
    }
    return p;
}

std::optional<MudAce> covered_copy(std::mt19937& rng, const MudAce& a, const std::string& name) {
    MudAce c = a;
    c.name = name;
    if (!a.ip_proto) {
        c.ip_proto = chance(rng, 0.5) ? 6 : 17;
        return c;
    }
    if (*a.ip_proto == 6 || *a.ip_proto == 17) {
        const PortRange dev = a.device_port();
        const PortRange rem = a.remote_port();
        if (!rem.is_exact()) {
            c.set_ports(dev, PortRange::exact(rem.lo));
            return c;
        }
        if (!dev.is_exact()) {
            c.set_ports(PortRange::exact(dev.hi), rem);
            return c;
        }
    }
    if (*a.ip_proto == 1 && !a.icmp_type) {
        c.icmp_type = 8;
        return c;
    }
    switch (a.endpoint.kind) {
    case AceEndpoint::Kind::Wildcard: c.endpoint = AceEndpoint::domain("a.example.com"); return c;
    case AceEndpoint::Kind::LocalNetworks:
        c.endpoint = AceEndpoint::controller(std::string(kGatewayNamespace));
        return c;
    default: return std::nullopt;
    }
}

MudProfile equivalent_variant(std::mt19937& rng, const MudProfile& p) {
    MudProfile v = p;
    auto& lists = chance(rng, 0.5) ? v.from_device : v.to_device;
    // Split one range into two adjacent halves.
    for (std::size_t i = 0; i < lists.size(); ++i) {
        MudAce& a = lists[i];
        if (!a.ip_proto || (*a.ip_proto != 6 && *a.ip_proto != 17)) continue;
        const PortRange rem = a.remote_port();
        if (rem.is_exact()) continue;
        const auto mid = static_cast<std::uint16_t>(rem.lo + (rem.hi - rem.lo) / 2);
        MudAce upper = a;
        upper.name = a.name + "-hi";
        upper.set_ports(a.device_port(), PortRange{static_cast<std::uint16_t>(mid + 1), rem.hi});
        a.set_ports(a.device_port(), PortRange{rem.lo, mid});
        lists.push_back(std::move(upper));
        break;
    }
    if (!lists.empty()) {
        MudAce copy = pick(rng, lists);
        copy.name += "-copy";
        if (auto c = covered_copy(rng, copy, copy.name + "-narrow")) lists.push_back(*c);
        lists.push_back(std::move(copy));
    }
    std::shuffle(v.from_device.begin(), v.from_device.end(), rng);
    std::shuffle(v.to_device.begin(), v.to_device.end(), rng);
    return v;
}

MudProfile widened(std::mt19937& rng, const MudProfile& p, int extra) {
    MudProfile v = p;
    for (int i = 0; i < extra; ++i) {
        const Direction d = chance(rng, 0.5) ? Direction::FromDevice : Direction::ToDevice;
        auto a = random_ace(rng, d, p.systeminfo + "-w" + std::to_string(v.ace_count()));
        (d == Direction::FromDevice ? v.from_device : v.to_device).push_back(std::move(a));
    }
    return v;
}

ConditionalMetagraph random_metagraph(std::mt19937& rng, int variables, int propositions, int edges) {
    ConditionalMetagraph g;
    std::vector<int> vars, props;
    for (int i = 0; i < variables; ++i) vars.push_back(g.add_variable("v" + std::to_string(i)));
    for (int i = 0; i < propositions; ++i) props.push_back(g.add_proposition("p" + std::to_string(i)));
    std::uniform_int_distribution<int> size12(1, 2);
    for (int e = 0; e < edges; ++e) {
        ElementSet in, out;
        for (int k = size12(rng); k > 0; --k) in.insert(pick(rng, vars));
        if (!props.empty() && chance(rng, 0.4)) in.insert(pick(rng, props));
        for (int k = size12(rng); k > 0; --k) {
            const int v = pick(rng, vars);
            if (!in.contains(v)) out.insert(v);
        }
        if (out.empty()) {
            for (int v : vars)
                if (!in.contains(v)) {
                    out.insert(v);
                    break;
                }
        }
        g.add_edge(in, out, "e" + std::to_string(e));
    }
    return g;
}

ElementSet random_subset(std::mt19937& rng, const ElementSet& from, std::size_t max_size) {
    std::vector<int> v(from.begin(), from.end());
    std::shuffle(v.begin(), v.end(), rng);
    const auto n = std::uniform_int_distribution<std::size_t>(1, std::min(max_size, v.size()))(rng);
    ElementSet out;
    for (std::size_t i = 0; i < n; ++i) out.insert(v[i]);
    return out;
}

std::size_t exact_overlap(const std::vector<Branch>& r, const std::vector<Branch>& m) {
    std::set<std::size_t> hit;
    for (const auto& b : r)
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] == b) hit.insert(i);
    return hit.size();
}

} // namespace oracle
