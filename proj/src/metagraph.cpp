#include "mudscope/metagraph.hpp"

#include "mudscope/compliance.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <map>

namespace mudscope {

ElementSet::ElementSet(std::initializer_list<int> ids) : ids_(ids) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

void ElementSet::insert(int id) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) ids_.insert(it, id);
}

bool ElementSet::contains(int id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

bool ElementSet::includes(const ElementSet& o) const {
    return std::includes(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end());
}

bool ElementSet::intersects(const ElementSet& o) const {
    auto a = ids_.begin(), b = o.ids_.begin();
    while (a != ids_.end() && b != o.ids_.end()) {
        if (*a == *b) return true;
        if (*a < *b) ++a;
        else ++b;
    }
    return false;
}

ElementSet ElementSet::unite(const ElementSet& o) const {
    ElementSet r;
    std::set_union(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end(), std::back_inserter(r.ids_));
    return r;
}

ElementSet ElementSet::minus(const ElementSet& o) const {
    ElementSet r;
    std::set_difference(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end(), std::back_inserter(r.ids_));
    return r;
}

int ConditionalMetagraph::add_element(const std::string& name, bool proposition) {
    if (auto id = find(name)) {
        if (is_proposition(*id) != proposition)
            throw MetagraphError("'" + name + "' cannot be both a variable and a proposition");
        return *id;
    }
    names_.push_back(name);
    is_prop_.push_back(proposition);
    return static_cast<int>(names_.size() - 1);
}

int ConditionalMetagraph::add_variable(const std::string& name) { return add_element(name, false); }
int ConditionalMetagraph::add_proposition(const std::string& name) { return add_element(name, true); }

std::optional<int> ConditionalMetagraph::find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<int>(it - names_.begin());
}

ElementSet ConditionalMetagraph::variables() const {
    ElementSet s;
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (!is_prop_[i]) s.insert(static_cast<int>(i));
    return s;
}

ElementSet ConditionalMetagraph::propositions() const {
    ElementSet s;
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (is_prop_[i]) s.insert(static_cast<int>(i));
    return s;
}

namespace {

std::optional<std::string> edge_problem(const ConditionalMetagraph& g, const MetaEdge& e) {
    for (const ElementSet* s : {&e.invertex, &e.outvertex})
        for (int id : *s)
            if (id < 0 || static_cast<std::size_t>(id) >= g.element_count()) return "unknown element id";
    if (e.invertex.empty() && e.outvertex.empty()) return "edge with empty invertex and outvertex";
    if (e.invertex.intersects(e.outvertex)) return "invertex and outvertex overlap";
    bool has_prop = std::any_of(e.outvertex.begin(), e.outvertex.end(), [&](int id) { return g.is_proposition(id); });
    if (has_prop && e.outvertex.size() > 1) return "outvertex mixes a proposition with other elements";
    return std::nullopt;
}

} // namespace

std::size_t ConditionalMetagraph::add_edge(ElementSet invertex, ElementSet outvertex, std::string label) {
    MetaEdge e{std::move(invertex), std::move(outvertex), std::move(label)};
    if (auto problem = edge_problem(*this, e)) throw MetagraphError(*problem);
    edges_.push_back(std::move(e));
    return edges_.size() - 1;
}

std::vector<std::string> ConditionalMetagraph::check_invariants() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < edges_.size(); ++i)
        if (auto problem = edge_problem(*this, edges_[i]))
            out.push_back("edge " + std::to_string(i) + ": " + *problem);
    for (std::size_t i = 0; i < names_.size(); ++i)
        for (std::size_t j = i + 1; j < names_.size(); ++j)
            if (names_[i] == names_[j]) out.push_back("element '" + names_[i] + "' declared twice");
    return out;
}

namespace {

struct Closure {
    std::vector<std::size_t> fired;
    ElementSet reached;
    ElementSet produced;
};

// Fires edges from `pool` until nothing new becomes enabled.
Closure fire(const ConditionalMetagraph& g, const ElementSet& source, const std::vector<std::size_t>& pool) {
    Closure c;
    c.reached = source;
    std::vector<bool> done(pool.size(), false);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (done[i]) continue;
            const MetaEdge& e = g.edges()[pool[i]];
            if (!c.reached.includes(e.invertex)) continue;
            done[i] = true;
            changed = true;
            c.fired.push_back(pool[i]);
            c.reached = c.reached.unite(e.outvertex);
            c.produced = c.produced.unite(e.outvertex);
        }
    }
    std::sort(c.fired.begin(), c.fired.end());
    return c;
}

// Edges of `pool` that feed `target`, directly or through other edges of `pool`.
std::vector<std::size_t> relevant(const ConditionalMetagraph& g, const ElementSet& target,
                                  const std::vector<std::size_t>& pool) {
    ElementSet needed = target;
    std::vector<bool> in(pool.size(), false);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (in[i]) continue;
            const MetaEdge& e = g.edges()[pool[i]];
            if (!e.outvertex.intersects(needed)) continue;
            in[i] = true;
            changed = true;
            needed = needed.unite(e.invertex);
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (in[i]) out.push_back(pool[i]);
    return out;
}

std::vector<std::size_t> all_edges(const ConditionalMetagraph& g) {
    std::vector<std::size_t> v(g.edges().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

} // namespace

bool is_metapath(const ConditionalMetagraph& g, const ElementSet& source, const ElementSet& target,
                 const std::vector<std::size_t>& edges) {
    if (edges.empty()) return false;
    std::vector<std::size_t> m = edges;
    std::sort(m.begin(), m.end());
    if (std::adjacent_find(m.begin(), m.end()) != m.end() || m.back() >= g.edges().size()) return false;
    Closure c = fire(g, source, m);
    if (c.fired.size() != m.size()) return false;
    if (!c.produced.includes(target)) return false;
    return relevant(g, target, m).size() == m.size();
}

MetapathSearch metapaths(const ConditionalMetagraph& g, const ElementSet& source, const ElementSet& target,
                         std::size_t exhaustive_limit, std::size_t max_paths) {
    MetapathSearch out;
    Closure c = fire(g, source, all_edges(g));
    if (!c.produced.includes(target)) return out;
    const std::vector<std::size_t> cand = relevant(g, target, c.fired);
    const std::size_t k = cand.size();

    auto consider = [&](const std::vector<std::size_t>& subset) {
        if (is_metapath(g, source, target, subset)) out.paths.push_back({source, target, subset});
    };
    if (k <= exhaustive_limit) {
        for (std::uint64_t mask = 1; mask < (std::uint64_t(1) << k); ++mask) {
            std::vector<std::size_t> subset;
            for (std::size_t i = 0; i < k; ++i)
                if (mask & (std::uint64_t(1) << i)) subset.push_back(cand[i]);
            consider(subset);
        }
    } else {
        // Increasing subset size; stops once max_paths are found or the size budget runs out.
        std::size_t checks = 0;
        const std::size_t budget = max_paths * 100;
        for (std::size_t size = 1; size <= k && !out.truncated; ++size) {
            std::vector<std::size_t> idx(size);
            for (std::size_t i = 0; i < size; ++i) idx[i] = i;
            while (true) {
                if (out.paths.size() >= max_paths || ++checks > budget) {
                    out.truncated = true;
                    break;
                }
                std::vector<std::size_t> subset;
                for (auto i : idx) subset.push_back(cand[i]);
                consider(subset);
                std::size_t pos = size;
                while (pos > 0 && idx[pos - 1] == k - size + pos - 1) --pos;
                if (pos == 0) break;
                ++idx[pos - 1];
                for (std::size_t j = pos; j < size; ++j) idx[j] = idx[j - 1] + 1;
            }
        }
    }
    std::sort(out.paths.begin(), out.paths.end(), [](const Metapath& a, const Metapath& b) {
        if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
        return a.edges < b.edges;
    });
    return out;
}

// A proper sub-metapath exists iff dropping some edge still lets the rest reach the
// target: the relevant part of that closure is then itself a metapath.
bool is_edge_dominant(const ConditionalMetagraph& g, const Metapath& m) {
    for (std::size_t skip = 0; skip < m.edges.size(); ++skip) {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < m.edges.size(); ++i)
            if (i != skip) rest.push_back(m.edges[i]);
        if (rest.empty()) continue;
        Closure c = fire(g, m.source, rest);
        if (!c.fired.empty() && c.produced.includes(m.target)) return false;
    }
    return true;
}

// Reachability only grows with the source set, so testing each B minus one element suffices.
bool is_input_dominant(const ConditionalMetagraph& g, const Metapath& m) {
    const auto pool = all_edges(g);
    for (int b : m.source) {
        ElementSet smaller = m.source.minus(ElementSet{b});
        Closure c = fire(g, smaller, pool);
        if (!c.fired.empty() && c.produced.includes(m.target)) return false;
    }
    return true;
}

bool is_dominant(const ConditionalMetagraph& g, const Metapath& m) {
    return is_edge_dominant(g, m) && is_input_dominant(g, m);
}

namespace {

std::string span(PortRange r) { return r.is_exact() ? std::to_string(r.lo) : std::to_string(r.lo) + "-" + std::to_string(r.hi); }

std::string variable_name(const AceEndpoint& e, std::string_view gateway_namespace) {
    switch (e.kind) {
    case AceEndpoint::Kind::Wildcard: return "*";
    case AceEndpoint::Kind::Controller:
        return e.value == gateway_namespace ? "local-gateway" : "controller:" + e.value;
    case AceEndpoint::Kind::MyController: return "my-controller";
    case AceEndpoint::Kind::LocalNetworks: return "local-network";
    case AceEndpoint::Kind::SameManufacturer: return "same-manufacturer";
    case AceEndpoint::Kind::Domain: return e.value;
    case AceEndpoint::Kind::Literal: return e.ip.to_string();
    }
    return "?";
}

EndpointClass class_of_variable(const std::string& v, std::string_view gateway_namespace) {
    if (v == "*") return EndpointClass::any();
    if (v == "local-gateway") return {EndpointClass::Kind::Controller, std::string(gateway_namespace), {}};
    if (v == "local-network") return EndpointClass::local_networks();
    if (v == "my-controller") return {EndpointClass::Kind::MyController, {}, {}};
    if (v == "same-manufacturer") return {EndpointClass::Kind::SameManufacturer, {}, {}};
    if (v.starts_with("controller:")) return {EndpointClass::Kind::Controller, v.substr(11), {}};
    if (auto ip = Ipv4::parse(v)) return {EndpointClass::Kind::Literal, {}, *ip};
    return {EndpointClass::Kind::Domain, v, {}};
}

std::optional<unsigned> number(std::string_view s) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace

ConditionalMetagraph from_mud(const MudProfile& profile, std::string_view gateway_namespace) {
    ConditionalMetagraph g;
    const int device = g.add_variable("device");
    for (const auto& a : profile.aces()) {
        const int remote = g.add_variable(variable_name(a.endpoint, gateway_namespace));
        ElementSet props;
        if (a.ip_proto) {
            props.insert(g.add_proposition("protocol=" + std::to_string(*a.ip_proto)));
            if (*a.ip_proto == ipproto::tcp || *a.ip_proto == ipproto::udp) {
                const std::string p = proto_name(*a.ip_proto);
                props.insert(g.add_proposition(p + ".sport=" + span(a.src_port)));
                props.insert(g.add_proposition(p + ".dport=" + span(a.dst_port)));
            } else if (*a.ip_proto == ipproto::icmp) {
                if (a.icmp_type) props.insert(g.add_proposition("ICMP.type=" + std::to_string(*a.icmp_type)));
                if (a.icmp_code) props.insert(g.add_proposition("ICMP.code=" + std::to_string(*a.icmp_code)));
            }
        }
        props.insert(g.add_proposition(a.action == AceAction::Accept ? "action=accept" : "action=drop"));
        if (a.direction == Direction::FromDevice) g.add_edge(props.unite({device}), {remote}, a.name);
        else g.add_edge(props.unite({remote}), {device}, a.name);
    }
    return g;
}

std::optional<EdgeSemantics> edge_semantics(const ConditionalMetagraph& g, std::size_t edge,
                                            std::string_view gateway_namespace) {
    const MetaEdge& e = g.edges().at(edge);
    std::vector<int> in_vars;
    ElementSet props;
    for (int id : e.invertex) {
        if (g.is_proposition(id)) props.insert(id);
        else in_vars.push_back(id);
    }
    if (in_vars.size() != 1 || e.outvertex.size() != 1 || g.is_proposition(*e.outvertex.begin())) return std::nullopt;
    const std::string& src = g.name(in_vars.front());
    const std::string& dst = g.name(*e.outvertex.begin());
    EdgeSemantics s;
    if (src == "device" && dst != "device") {
        s.direction = Direction::FromDevice;
        s.endpoint = class_of_variable(dst, gateway_namespace);
    } else if (dst == "device" && src != "device") {
        s.direction = Direction::ToDevice;
        s.endpoint = class_of_variable(src, gateway_namespace);
    } else {
        return std::nullopt;
    }

    std::optional<int> proto;
    PortRange sport, dport;
    std::optional<std::uint8_t> itype, icode;
    bool have_action = false;
    for (int id : props) {
        std::string_view p = g.name(id);
        auto eq = p.find('=');
        if (eq == std::string_view::npos) return std::nullopt;
        auto key = p.substr(0, eq), val = p.substr(eq + 1);
        if (key == "protocol") {
            auto n = number(val);
            if (!n || *n > 255) return std::nullopt;
            proto = static_cast<int>(*n);
        } else if (key.ends_with(".sport") || key.ends_with(".dport")) {
            auto r = PortRange::parse(val);
            if (!r) return std::nullopt;
            (key.ends_with(".sport") ? sport : dport) = *r;
        } else if (key == "ICMP.type" || key == "ICMP.code") {
            auto n = number(val);
            if (!n || *n > 255) return std::nullopt;
            (key == "ICMP.type" ? itype : icode) = static_cast<std::uint8_t>(*n);
        } else if (key == "action") {
            if (val != "accept" && val != "drop") return std::nullopt;
            s.accept = val == "accept";
            have_action = true;
        } else {
            return std::nullopt;
        }
    }
    if (!have_action) return std::nullopt;
    const bool from = s.direction == Direction::FromDevice;
    s.region = traffic_region(proto, from ? sport : dport, from ? dport : sport, itype, icode);
    return s;
}

std::vector<RedundancyFinding> find_redundancies(const ConditionalMetagraph& g, std::string_view gateway_namespace) {
    const std::size_t n = g.edges().size();
    std::vector<std::optional<EdgeSemantics>> sem(n);
    for (std::size_t i = 0; i < n; ++i) sem[i] = edge_semantics(g, i, gateway_namespace);

    auto comparable = [&](std::size_t a, std::size_t b) {
        return sem[a]->direction == sem[b]->direction &&
               (sem[a]->endpoint.covers(sem[b]->endpoint) || sem[b]->endpoint.covers(sem[a]->endpoint));
    };
    auto witness_of = [&](const std::vector<std::size_t>& edges) {
        Metapath m;
        m.edges = edges;
        for (auto e : edges) {
            m.source = m.source.unite(g.edges()[e].invertex);
            m.target = m.target.unite(g.edges()[e].outvertex);
        }
        return m;
    };

    std::vector<RedundancyFinding> out;
    std::vector<bool> active(n, false);
    for (std::size_t i = 0; i < n; ++i) active[i] = sem[i] && sem[i]->accept;

    // Later edges are tested first, so of two identical rules the earlier one survives.
    for (std::size_t i = n; i-- > 0;) {
        if (!active[i]) continue;
        std::vector<std::size_t> cover;
        Region covered(3);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !active[j] || sem[j]->direction != sem[i]->direction) continue;
            if (!sem[j]->endpoint.covers(sem[i]->endpoint)) continue;
            if (!sem[j]->region.overlaps(sem[i]->region)) continue;
            cover.push_back(j);
            covered = covered.unite(sem[j]->region);
        }
        if (cover.empty() || !sem[i]->region.subset_of(covered)) continue;
        // Shrink to an irreducible cover.
        for (std::size_t k = cover.size(); k-- > 0;) {
            Region rest(3);
            for (std::size_t t = 0; t < cover.size(); ++t)
                if (t != k) rest = rest.unite(sem[cover[t]]->region);
            if (sem[i]->region.subset_of(rest)) cover.erase(cover.begin() + static_cast<std::ptrdiff_t>(k));
        }
        active[i] = false;
        RedundancyFinding f;
        f.edge = i;
        f.ace_name = g.edges()[i].label;
        f.witness = witness_of(cover);
        f.witness_dominant = is_dominant(g, f.witness);
        out.push_back(std::move(f));
    }

    for (std::size_t d = 0; d < n; ++d) {
        if (!sem[d] || sem[d]->accept) continue;
        std::vector<std::size_t> clash;
        for (std::size_t a = 0; a < n; ++a)
            if (sem[a] && sem[a]->accept && comparable(a, d) && sem[a]->region.overlaps(sem[d]->region))
                clash.push_back(a);
        if (clash.empty()) continue;
        RedundancyFinding f;
        f.category = RedundancyFinding::Category::Ambiguous;
        f.edge = d;
        f.ace_name = g.edges()[d].label;
        f.witness = witness_of(clash);
        f.witness_dominant = is_dominant(g, f.witness);
        out.push_back(std::move(f));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.edge < b.edge; });
    return out;
}

RedundancySummary summarize(const ConditionalMetagraph& g, const std::vector<RedundancyFinding>& findings,
                            double cpu_time_ms) {
    RedundancySummary s;
    s.rule_count = g.edges().size();
    s.redundant_count = static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const auto& f) {
        return f.category == RedundancyFinding::Category::Redundant;
    }));
    s.cpu_time_ms = cpu_time_ms;
    return s;
}

std::string redundancy_json(const ConditionalMetagraph& g, const std::vector<RedundancyFinding>& findings) {
    auto list = nlohmann::ordered_json::array();
    for (const auto& f : findings) {
        nlohmann::ordered_json j;
        j["ace_name"] = f.ace_name;
        j["category"] = f.category == RedundancyFinding::Category::Redundant ? "redundant" : "ambiguous";
        auto w = nlohmann::ordered_json::array();
        for (auto e : f.witness.edges) w.push_back(g.edges()[e].label);
        j["witness"] = w;
        j["witness_dominant"] = f.witness_dominant;
        list.push_back(std::move(j));
    }
    return list.dump(2);
}

} // namespace mudscope
