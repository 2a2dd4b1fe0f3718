#include "mudscope/mud.hpp"

#include <json.hpp>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mudscope {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string AceEndpoint::to_string() const {
    switch (kind) {
    case Kind::Wildcard: return "*";
    case Kind::Domain: return value;
    case Kind::Controller: return "controller:" + value;
    case Kind::MyController: return "my-controller";
    case Kind::LocalNetworks: return "local-networks";
    case Kind::SameManufacturer: return "same-manufacturer";
    case Kind::Literal: return ip.to_string();
    }
    return "?";
}

void MudAce::set_ports(PortRange device, PortRange remote) {
    if (direction == Direction::FromDevice) {
        src_port = device;
        dst_port = remote;
    } else {
        src_port = remote;
        dst_port = device;
    }
}

Channel MudAce::channel() const {
    switch (endpoint.kind) {
    case AceEndpoint::Kind::Controller:
    case AceEndpoint::Kind::MyController:
    case AceEndpoint::Kind::LocalNetworks:
    case AceEndpoint::Kind::SameManufacturer: return Channel::Local;
    case AceEndpoint::Kind::Literal: return endpoint.ip.has_local_significance() ? Channel::Local : Channel::Internet;
    default: return Channel::Internet;
    }
}

std::vector<MudAce> MudProfile::aces() const {
    std::vector<MudAce> all = from_device;
    all.insert(all.end(), to_device.begin(), to_device.end());
    return all;
}

bool MudProfile::has_drop() const {
    auto drop = [](const MudAce& a) { return a.action == AceAction::Drop; };
    return std::any_of(from_device.begin(), from_device.end(), drop) ||
           std::any_of(to_device.begin(), to_device.end(), drop);
}

const std::vector<MudSchemaEntry>& mud_schema() {
    static const std::vector<MudSchemaEntry> table = {
        {"root", "ietf-mud:mud", "object", "mud"},
        {"root", "ietf-access-control-list:acls", "object", "acls"},

        {"mud", "mud-version", "integer", ""},
        {"mud", "mud-url", "string", ""},
        {"mud", "last-update", "string", ""},
        {"mud", "mud-signature", "string", ""},
        {"mud", "cache-validity", "integer", ""},
        {"mud", "is-supported", "boolean", ""},
        {"mud", "systeminfo", "string", ""},
        {"mud", "mfg-name", "string", ""},
        {"mud", "model-name", "string", ""},
        {"mud", "firmware-rev", "string", ""},
        {"mud", "software-rev", "string", ""},
        {"mud", "documentation", "string", ""},
        {"mud", "extensions", "string-list", ""},
        {"mud", "from-device-policy", "object", "policy"},
        {"mud", "to-device-policy", "object", "policy"},
        {"policy", "access-lists", "object", "acl-refs"},
        {"acl-refs", "access-list", "array", "acl-ref"},
        {"acl-ref", "name", "string", ""},

        {"acls", "acl", "array", "acl"},
        {"acl", "name", "string", ""},
        {"acl", "type", "string", ""},
        {"acl", "aces", "object", "aces"},
        {"aces", "ace", "array", "ace"},
        {"ace", "name", "string", ""},
        {"ace", "matches", "object", "matches"},
        {"ace", "actions", "object", "actions"},
        {"actions", "forwarding", "string", ""},

        {"matches", "ipv4", "object", "ipv4"},
        {"matches", "tcp", "object", "tcp"},
        {"matches", "udp", "object", "udp"},
        {"matches", "icmp", "object", "icmp"},
        {"matches", "ietf-mud:mud", "object", "mud-match"},
        {"ipv4", "protocol", "integer", ""},
        {"ipv4", "ietf-acldns:dst-dnsname", "string", ""},
        {"ipv4", "ietf-acldns:src-dnsname", "string", ""},
        {"ipv4", "destination-ipv4-network", "string", ""},
        {"ipv4", "source-ipv4-network", "string", ""},
        {"tcp", "source-port", "object", "port"},
        {"tcp", "destination-port", "object", "port"},
        {"tcp", "ietf-mud:direction-initiated", "string", ""},
        {"udp", "source-port", "object", "port"},
        {"udp", "destination-port", "object", "port"},
        {"port", "operator", "string", ""},
        {"port", "port", "integer", ""},
        {"port", "lower-port", "integer", ""},
        {"port", "upper-port", "integer", ""},
        {"icmp", "type", "integer", ""},
        {"icmp", "code", "integer", ""},
        {"mud-match", "controller", "string", ""},
        {"mud-match", "my-controller", "null-list", ""},
        {"mud-match", "local-networks", "null-list", ""},
        {"mud-match", "same-manufacturer", "null-list", ""},
        {"mud-match", "manufacturer", "string", ""},
        {"mud-match", "model", "string", ""},
    };
    return table;
}

namespace {

class Parser {
public:
    std::vector<MudDiagnostic> errors;

    void error(const std::string& path, std::string msg) { errors.push_back({path, std::move(msg)}); }

    void check_schema(const json& node, std::string_view context, const std::string& path) {
        for (auto it = node.begin(); it != node.end(); ++it) {
            const std::string child_path = path + "." + it.key();
            const MudSchemaEntry* entry = find(context, it.key());
            if (!entry) {
                error(child_path, "unknown element '" + it.key() + "'");
                continue;
            }
            const json& v = it.value();
            if (entry->type == "object") {
                if (!v.is_object()) error(child_path, "expected object");
                else check_schema(v, entry->child, child_path);
            } else if (entry->type == "array") {
                if (!v.is_array()) {
                    error(child_path, "expected array");
                    continue;
                }
                for (std::size_t i = 0; i < v.size(); ++i) {
                    auto p = child_path + "[" + std::to_string(i) + "]";
                    if (!v[i].is_object()) error(p, "expected object");
                    else check_schema(v[i], entry->child, p);
                }
            } else if (entry->type == "string") {
                if (!v.is_string()) error(child_path, "expected string");
            } else if (entry->type == "integer") {
                if (!v.is_number_integer()) error(child_path, "expected integer");
            } else if (entry->type == "boolean") {
                if (!v.is_boolean()) error(child_path, "expected boolean");
            } else if (entry->type == "null-list") {
                if (!v.is_array() || v.size() != 1 || !v[0].is_null()) error(child_path, "expected [null]");
            } else if (entry->type == "string-list") {
                if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); }))
                    error(child_path, "expected list of strings");
            }
        }
    }

    std::optional<PortRange> port(const json& p, const std::string& path) {
        if (p.contains("operator") || p.contains("port")) {
            if (p.contains("lower-port") || p.contains("upper-port")) {
                error(path, "port operator and range are mutually exclusive");
                return std::nullopt;
            }
            std::string op = p.value("operator", "eq");
            if (op != "eq") {
                error(path + ".operator", "unsupported port operator '" + op + "'");
                return std::nullopt;
            }
            if (!p.contains("port") || !p["port"].is_number_integer()) {
                error(path, "missing port");
                return std::nullopt;
            }
            auto v = p["port"].get<long long>();
            if (v < 0 || v > 65535) {
                error(path + ".port", "port out of range");
                return std::nullopt;
            }
            return PortRange::exact(static_cast<std::uint16_t>(v));
        }
        if (!p.contains("lower-port") || !p.contains("upper-port") || !p["lower-port"].is_number_integer() ||
            !p["upper-port"].is_number_integer()) {
            error(path, "port range needs lower-port and upper-port");
            return std::nullopt;
        }
        auto lo = p["lower-port"].get<long long>(), hi = p["upper-port"].get<long long>();
        if (lo < 0 || hi > 65535 || lo > hi) {
            error(path, "invalid port range");
            return std::nullopt;
        }
        return PortRange{static_cast<std::uint16_t>(lo), static_cast<std::uint16_t>(hi)};
    }

    std::optional<MudAce> ace(const json& a, Direction dir, const std::string& path) {
        MudAce out;
        out.direction = dir;
        bool ok = true;
        if (!a.contains("name") || !a["name"].is_string() || a["name"].get<std::string>().empty()) {
            error(path, "ACE without a name");
            ok = false;
        } else {
            out.name = a["name"].get<std::string>();
        }

        const json empty = json::object();
        const json& m = a.contains("matches") && a["matches"].is_object() ? a["matches"] : empty;
        const bool from = dir == Direction::FromDevice;
        std::vector<AceEndpoint> endpoints;

        if (m.contains("ipv4") && m["ipv4"].is_object()) {
            const json& ip = m["ipv4"];
            auto ipath = path + ".matches.ipv4";
            if (ip.contains("protocol") && ip["protocol"].is_number_integer()) {
                auto p = ip["protocol"].get<long long>();
                if (p < 0 || p > 255) {
                    error(ipath + ".protocol", "protocol out of range");
                    ok = false;
                } else {
                    out.ip_proto = static_cast<int>(p);
                }
            }
            const char* remote_dns = from ? "ietf-acldns:dst-dnsname" : "ietf-acldns:src-dnsname";
            const char* device_dns = from ? "ietf-acldns:src-dnsname" : "ietf-acldns:dst-dnsname";
            const char* remote_net = from ? "destination-ipv4-network" : "source-ipv4-network";
            const char* device_net = from ? "source-ipv4-network" : "destination-ipv4-network";
            for (const char* k : {device_dns, device_net})
                if (ip.contains(k)) {
                    error(ipath + "." + k, "names the device side of a " + std::string(to_string(dir)) + " ACE");
                    ok = false;
                }
            if (ip.contains(remote_dns) && ip[remote_dns].is_string()) {
                auto name = to_lower(ip[remote_dns].get<std::string>());
                if (!name.empty() && name.back() == '.') name.pop_back();
                if (name.empty()) {
                    error(ipath + "." + remote_dns, "empty domain name");
                    ok = false;
                } else {
                    endpoints.push_back(AceEndpoint::domain(name));
                }
            }
            if (ip.contains(remote_net) && ip[remote_net].is_string()) {
                auto text = ip[remote_net].get<std::string>();
                auto net = Subnet::parse(text);
                if (!net) {
                    error(ipath + "." + remote_net, "invalid IPv4 network '" + text + "'");
                    ok = false;
                } else if (net->prefix != 32) {
                    error(ipath + "." + remote_net, "only host (/32) networks are supported");
                    ok = false;
                } else {
                    endpoints.push_back(AceEndpoint::literal(net->network));
                }
            }
        }

        if (m.contains("ietf-mud:mud") && m["ietf-mud:mud"].is_object()) {
            const json& mm = m["ietf-mud:mud"];
            if (mm.contains("controller") && mm["controller"].is_string())
                endpoints.push_back(AceEndpoint::controller(mm["controller"].get<std::string>()));
            if (mm.contains("my-controller")) endpoints.push_back(AceEndpoint::my_controller());
            if (mm.contains("local-networks")) endpoints.push_back(AceEndpoint::local_networks());
            if (mm.contains("same-manufacturer")) endpoints.push_back(AceEndpoint::same_manufacturer());
            for (const char* k : {"manufacturer", "model"})
                if (mm.contains(k)) {
                    error(path + ".matches.ietf-mud:mud." + k, std::string("'") + k + "' endpoints are not supported");
                    ok = false;
                }
        }
        if (endpoints.size() > 1) {
            error(path + ".matches", "conflicting endpoint matches");
            ok = false;
        } else if (endpoints.size() == 1) {
            out.endpoint = endpoints.front();
        }

        int l4_blocks = 0;
        for (const auto& [key, proto] : {std::pair{"tcp", ipproto::tcp}, {"udp", ipproto::udp}, {"icmp", ipproto::icmp}}) {
            if (!m.contains(key) || !m[key].is_object()) continue;
            ++l4_blocks;
            auto lpath = path + ".matches." + key;
            if (!out.ip_proto) out.ip_proto = proto;
            if (*out.ip_proto != proto) {
                error(lpath, std::string(key) + " match with protocol " + std::to_string(*out.ip_proto));
                ok = false;
                continue;
            }
            const json& l4 = m[key];
            if (proto == ipproto::icmp) {
                for (const char* f : {"type", "code"}) {
                    if (!l4.contains(f) || !l4[f].is_number_integer()) continue;
                    auto v = l4[f].get<long long>();
                    if (v < 0 || v > 255) {
                        error(lpath + "." + f, "out of range");
                        ok = false;
                        continue;
                    }
                    (std::string_view(f) == "type" ? out.icmp_type : out.icmp_code) = static_cast<std::uint8_t>(v);
                }
                continue;
            }
            if (l4.contains("source-port") && l4["source-port"].is_object()) {
                if (auto p = port(l4["source-port"], lpath + ".source-port")) out.src_port = *p;
                else ok = false;
            }
            if (l4.contains("destination-port") && l4["destination-port"].is_object()) {
                if (auto p = port(l4["destination-port"], lpath + ".destination-port")) out.dst_port = *p;
                else ok = false;
            }
        }
        if (l4_blocks > 1) {
            error(path + ".matches", "more than one transport match");
            ok = false;
        }

        if (!a.contains("actions") || !a["actions"].is_object() || !a["actions"].contains("forwarding")) {
            error(path, "ACE without a forwarding action");
            ok = false;
        } else if (a["actions"]["forwarding"].is_string()) {
            auto act = a["actions"]["forwarding"].get<std::string>();
            if (act == "accept") out.action = AceAction::Accept;
            else if (act == "drop") out.action = AceAction::Drop;
            else {
                error(path + ".actions.forwarding", "unsupported action '" + act + "'");
                ok = false;
            }
        }
        if (!ok) return std::nullopt;
        return out;
    }

private:
    static const MudSchemaEntry* find(std::string_view context, std::string_view key) {
        for (const auto& e : mud_schema())
            if (e.context == context && e.key == key) return &e;
        return nullptr;
    }
};

} // namespace

MudParseResult parse_mud(std::string_view text) {
    MudParseResult result;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        result.errors.push_back({"$", std::string("invalid JSON: ") + e.what()});
        return result;
    }
    Parser p;
    if (!doc.is_object()) {
        p.error("$", "top level must be an object");
        result.errors = std::move(p.errors);
        return result;
    }
    p.check_schema(doc, "root", "$");
    if (!doc.contains("ietf-access-control-list:acls")) p.error("$", "missing access-lists container");
    if (!doc.contains("ietf-mud:mud")) p.error("$", "missing mud container");

    MudProfile prof;
    const json empty = json::object();
    const json& mud = doc.contains("ietf-mud:mud") && doc["ietf-mud:mud"].is_object() ? doc["ietf-mud:mud"] : empty;
    auto str = [&](const char* k) { return mud.contains(k) && mud[k].is_string() ? mud[k].get<std::string>() : ""; };
    if (doc.contains("ietf-mud:mud")) {
        if (!mud.contains("mud-url")) p.error("$.ietf-mud:mud", "missing mud-url");
        if (mud.contains("mud-version") && mud["mud-version"].is_number_integer()) {
            prof.mud_version = mud["mud-version"].get<int>();
            if (prof.mud_version != 1) p.error("$.ietf-mud:mud.mud-version", "unsupported mud-version");
        }
        if (mud.contains("cache-validity") && mud["cache-validity"].is_number_integer())
            prof.cache_validity = mud["cache-validity"].get<int>();
        if (mud.contains("is-supported") && mud["is-supported"].is_boolean())
            prof.is_supported = mud["is-supported"].get<bool>();
    }
    prof.mud_url = str("mud-url");
    prof.last_update = str("last-update");
    prof.systeminfo = str("systeminfo");

    // ACL name -> direction, from the two policy containers.
    std::map<std::string, Direction> referenced;
    for (auto [key, dir] : {std::pair{"from-device-policy", Direction::FromDevice}, {"to-device-policy", Direction::ToDevice}}) {
        if (!mud.contains(key) || !mud[key].is_object()) continue;
        const json& pol = mud[key];
        if (!pol.contains("access-lists") || !pol["access-lists"].is_object()) continue;
        const json& al = pol["access-lists"];
        if (!al.contains("access-list") || !al["access-list"].is_array()) continue;
        for (std::size_t i = 0; i < al["access-list"].size(); ++i) {
            const json& ref = al["access-list"][i];
            if (!ref.is_object() || !ref.contains("name") || !ref["name"].is_string()) continue;
            auto name = ref["name"].get<std::string>();
            auto [it, fresh] = referenced.emplace(name, dir);
            if (!fresh && it->second != dir)
                p.error("$.ietf-mud:mud." + std::string(key) + ".access-lists.access-list[" + std::to_string(i) + "]",
                        "access list '" + name + "' used in both directions");
        }
    }

    std::set<std::string> ace_names;
    std::set<std::string> seen_acls;
    if (doc.contains("ietf-access-control-list:acls") && doc["ietf-access-control-list:acls"].is_object()) {
        const json& acls = doc["ietf-access-control-list:acls"];
        const json list = acls.contains("acl") && acls["acl"].is_array() ? acls["acl"] : json::array();
        for (std::size_t i = 0; i < list.size(); ++i) {
            const json& acl = list[i];
            auto apath = "$.ietf-access-control-list:acls.acl[" + std::to_string(i) + "]";
            if (!acl.is_object()) continue;
            if (!acl.contains("name") || !acl["name"].is_string()) {
                p.error(apath, "access list without a name");
                continue;
            }
            auto name = acl["name"].get<std::string>();
            if (!seen_acls.insert(name).second) p.error(apath, "duplicate access list '" + name + "'");
            auto dir_it = referenced.find(name);
            if (dir_it == referenced.end()) {
                p.error(apath, "access list '" + name + "' is not referenced by any policy");
                continue;
            }
            if (acl.contains("type") && acl["type"].is_string() && acl["type"] != "ipv4-acl-type")
                p.error(apath + ".type", "unsupported acl type '" + acl["type"].get<std::string>() + "'");
            if (!acl.contains("aces") || !acl["aces"].is_object() || !acl["aces"].contains("ace") ||
                !acl["aces"]["ace"].is_array())
                continue;
            const json& aces = acl["aces"]["ace"];
            for (std::size_t j = 0; j < aces.size(); ++j) {
                auto path = apath + ".aces.ace[" + std::to_string(j) + "]";
                if (!aces[j].is_object()) continue;
                auto a = p.ace(aces[j], dir_it->second, path);
                if (!a) continue;
                if (!ace_names.insert(a->name).second) {
                    p.error(path + ".name", "duplicate ACE name '" + a->name + "'");
                    continue;
                }
                (a->direction == Direction::FromDevice ? prof.from_device : prof.to_device).push_back(std::move(*a));
            }
        }
    }
    for (const auto& [name, dir] : referenced)
        if (!seen_acls.count(name))
            p.error("$.ietf-mud:mud." + std::string(dir == Direction::FromDevice ? "from" : "to") + "-device-policy",
                    "policy references unknown access list '" + name + "'");

    result.errors = std::move(p.errors);
    if (result.errors.empty()) result.profile = std::move(prof);
    return result;
}

MudParseResult parse_mud_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        MudParseResult r;
        r.errors.push_back({"$", "cannot open " + path});
        return r;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_mud(ss.str());
}

ScopeReport validate_address_scope(const MudProfile& profile) {
    ScopeReport r;
    for (const auto* list : {&profile.from_device, &profile.to_device}) {
        for (const auto& a : *list) {
            if (a.endpoint.kind != AceEndpoint::Kind::Literal) continue;
            const Ipv4 ip = a.endpoint.ip;
            std::string reason;
            if (ip.is_private()) reason = "private (RFC 1918) address";
            else if (ip.is_link_local()) reason = "link-local address";
            else if (ip.is_loopback()) reason = "loopback address";
            if (!reason.empty()) r.violations.push_back({a.name, ip.to_string(), reason});
            else r.warnings.push_back({a.name, ip.to_string(), "explicit public address; prefer a domain name"});
        }
    }
    std::sort(r.violations.begin(), r.violations.end());
    std::sort(r.warnings.begin(), r.warnings.end());
    return r;
}

namespace {

std::string acl_slug(const MudProfile& p) {
    std::string src = p.systeminfo.empty() ? p.mud_url : p.systeminfo;
    std::string out;
    for (char c : src) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) out += static_cast<char>(std::tolower(u));
        else if (!out.empty() && out.back() != '-') out += '-';
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "device" : out;
}

ojson port_json(PortRange r) {
    ojson j = ojson::object();
    if (r.is_exact()) {
        j["operator"] = "eq";
        j["port"] = r.lo;
    } else {
        j["lower-port"] = r.lo;
        j["upper-port"] = r.hi;
    }
    return j;
}

ojson ace_json(const MudAce& a) {
    const bool from = a.direction == Direction::FromDevice;
    ojson matches = ojson::object();
    ojson mud_match = ojson::object();
    ojson ipv4 = ojson::object();
    if (a.ip_proto) ipv4["protocol"] = *a.ip_proto;
    switch (a.endpoint.kind) {
    case AceEndpoint::Kind::Domain:
        ipv4[from ? "ietf-acldns:dst-dnsname" : "ietf-acldns:src-dnsname"] = a.endpoint.value;
        break;
    case AceEndpoint::Kind::Literal:
        ipv4[from ? "destination-ipv4-network" : "source-ipv4-network"] = a.endpoint.ip.to_string() + "/32";
        break;
    case AceEndpoint::Kind::Controller: mud_match["controller"] = a.endpoint.value; break;
    case AceEndpoint::Kind::MyController: mud_match["my-controller"] = ojson::array({nullptr}); break;
    case AceEndpoint::Kind::LocalNetworks: mud_match["local-networks"] = ojson::array({nullptr}); break;
    case AceEndpoint::Kind::SameManufacturer: mud_match["same-manufacturer"] = ojson::array({nullptr}); break;
    case AceEndpoint::Kind::Wildcard: break;
    }
    if (!mud_match.empty()) matches["ietf-mud:mud"] = mud_match;
    if (!ipv4.empty()) matches["ipv4"] = ipv4;
    if (a.ip_proto == ipproto::tcp || a.ip_proto == ipproto::udp) {
        ojson l4 = ojson::object();
        if (!a.src_port.is_any()) l4["source-port"] = port_json(a.src_port);
        if (!a.dst_port.is_any()) l4["destination-port"] = port_json(a.dst_port);
        if (!l4.empty()) matches[*a.ip_proto == ipproto::tcp ? "tcp" : "udp"] = l4;
    } else if (a.ip_proto == ipproto::icmp && (a.icmp_type || a.icmp_code)) {
        ojson icmp = ojson::object();
        if (a.icmp_type) icmp["type"] = *a.icmp_type;
        if (a.icmp_code) icmp["code"] = *a.icmp_code;
        matches["icmp"] = icmp;
    }
    ojson j = ojson::object();
    j["name"] = a.name;
    j["matches"] = matches;
    j["actions"] = {{"forwarding", a.action == AceAction::Accept ? "accept" : "drop"}};
    return j;
}

} // namespace

std::string emit_mud_json(const MudProfile& p) {
    const std::string slug = acl_slug(p);
    const std::string from_acl = "from-ipv4-" + slug, to_acl = "to-ipv4-" + slug;
    auto policy = [](const std::string& acl) {
        ojson ref = ojson::object();
        ref["name"] = acl;
        ojson lists = ojson::object();
        lists["access-list"] = ojson::array({ref});
        ojson pol = ojson::object();
        pol["access-lists"] = lists;
        return pol;
    };
    auto acl = [](const std::string& name, const std::vector<MudAce>& aces) {
        ojson list = ojson::array();
        for (const auto& a : aces) list.push_back(ace_json(a));
        ojson j = ojson::object();
        j["name"] = name;
        j["type"] = "ipv4-acl-type";
        j["aces"] = {{"ace", list}};
        return j;
    };

    ojson mud = ojson::object();
    mud["mud-version"] = p.mud_version;
    mud["mud-url"] = p.mud_url;
    mud["last-update"] = p.last_update;
    mud["cache-validity"] = p.cache_validity;
    mud["is-supported"] = p.is_supported;
    mud["systeminfo"] = p.systeminfo;
    mud["from-device-policy"] = policy(from_acl);
    mud["to-device-policy"] = policy(to_acl);

    ojson doc = ojson::object();
    doc["ietf-mud:mud"] = mud;
    doc["ietf-access-control-list:acls"] = {{"acl", ojson::array({acl(from_acl, p.from_device), acl(to_acl, p.to_device)})}};
    return doc.dump(2) + "\n";
}

std::string format_timestamp(double unix_seconds) {
    std::time_t t = static_cast<std::time_t>(unix_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S+00:00", &tm);
    return buf;
}

} // namespace mudscope
