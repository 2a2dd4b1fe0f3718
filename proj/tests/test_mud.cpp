#include <doctest.h>

#include "oracles.hpp"

#include "mudscope/flow_tracker.hpp"
#include "mudscope/mud.hpp"
#include "mudscope/mud_gen.hpp"
#include "mudscope/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>
#include <set>

using namespace mudscope;

namespace {

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

bool has_error(const MudParseResult& r, const std::string& text) {
    return std::any_of(r.errors.begin(), r.errors.end(),
                       [&](const MudDiagnostic& d) { return d.message.find(text) != std::string::npos; });
}

FlowRecord literal_flow(Ipv4 ip, Direction d, std::uint16_t port) {
    FlowRecord f;
    f.channel = Channel::Internet;
    f.direction = d;
    f.remote = FlowEndpoint::literal(ip);
    f.ip_proto = ipproto::tcp;
    f.remote_port = PortRange::exact(port);
    f.packets = 3;
    return f;
}

std::vector<FlowRecord> fanout(int n) {
    std::vector<FlowRecord> out;
    for (int i = 0; i < n; ++i)
        for (Direction d : {Direction::FromDevice, Direction::ToDevice})
            out.push_back(literal_flow(Ipv4{198, 51, 100, static_cast<std::uint8_t>(i + 1)}, d, 10001));
    return out;
}

TrackResult blipcare_flows() {
    const synth::SynthOptions so;
    return track_device(synth::blipcare_trace(so).events(), so.device_mac, so.gateway_mac, default_local_subnets());
}

} // namespace

TEST_CASE("Blipcare flows translate to four ACEs") {
    const auto tr = blipcare_flows();
    const MudProfile p = translate(tr.flows, tr.dns).profile;
    REQUIRE(p.from_device.size() == 2);
    REQUIRE(p.to_device.size() == 2);
    int controller = 0, carematix = 0;
    for (const auto& a : p.aces()) {
        CHECK(a.action == AceAction::Accept);
        if (a.endpoint.kind == AceEndpoint::Kind::Controller) {
            ++controller;
            CHECK(a.endpoint.value == kGatewayNamespace);
            CHECK(a.ip_proto == ipproto::udp);
            CHECK(a.remote_port() == PortRange::exact(53));
        } else {
            ++carematix;
            CHECK(a.endpoint == AceEndpoint::domain("tech.carematix.com"));
            CHECK(a.ip_proto == ipproto::tcp);
            CHECK(a.remote_port() == PortRange::exact(8777));
            CHECK(a.device_port().is_any());
        }
    }
    CHECK(controller == 2);
    CHECK(carematix == 2);
}

TEST_CASE("six unnamed addresses on one port collapse to a wildcard") {
    const DnsCache dns;
    const MudProfile six = translate(fanout(6), dns).profile;
    REQUIRE(six.from_device.size() == 1);
    REQUIRE(six.to_device.size() == 1);
    CHECK(six.from_device[0].endpoint.is_wildcard());
    CHECK(six.from_device[0].dst_port == PortRange::exact(10001));
    CHECK(six.to_device[0].src_port == PortRange::exact(10001));

    const MudProfile five = translate(fanout(5), dns).profile;
    CHECK(five.ace_count() == 10);
    for (const auto& a : five.aces()) CHECK_FALSE(a.endpoint.is_wildcard());
}

TEST_CASE("wildcard threshold is configurable and validated") {
    const DnsCache dns;
    GenOptions o;
    o.wildcard_endpoint_threshold = 2;
    CHECK(translate(fanout(3), dns, o).profile.ace_count() == 2);
    o.wildcard_endpoint_threshold = -1;
    CHECK_THROWS_AS(translate(fanout(3), dns, o), std::invalid_argument);
}

TEST_CASE("empty flow set gives an empty profile") {
    const DnsCache dns;
    const MudProfile p = translate({}, dns).profile;
    CHECK(p.from_device.empty());
    CHECK(p.to_device.empty());
}

TEST_CASE("STUN forces wildcard UDP Internet ACEs") {
    FlowRecord f = literal_flow(Ipv4{74, 125, 1, 1}, Direction::FromDevice, 19302);
    f.ip_proto = ipproto::udp;
    f.stun = true;
    CHECK(is_stun_flow(f));
    const DnsCache dns;
    const MudProfile p = translate({f}, dns).profile;
    bool wildcard_udp = false;
    for (const auto& a : p.aces())
        if (a.endpoint.is_wildcard() && a.ip_proto == ipproto::udp) wildcard_udp = true;
    CHECK(wildcard_udp);
    CHECK(emit_flow_report(p).find("\"target\": \"*\"") != std::string::npos);
}

TEST_CASE("extra ACEs are appended") {
    const DnsCache dns;
    GenOptions o;
    MudAce extra;
    extra.name = "vendor-update";
    extra.endpoint = AceEndpoint::domain("update.vendor.example");
    extra.ip_proto = ipproto::tcp;
    extra.set_ports(PortRange::any(), PortRange::exact(443));
    o.extra_aces.push_back(extra);
    const MudProfile p = translate({}, dns, o).profile;
    REQUIRE(p.from_device.size() == 1);
    CHECK(p.from_device[0].endpoint == AceEndpoint::domain("update.vendor.example"));
}

TEST_CASE("MUD JSON for Blipcare") {
    const auto tr = blipcare_flows();
    const MudProfile p = translate(tr.flows, tr.dns).profile;
    const std::string json = emit_mud_json(p);
    CHECK(count_of(json, "8777") == 2);
    CHECK(json.find(std::string(kGatewayNamespace)) != std::string::npos);
    CHECK(json.back() == '\n');
    CHECK(json.find('\r') == std::string::npos);

    const auto report = nlohmann::json::parse(emit_flow_report(p));
    CHECK(report["links"].size() == 4);
    CHECK(nlohmann::json::parse(emit_flow_report(MudProfile{}))["links"].empty());
}

TEST_CASE("round trip: parse(emit(p)) == p") {
    CHECK(parse_mud(emit_mud_json(MudProfile{})).profile == MudProfile{});
    std::mt19937 rng(77);
    for (int i = 0; i < 200; ++i) {
        MudProfile p = oracle::random_profile(rng, i % 9, "rt" + std::to_string(i));
        p.last_update = "2019-01-01T00:00:00+00:00";
        const auto r = parse_mud(emit_mud_json(p));
        REQUIRE(r.ok());
        CHECK(*r.profile == p);
    }
    for (const auto& c : synth::catalog()) {
        const auto r = parse_mud(emit_mud_json(c.profile));
        REQUIRE(r.ok());
        CHECK(*r.profile == c.profile);
    }
}

TEST_CASE("generated profiles are sound and minimal") {
    synth::SynthOptions so;
    so.epochs = 4;
    for (const auto& c : synth::catalog()) {
        auto t = synth::conformant_trace(c.profile, so);
        const auto tr = track_device(t.events(), so.device_mac, so.gateway_mac, default_local_subnets());
        const MudProfile p = translate(tr.flows, tr.dns).profile;
        for (const auto& f : tr.flows) {
            if (f.packets == 0) continue;
            const auto aces = p.aces();
            CHECK_MESSAGE(std::any_of(aces.begin(), aces.end(), [&](const MudAce& a) { return ace_covers(a, f); }),
                          c.name);
        }
        std::set<std::tuple<Direction, AceEndpoint, std::optional<int>, PortRange, PortRange>> seen;
        for (const auto& a : p.aces()) {
            CHECK(seen.insert({a.direction, a.endpoint, a.ip_proto, a.device_port(), a.remote_port()}).second);
            CHECK(a.action == AceAction::Accept);
        }
    }
}

TEST_CASE("parse rejects unsupported actions") {
    std::string json = emit_mud_json(synth::blipcare_profile());
    const auto pos = json.find("\"accept\"");
    REQUIRE(pos != std::string::npos);
    json.replace(pos, 8, "\"log\"");
    const auto r = parse_mud(json);
    CHECK_FALSE(r.ok());
    CHECK(has_error(r, "unsupported action"));
}

TEST_CASE("parse of an empty object") {
    const auto r = parse_mud("{}");
    CHECK_FALSE(r.ok());
    CHECK(has_error(r, "missing access-lists container"));
}

TEST_CASE("parse collects every violation with its path") {
    auto j = nlohmann::json::parse(emit_mud_json(synth::blipcare_profile()));
    j["ietf-mud:mud"]["colour"] = "blue";
    auto& aces = j["ietf-access-control-list:acls"]["acl"][0]["aces"]["ace"];
    aces[0]["actions"]["forwarding"] = "reject";
    aces[1]["matches"]["vendor-extension"] = {{"x", 1}};
    const auto r = parse_mud(j.dump());
    CHECK_FALSE(r.ok());
    CHECK(r.errors.size() >= 3);
    for (const auto& e : r.errors) CHECK_FALSE(e.path.empty());

    CHECK_FALSE(parse_mud("not json").ok());
    CHECK_FALSE(parse_mud("[]").ok());
}

TEST_CASE("address scope") {
    MudProfile p;
    MudAce a;
    a.name = "lan";
    a.endpoint = AceEndpoint::literal(Ipv4{192, 168, 1, 1});
    a.ip_proto = ipproto::tcp;
    p.from_device.push_back(a);
    CHECK(validate_address_scope(p).violations.size() == 1);

    p.from_device[0].endpoint = AceEndpoint::controller(std::string(kGatewayNamespace));
    CHECK(validate_address_scope(p).violations.empty());
    CHECK(validate_address_scope(p).warnings.empty());

    p.from_device[0].endpoint = AceEndpoint::literal(Ipv4{8, 8, 8, 8});
    const auto r = validate_address_scope(p);
    CHECK(r.violations.empty());
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("scope validation ignores ACE order") {
    std::mt19937 rng(9);
    for (int i = 0; i < 50; ++i) {
        MudProfile p = oracle::random_profile(rng, 8, "s" + std::to_string(i));
        MudProfile q = p;
        std::shuffle(q.from_device.begin(), q.from_device.end(), rng);
        std::shuffle(q.to_device.begin(), q.to_device.end(), rng);
        auto a = validate_address_scope(p), b = validate_address_scope(q);
        std::sort(a.violations.begin(), a.violations.end());
        std::sort(b.violations.begin(), b.violations.end());
        std::sort(a.warnings.begin(), a.warnings.end());
        std::sort(b.warnings.begin(), b.warnings.end());
        CHECK(a.violations == b.violations);
        CHECK(a.warnings == b.warnings);
    }
}

TEST_CASE("vocabulary table lists the ACL module") {
    const auto& schema = mud_schema();
    CHECK(std::any_of(schema.begin(), schema.end(),
                      [](const MudSchemaEntry& e) { return e.key == "ietf-access-control-list:acls"; }));
}
