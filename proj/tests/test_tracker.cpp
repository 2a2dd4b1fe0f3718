#include <doctest.h>

#include "mudscope/flow_tracker.hpp"
#include "mudscope/frames.hpp"
#include "mudscope/synth.hpp"

#include <map>
#include <sstream>

using namespace mudscope;

namespace {

const synth::SynthOptions kOpts;

TrackResult track(const TraceBuilder& t) {
    return track_device(t.events(), kOpts.device_mac, kOpts.gateway_mac, default_local_subnets());
}

SideInfo side_of(const FlowTracker& tr, Ipv4 ip, const MacAddress& mac, double at) {
    SideInfo s;
    s.ip = ip;
    s.is_device = mac == kOpts.device_mac;
    s.is_local = tr.is_local(ip);
    s.is_gateway = !s.is_device && mac == kOpts.gateway_mac && s.is_local && !ip.is_multicast() && !ip.is_broadcast();
    if (!s.is_local) s.name = tr.dns_cache().lookup(ip, at);
    return s;
}

} // namespace

TEST_CASE("fresh rule table: priorities and default rule") {
    const RuleTable t = init_rule_table();
    int dns = -1, udp = -1, lowest = 1 << 30;
    for (const auto& r : t.rules()) {
        if (r.label.rfind("dns-query", 0) == 0) dns = r.priority;
        if (r.label.rfind("unknown-udp", 0) == 0) udp = r.priority;
        lowest = std::min(lowest, r.priority);
        CHECK(r.origin == RuleOrigin::Proactive);
    }
    CHECK(dns > udp);
    CHECK(lowest == priority::default_forward);

    // Anything at all lands on some rule.
    PacketEvent ev;
    ev.ip_proto = 47;
    SideInfo a, b;
    CHECK(t.lookup(ev, a, b).has_value());
}

TEST_CASE("rule table construction is deterministic") {
    const RuleTable a = init_rule_table();
    const RuleTable b = init_rule_table();
    REQUIRE(a.rules().size() == b.rules().size());
    for (std::size_t i = 0; i < a.rules().size(); ++i) CHECK(a.rules()[i].to_string() == b.rules()[i].to_string());
}

TEST_CASE("equal priorities resolve to the earliest rule") {
    RuleTable t;
    Rule first;
    first.priority = 10;
    first.label = "first";
    Rule second = first;
    second.label = "second";
    t.insert(first);
    t.insert(second);
    PacketEvent ev;
    SideInfo a, b;
    REQUIRE(t.lookup(ev, a, b).has_value());
    CHECK(t.rules()[*t.lookup(ev, a, b)].label == "first");
}

TEST_CASE("Blipcare: reactive rules per group") {
    synth::SynthOptions o = kOpts;
    const auto events = synth::blipcare_trace(o).events();
    FlowTracker tr(o.device_mac, o.gateway_mac, default_local_subnets());
    std::vector<Rule> inserted;
    for (const auto& ev : events) {
        auto r = tr.process(ev);
        REQUIRE(r.has_value());
        inserted.insert(inserted.end(), r->inserted.begin(), r->inserted.end());
    }
    bool dns_rule = false, carematix_rule = false;
    for (const auto& r : inserted) {
        CHECK(r.origin == RuleOrigin::Reactive);
        if (r.group == RuleGroup::FromLocal && r.match.dst_port == PortRange::exact(53) &&
            r.match.dst.kind == EndpointKind::Gateway)
            dns_rule = true;
        if (r.group == RuleGroup::FromInternet && r.match.ip_proto == ipproto::tcp &&
            r.match.dst_port == PortRange::exact(8777))
            carematix_rule = true;
    }
    CHECK(dns_rule);
    CHECK(carematix_rule);
    CHECK(to_string(RuleGroup::FromLocal) == "from-local");

    const auto flows = tr.finalize();
    bool named = false;
    for (const auto& f : flows)
        if (f.remote.kind == FlowEndpoint::Kind::Domain && f.remote.name == "tech.carematix.com") named = true;
    CHECK(named);
}

TEST_CASE("a repeated packet adds no rule but bumps counters") {
    TraceBuilder t;
    frames::Endpoints out{kOpts.device_mac, kOpts.gateway_mac, kOpts.device_ip, Ipv4{203, 0, 113, 9}};
    t.add(1, frames::tcp(out, 50000, 443, frames::kSyn));
    t.add(2, frames::tcp(out, 50000, 443, frames::kSyn));
    const auto ev = t.events();
    FlowTracker tr(kOpts.device_mac, kOpts.gateway_mac, default_local_subnets());
    const auto first = tr.process(ev[0]);
    REQUIRE(first.has_value());
    CHECK_FALSE(first->inserted.empty());
    const std::size_t rules = tr.table().rules().size();
    const auto second = tr.process(ev[1]);
    REQUIRE(second.has_value());
    CHECK(second->inserted.empty());
    CHECK(tr.table().rules().size() == rules);
    CHECK(tr.table().rules()[second->fired].packets >= 1);
}

TEST_CASE("packets of other hosts are ignored") {
    TraceBuilder t;
    const MacAddress other{{0x02, 0, 0, 0, 0, 0x99}};
    t.add(1, frames::tcp({other, kOpts.gateway_mac, Ipv4{192, 168, 1, 99}, Ipv4{8, 8, 8, 8}}, 1, 2, frames::kSyn));
    FlowTracker tr(kOpts.device_mac, kOpts.gateway_mac, default_local_subnets());
    CHECK_FALSE(tr.process(t.events()[0]).has_value());
    CHECK(tr.finalize().empty());
}

TEST_CASE("lookup agrees with a naive scan over the table") {
    synth::SynthOptions o = kOpts;
    o.epochs = 3;
    std::vector<PacketEvent> events;
    for (const auto& c : synth::catalog()) {
        auto t = synth::conformant_trace(c.profile, o);
        synth::inject_scan(t, o, 5, o.start + 100);
        auto e = t.events();
        events.insert(events.end(), e.begin(), e.end());
    }
    FlowTracker tr(o.device_mac, o.gateway_mac, default_local_subnets());
    for (const auto& ev : events) tr.process(ev);
    const auto& rules = tr.table().rules();
    std::size_t compared = 0;
    for (const auto& ev : events) {
        const SideInfo src = side_of(tr, ev.src_ip, ev.src_mac, ev.timestamp);
        const SideInfo dst = side_of(tr, ev.dst_ip, ev.dst_mac, ev.timestamp);
        std::optional<std::size_t> naive;
        for (std::size_t i = 0; i < rules.size(); ++i) {
            if (!rules[i].match.matches(ev, src, dst)) continue;
            if (!naive || rules[i].priority > rules[*naive].priority) naive = i;
        }
        const auto fast = tr.table().lookup(ev, src, dst);
        REQUIRE(naive.has_value());
        REQUIRE(fast.has_value());
        CHECK(*fast == *naive);
        ++compared;
    }
    CHECK(compared == events.size());
}

TEST_CASE("Blipcare trace gives four flow records") {
    const auto r = track(synth::blipcare_trace(kOpts));
    REQUIRE(r.flows.size() == 4);
    int local = 0, internet = 0;
    for (const auto& f : r.flows) {
        if (f.channel == Channel::Local) {
            ++local;
            CHECK(f.ip_proto == ipproto::udp);
            CHECK(f.remote.kind == FlowEndpoint::Kind::Gateway);
            CHECK(f.remote_port == PortRange::exact(53));
        } else {
            ++internet;
            CHECK(f.ip_proto == ipproto::tcp);
            CHECK(f.remote == FlowEndpoint::domain("tech.carematix.com"));
            CHECK(f.remote_port == PortRange::exact(8777));
            CHECK(f.initiated_by == Initiator::Device);
        }
    }
    CHECK(local == 2);
    CHECK(internet == 2);
}

TEST_CASE("UDP server side follows byte asymmetry") {
    TraceBuilder t;
    frames::Endpoints out{kOpts.device_mac, kOpts.gateway_mac, kOpts.device_ip, Ipv4{203, 0, 113, 9}};
    t.add(1, frames::udp(out, 40123, 123, frames::filler(72)));
    for (int i = 0; i < 7; ++i)
        t.add(1.1 + i * 0.01, frames::udp(frames::reversed(out), 123, 40123, frames::filler(1400)));
    const auto events = t.events();

    // Offline labeling: group by unordered five-tuple, the heavier sender is the server.
    std::map<std::pair<std::uint16_t, std::uint16_t>, std::uint64_t> sent;
    for (const auto& ev : events) sent[{ev.src_port, ev.dst_port}] += ev.length;
    const std::uint16_t server = sent[{123, 40123}] > sent[{40123, 123}] ? 123 : 40123;
    REQUIRE(sent[{40123, 123}] == 100);

    const auto r = track(t);
    REQUIRE(r.flows.size() == 2);
    for (const auto& f : r.flows) {
        CHECK(f.remote_port == PortRange::exact(server));
        CHECK(f.device_port.is_any());
        CHECK(f.initiated_by == Initiator::Device);
    }
}

TEST_CASE("ambiguous UDP keeps both orientations") {
    TraceBuilder t;
    frames::Endpoints out{kOpts.device_mac, kOpts.gateway_mac, kOpts.device_ip, Ipv4{203, 0, 113, 9}};
    t.add(1, frames::udp(out, 40000, 5683, frames::filler(20)));
    t.add(1.1, frames::udp(frames::reversed(out), 5683, 40000, frames::filler(20)));
    t.add(1.2, frames::udp(out, 40000, 5683, frames::filler(20)));
    t.add(1.3, frames::udp(frames::reversed(out), 5683, 40000, frames::filler(20)));
    const auto r = track(t);
    bool remote_server = false, device_server = false;
    for (const auto& f : r.flows) {
        if (f.remote_port == PortRange::exact(5683)) remote_server = true;
        if (f.device_port == PortRange::exact(40000)) device_server = true;
        CHECK(f.initiated_by == Initiator::Unknown);
    }
    CHECK(remote_server);
    CHECK(device_server);
}

TEST_CASE("empty trace gives no flows") {
    TraceBuilder t;
    CHECK(track(t).flows.empty());
}

TEST_CASE("replay is deterministic") {
    synth::SynthOptions o = kOpts;
    o.epochs = 4;
    const auto cat = synth::catalog();
    for (const auto& c : cat) {
        const auto t = synth::conformant_trace(c.profile, o);
        const auto a = track(t);
        const auto b = track(t);
        CHECK(a.flows == b.flows);
        std::ostringstream ca, cb;
        write_flow_csv(ca, a.flows);
        write_flow_csv(cb, b.flows);
        CHECK(ca.str() == cb.str());
    }
}

TEST_CASE("every device packet lands in exactly one record") {
    synth::SynthOptions o = kOpts;
    o.epochs = 4;
    for (const auto& c : synth::catalog()) {
        auto t = synth::conformant_trace(c.profile, o);
        synth::add_ssdp_chatter(t, o, o.start + 50, 49153);
        const auto r = track(t);
        std::uint64_t total = 0;
        for (const auto& f : r.flows) total += f.packets;
        CHECK(total == r.device_packets);
    }
}

TEST_CASE("DNS cache answers as of a time and honours the TTL floor") {
    DnsCache cache(60);
    cache.insert({"a.example", Ipv4{1, 2, 3, 4}, 10, 100.0});
    cache.insert({"b.example", Ipv4{1, 2, 3, 4}, 300, 500.0});
    CHECK_FALSE(cache.lookup(Ipv4{1, 2, 3, 4}, 50.0).has_value());
    CHECK(cache.lookup(Ipv4{1, 2, 3, 4}, 150.0) == "a.example");
    CHECK_FALSE(cache.lookup(Ipv4{1, 2, 3, 4}, 170.0).has_value());
    CHECK(cache.lookup(Ipv4{1, 2, 3, 4}, 600.0) == "b.example");
    CHECK(cache.addresses_of("a.example") == std::vector<Ipv4>{Ipv4{1, 2, 3, 4}});
}
