#include <doctest.h>

#include "mudscope/dns.hpp"
#include "mudscope/frames.hpp"
#include "mudscope/pcap.hpp"
#include "mudscope/ssdp.hpp"
#include "mudscope/synth.hpp"

#include <arpa/nameser.h>
#include <resolv.h>

#include <random>

using namespace mudscope;

namespace {

const MacAddress kDev{{0x00, 0x16, 0x3e, 0x00, 0x00, 0x10}};
const MacAddress kGw{{0x00, 0x16, 0x3e, 0x00, 0x00, 0x01}};
const Ipv4 kDevIp{192, 168, 1, 10};
const Ipv4 kGwIp{192, 168, 1, 1};

std::vector<PacketEvent> decode(const TraceBuilder& t) { return t.events(); }

PacketEvent dns_reply_event(const std::vector<std::uint8_t>& payload) {
    TraceBuilder t;
    t.add(1.0, frames::udp({kGw, kDev, kGwIp, kDevIp}, 53, 40000, payload));
    auto ev = decode(t);
    REQUIRE(ev.size() == 1);
    return ev[0];
}

} // namespace

TEST_CASE("empty pcap yields nothing") {
    TraceBuilder t;
    const auto bytes = t.pcap_bytes();
    auto reader = PcapReader::from_bytes(bytes);
    CHECK_FALSE(reader.next().has_value());
    CHECK(reader.stats().frames == 0);
    CHECK(reader.stats().skipped() == 0);
    CHECK(reader.link_type() == 1);
}

TEST_CASE("a single SYN decodes with the syn flag") {
    TraceBuilder t;
    t.add(10.5, frames::tcp({kDev, kGw, kDevIp, Ipv4{203, 0, 113, 7}}, 50000, 8777, frames::kSyn));
    const auto ev = decode(t);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].tcp_syn);
    CHECK_FALSE(ev[0].tcp_ack);
    CHECK(ev[0].ip_proto == ipproto::tcp);
    CHECK(ev[0].src_port == 50000);
    CHECK(ev[0].dst_port == 8777);
    CHECK(ev[0].timestamp == doctest::Approx(10.5));
    CHECK_FALSE(ev[0].icmp_type.has_value());
}

TEST_CASE("ARP is counted as skipped") {
    TraceBuilder t;
    t.add(1, frames::arp(kDev));
    const auto bytes = t.pcap_bytes();
    auto reader = PcapReader::from_bytes(bytes);
    CHECK_FALSE(reader.next().has_value());
    CHECK(reader.stats().frames == 1);
    CHECK(reader.stats().non_ip == 1);
    CHECK(reader.stats().skipped() == 1);
}

TEST_CASE("ICMP carries type and code but no ports") {
    TraceBuilder t;
    t.add(1, frames::icmp({kDev, kGw, kDevIp, kGwIp}, 8, 0));
    const auto ev = decode(t);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].ip_proto == ipproto::icmp);
    CHECK(ev[0].icmp_type == 8);
    CHECK(ev[0].icmp_code == 0);
    CHECK(ev[0].src_port == 0);
    CHECK(ev[0].dst_port == 0);
}

TEST_CASE("decoding is total on garbage frames") {
    std::mt19937 rng(5);
    for (int round = 0; round < 20; ++round) {
        TraceBuilder t;
        const int n = 1 + round * 7;
        for (int i = 0; i < n; ++i) {
            std::vector<std::uint8_t> frame(std::uniform_int_distribution<std::size_t>(0, 120)(rng));
            for (auto& b : frame) b = static_cast<std::uint8_t>(rng());
            // Some frames get a plausible Ethernet/IPv4 prefix so the deeper decoders are reached.
            if (frame.size() > 34 && i % 2 == 0) {
                frame[12] = 0x08;
                frame[13] = 0x00;
                frame[14] = 0x45;
            }
            t.add(i, std::move(frame));
        }
        const auto bytes = t.pcap_bytes();
        auto reader = PcapReader::from_bytes(bytes);
        std::size_t events = 0;
        while (reader.next()) ++events;
        CHECK(reader.stats().frames == static_cast<std::size_t>(n));
        CHECK(events + reader.stats().skipped() == static_cast<std::size_t>(n));
        CHECK(events == reader.stats().events);
    }
}

TEST_CASE("truncated or bogus files are reported, not crashed on") {
    std::vector<std::uint8_t> junk(10, 0xab);
    CHECK_THROWS_AS(PcapReader::from_bytes(junk), PcapError);

    TraceBuilder t;
    t.add(1, frames::tcp({kDev, kGw, kDevIp, kGwIp}, 1, 2, frames::kSyn));
    auto bytes = t.pcap_bytes();
    bytes.resize(bytes.size() - 5);
    try {
        auto reader = PcapReader::from_bytes(bytes);
        while (reader.next()) {
        }
    } catch (const PcapError&) {
    }
    CHECK_THROWS_AS(read_trace("/nonexistent/file.pcap"), PcapError);
}

TEST_CASE("DNS A answer is extracted") {
    const auto payload = encode_dns_response(7, "tech.carematix.com",
                                             {DnsRecord{"tech.carematix.com", 1, 300, Ipv4{203, 0, 113, 7}, {}}});
    const auto answers = extract_dns_answers(dns_reply_event(payload));
    REQUIRE(answers.size() == 1);
    CHECK(answers[0].query_name == "tech.carematix.com");
    CHECK(answers[0].answer_ip == Ipv4{203, 0, 113, 7});
    CHECK(answers[0].ttl == 300);
}

TEST_CASE("DNS queries carry no answers") {
    TraceBuilder t;
    t.add(1, frames::udp({kDev, kGw, kDevIp, kGwIp}, 40000, 53, encode_dns_query(9, "tech.carematix.com")));
    const auto ev = decode(t);
    REQUIRE(ev.size() == 1);
    CHECK(extract_dns_answers(ev[0]).empty());
}

TEST_CASE("CNAME chain resolves to the queried name, checked against libresolv") {
    const auto payload =
        encode_dns_response(11, "x.example",
                            {DnsRecord{"x.example", 5, 120, {}, "y.example"},
                             DnsRecord{"y.example", 1, 120, Ipv4{198, 51, 100, 2}, {}}});

    // Reference decode.
    ns_msg msg;
    REQUIRE(ns_initparse(payload.data(), static_cast<int>(payload.size()), &msg) == 0);
    ns_rr q;
    REQUIRE(ns_parserr(&msg, ns_s_qd, 0, &q) == 0);
    const std::string qname = ns_rr_name(q);
    std::vector<std::pair<std::string, Ipv4>> expected;
    for (int i = 0; i < ns_msg_count(msg, ns_s_an); ++i) {
        ns_rr rr;
        REQUIRE(ns_parserr(&msg, ns_s_an, i, &rr) == 0);
        if (ns_rr_type(rr) != ns_t_a) continue;
        const unsigned char* d = ns_rr_rdata(rr);
        expected.emplace_back(qname, Ipv4{d[0], d[1], d[2], d[3]});
    }
    REQUIRE(expected.size() == 1);

    const auto answers = extract_dns_answers(dns_reply_event(payload));
    REQUIRE(answers.size() == expected.size());
    CHECK(answers[0].query_name == expected[0].first);
    CHECK(answers[0].answer_ip == expected[0].second);
}

TEST_CASE("DNS encode then extract is the identity on A-only replies") {
    std::mt19937 rng(3);
    for (int i = 0; i < 50; ++i) {
        const std::string name = "host" + std::to_string(i) + ".zone" + std::to_string(rng() % 7) + ".example.org";
        const Ipv4 ip{static_cast<std::uint32_t>(rng())};
        const auto answers = extract_dns_answers(
            dns_reply_event(encode_dns_response(static_cast<std::uint16_t>(i), name, {DnsRecord{name, 1, 60, ip, {}}})));
        REQUIRE(answers.size() == 1);
        CHECK(answers[0].query_name == name);
        CHECK(answers[0].answer_ip == ip);
    }
}

TEST_CASE("SSDP NOTIFY, M-SEARCH and learned-port reply") {
    synth::SynthOptions so;
    TraceBuilder t;
    synth::add_ssdp_chatter(t, so, 100, 49153);
    const auto ev = decode(t);
    REQUIRE(ev.size() == 3);

    const auto notify = extract_ssdp(ev[0]);
    REQUIRE(notify.has_value());
    CHECK(notify->method == SsdpMethod::Notify);
    CHECK(notify->advertised_port == 49153);

    const auto search = extract_ssdp(ev[1]);
    REQUIRE(search.has_value());
    CHECK(search->method == SsdpMethod::MSearch);
    CHECK_FALSE(search->advertised_port.has_value());

    CHECK_FALSE(extract_ssdp(ev[2]).has_value());
    const auto reply = extract_ssdp(ev[2], {49153});
    REQUIRE(reply.has_value());
    CHECK(reply->method == SsdpMethod::Response);

    SsdpTracker tracker;
    for (const auto& e : ev) tracker.observe(e);
    CHECK(tracker.learned_ports() == std::set<std::uint16_t>{49153});
    CHECK(tracker.is_ssdp_port(49153));
}

TEST_CASE("TCP is never SSDP") {
    TraceBuilder t;
    t.add(1, frames::tcp({kDev, kGw, kDevIp, kGwIp}, 1900, 1900, frames::kSyn));
    const auto ev = decode(t);
    REQUIRE(ev.size() == 1);
    CHECK_FALSE(extract_ssdp(ev[0]).has_value());
}
