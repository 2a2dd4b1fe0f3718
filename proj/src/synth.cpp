#include "mudscope/synth.hpp"

#include "mudscope/dns.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace mudscope::synth {

namespace {

struct Conversation {
    AceEndpoint endpoint;
    int proto = ipproto::tcp;
    Direction opener = Direction::FromDevice; // who sends the first packet
    PortRange device_port;
    PortRange remote_port;
    bool answered = false;
    std::uint8_t icmp_type = 8;
    std::uint8_t icmp_code = 0;
};

bool same_flow(const MudAce& from, const MudAce& to) {
    return from.endpoint == to.endpoint && from.ip_proto == to.ip_proto && from.device_port() == to.device_port() &&
           from.remote_port() == to.remote_port() && from.icmp_type == to.icmp_type && from.icmp_code == to.icmp_code;
}

std::vector<Conversation> plan(const MudProfile& profile) {
    std::vector<Conversation> out;
    std::vector<bool> used(profile.to_device.size(), false);
    auto opener_for = [](const MudAce& a) {
        if (!a.remote_port().is_exact() && a.device_port().is_exact()) return Direction::ToDevice;
        return Direction::FromDevice;
    };
    for (const auto& f : profile.from_device) {
        if (f.action != AceAction::Accept || !f.ip_proto) continue;
        Conversation c{f.endpoint, *f.ip_proto, Direction::FromDevice, f.device_port(), f.remote_port()};
        if (c.proto == ipproto::icmp) {
            c.icmp_type = f.icmp_type.value_or(8);
            c.icmp_code = f.icmp_code.value_or(0);
            out.push_back(c);
            continue;
        }
        if (c.proto != ipproto::tcp && c.proto != ipproto::udp) continue;
        c.opener = opener_for(f);
        for (std::size_t i = 0; i < profile.to_device.size(); ++i) {
            if (used[i] || profile.to_device[i].action != AceAction::Accept) continue;
            if (!same_flow(f, profile.to_device[i])) continue;
            used[i] = true;
            c.answered = true;
            break;
        }
        // Without a reply ACE only the device may speak.
        if (!c.answered) c.opener = Direction::FromDevice;
        out.push_back(c);
    }
    for (std::size_t i = 0; i < profile.to_device.size(); ++i) {
        const MudAce& t = profile.to_device[i];
        if (used[i] || t.action != AceAction::Accept || !t.ip_proto) continue;
        Conversation c{t.endpoint, *t.ip_proto, Direction::ToDevice, t.device_port(), t.remote_port()};
        if (c.proto == ipproto::icmp) {
            c.icmp_type = t.icmp_type.value_or(0);
            c.icmp_code = t.icmp_code.value_or(0);
        } else if (c.proto != ipproto::tcp && c.proto != ipproto::udp) {
            continue;
        }
        out.push_back(c);
    }
    return out;
}

class Emitter {
public:
    Emitter(TraceBuilder& trace, const SynthOptions& opts)
        : trace_(trace), opts_(opts), rng_(opts.seed) {}

    std::mt19937& rng() { return rng_; }

    std::uint16_t pick(PortRange r, bool client) {
        if (r.is_exact()) return r.lo;
        PortRange pool = r;
        if (client && r.is_any()) pool = {49152, 65535};
        else if (r.is_any()) pool = {1024, 49151};
        return static_cast<std::uint16_t>(std::uniform_int_distribution<int>(pool.lo, pool.hi)(rng_));
    }

    Ipv4 resolve(const std::string& name, int epoch) {
        auto [it, fresh] = addresses_.try_emplace({name, epoch}, Ipv4{});
        if (fresh) {
            const std::uint32_t n = next_public_++;
            it->second = Ipv4{52, static_cast<std::uint8_t>(16 + (n >> 16)), static_cast<std::uint8_t>(n >> 8),
                              static_cast<std::uint8_t>(1 + (n & 0x7f))};
        }
        return it->second;
    }

    Ipv4 random_public() {
        const std::uint32_t n = next_wild_++;
        return Ipv4{34, static_cast<std::uint8_t>(64 + (n >> 16)), static_cast<std::uint8_t>(n >> 8),
                    static_cast<std::uint8_t>(1 + (n & 0x7f))};
    }

    frames::Endpoints to_gateway() const {
        return {opts_.device_mac, opts_.gateway_mac, opts_.device_ip, opts_.gateway_ip};
    }

    void dns_lookup(double t, const std::string& name, Ipv4 answer) {
        const std::uint16_t port = pick(PortRange::any(), true);
        const std::uint16_t id = static_cast<std::uint16_t>(rng_());
        auto q = encode_dns_query(id, name);
        trace_.add(t, frames::udp(to_gateway(), port, 53, q));
        auto r = encode_dns_response(id, name, {DnsRecord{name, 1, 300, answer, {}}});
        trace_.add(t + 0.02, frames::udp(frames::reversed(to_gateway()), 53, port, r));
    }

    void run(const Conversation& c, double t, int epoch) {
        frames::Endpoints e{opts_.device_mac, opts_.gateway_mac, opts_.device_ip, {}};
        switch (c.endpoint.kind) {
        case AceEndpoint::Kind::Controller:
            if (c.endpoint.value == opts_.gateway_namespace) {
                e.dst_ip = opts_.gateway_ip;
                break;
            }
            [[fallthrough]];
        case AceEndpoint::Kind::LocalNetworks:
        case AceEndpoint::Kind::MyController:
        case AceEndpoint::Kind::SameManufacturer:
            e.dst_ip = Ipv4{192, 168, 1, 60};
            e.dst_mac = MacAddress{{0x02, 0x00, 0x00, 0x00, 0x01, 0x3c}};
            break;
        case AceEndpoint::Kind::Domain:
            e.dst_ip = resolve(c.endpoint.value, epoch);
            dns_lookup(t, c.endpoint.value, e.dst_ip);
            t += 0.1;
            break;
        case AceEndpoint::Kind::Literal: e.dst_ip = c.endpoint.ip; break;
        case AceEndpoint::Kind::Wildcard: e.dst_ip = random_public(); break;
        }
        const frames::Endpoints back = frames::reversed(e);

        if (c.proto == ipproto::icmp) {
            trace_.add(t, frames::icmp(c.opener == Direction::FromDevice ? e : back, c.icmp_type, c.icmp_code));
            return;
        }
        const bool device_opens = c.opener == Direction::FromDevice;
        const std::uint16_t dport = pick(c.device_port, device_opens);
        const std::uint16_t rport = pick(c.remote_port, !device_opens);
        const frames::Endpoints& client = device_opens ? e : back;
        const frames::Endpoints& server = device_opens ? back : e;
        const std::uint16_t cport = device_opens ? dport : rport;
        const std::uint16_t sport = device_opens ? rport : dport;
        double at = t;
        auto step = [&] { return at += 0.01; };

        if (c.proto == ipproto::udp) {
            if (c.answered) {
                trace_.add(step(), frames::udp(client, cport, sport, frames::filler(40)));
                trace_.add(step(), frames::udp(server, sport, cport, frames::filler(300)));
                trace_.add(step(), frames::udp(server, sport, cport, frames::filler(300)));
            } else {
                for (int i = 0; i < 3; ++i) trace_.add(step(), frames::udp(client, cport, sport, frames::filler(40)));
            }
            return;
        }
        using namespace frames;
        trace_.add(step(), tcp(client, cport, sport, kSyn));
        if (!c.answered) return;
        trace_.add(step(), tcp(server, sport, cport, kSyn | kAck));
        trace_.add(step(), tcp(client, cport, sport, kAck));
        trace_.add(step(), tcp(client, cport, sport, kPsh | kAck, filler(100)));
        trace_.add(step(), tcp(server, sport, cport, kPsh | kAck, filler(400)));
        trace_.add(step(), tcp(server, sport, cport, kPsh | kAck, filler(400)));
        trace_.add(step(), tcp(client, cport, sport, kFin | kAck));
        trace_.add(step(), tcp(server, sport, cport, kFin | kAck));
    }

private:
    TraceBuilder& trace_;
    const SynthOptions& opts_;
    std::mt19937 rng_;
    std::map<std::pair<std::string, int>, Ipv4> addresses_;
    std::uint32_t next_public_ = 0;
    std::uint32_t next_wild_ = 0;
};

} // namespace

std::size_t conversation_count(const MudProfile& profile) { return plan(profile).size(); }

void add_conformant_traffic(TraceBuilder& trace, const MudProfile& profile, const SynthOptions& opts) {
    const auto convs = plan(profile);
    Emitter em(trace, opts);
    const int warmup = std::max(1, std::min(opts.warmup_epochs, opts.epochs));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> offset(5.0, std::max(6.0, opts.epoch_seconds - 60.0));
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        const double base = opts.start + epoch * opts.epoch_seconds;
        std::vector<std::pair<double, std::size_t>> slots;
        for (std::size_t i = 0; i < convs.size(); ++i) {
            int first = static_cast<int>(i % static_cast<std::size_t>(warmup));
            if (i < opts.first_epochs.size() && opts.first_epochs[i] >= 0) first = opts.first_epochs[i];
            const double roll = coin(em.rng());
            const double at = offset(em.rng());
            if (epoch < first) continue;
            if (epoch == first || roll < opts.activity) slots.emplace_back(base + at, i);
        }
        std::sort(slots.begin(), slots.end());
        for (const auto& [at, i] : slots) em.run(convs[i], at, epoch);
    }
}

TraceBuilder conformant_trace(const MudProfile& profile, const SynthOptions& opts) {
    TraceBuilder t;
    add_conformant_traffic(t, profile, opts);
    return t;
}

namespace {

class ProfileBuilder {
public:
    explicit ProfileBuilder(std::string name) : name_(std::move(name)) {
        p_.mud_url = "https://mud.example.com/" + name_ + ".json";
        p_.systeminfo = name_;
        p_.last_update = "2019-01-01T00:00:00+00:00";
    }

    ProfileBuilder& pair(AceEndpoint ep, int proto, PortRange device, PortRange remote) {
        MudAce f;
        f.direction = Direction::FromDevice;
        f.endpoint = ep;
        f.ip_proto = proto;
        f.set_ports(device, remote);
        MudAce t = f;
        t.direction = Direction::ToDevice;
        t.set_ports(device, remote);
        add(std::move(f));
        add(std::move(t));
        return *this;
    }
    ProfileBuilder& client(AceEndpoint ep, int proto, std::uint16_t remote_port) {
        return pair(std::move(ep), proto, PortRange::any(), PortRange::exact(remote_port));
    }
    ProfileBuilder& server(AceEndpoint ep, int proto, std::uint16_t device_port) {
        return pair(std::move(ep), proto, PortRange::exact(device_port), PortRange::any());
    }
    ProfileBuilder& dns() { return client(AceEndpoint::controller(std::string(kGatewayNamespace)), ipproto::udp, 53); }
    ProfileBuilder& ping(AceEndpoint ep) {
        MudAce f;
        f.direction = Direction::FromDevice;
        f.endpoint = ep;
        f.ip_proto = ipproto::icmp;
        f.icmp_type = 8;
        f.icmp_code = 0;
        MudAce t = f;
        t.direction = Direction::ToDevice;
        t.icmp_type = 0;
        add(std::move(f));
        add(std::move(t));
        return *this;
    }

    MudProfile build() const { return p_; }

private:
    void add(MudAce a) {
        auto& list = a.direction == Direction::FromDevice ? p_.from_device : p_.to_device;
        a.name = std::string(a.direction == Direction::FromDevice ? "from" : "to") + "-ipv4-" + name_ + "-" +
                 std::to_string(list.size());
        list.push_back(std::move(a));
    }

    std::string name_;
    MudProfile p_;
};

AceEndpoint dom(const char* d) { return AceEndpoint::domain(d); }

} // namespace

MudProfile blipcare_profile() {
    return ProfileBuilder("blipcare-bp").dns().client(dom("tech.carematix.com"), ipproto::tcp, 8777).build();
}

TraceBuilder blipcare_trace(const SynthOptions& opts) {
    SynthOptions o = opts;
    o.epochs = 1;
    o.warmup_epochs = 1;
    return conformant_trace(blipcare_profile(), o);
}

std::vector<Ipv4> inject_scan(TraceBuilder& trace, const SynthOptions& opts, int count, double at,
                              std::uint16_t port) {
    std::vector<Ipv4> out;
    for (int i = 0; i < count; ++i) {
        Ipv4 src{45, 33, static_cast<std::uint8_t>(i / 200), static_cast<std::uint8_t>(1 + i % 200)};
        frames::Endpoints e{opts.gateway_mac, opts.device_mac, src, opts.device_ip};
        trace.add(at + 0.05 * i, frames::tcp(e, static_cast<std::uint16_t>(40000 + i), port, frames::kSyn));
        out.push_back(src);
    }
    return out;
}

void add_ssdp_chatter(TraceBuilder& trace, const SynthOptions& opts, double at, std::uint16_t advertised_port) {
    const Ipv4 group{239, 255, 255, 250};
    const MacAddress group_mac{{0x01, 0x00, 0x5e, 0x7f, 0xff, 0xfa}};
    const Ipv4 phone{192, 168, 1, 61};
    const MacAddress phone_mac{{0x02, 0x00, 0x00, 0x00, 0x01, 0x3d}};
    const std::string location =
        "LOCATION: http://" + opts.device_ip.to_string() + ":" + std::to_string(advertised_port) + "/setup.xml\r\n";
    auto bytes = [](const std::string& s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };

    const std::string notify = "NOTIFY * HTTP/1.1\r\nHOST: 239.255.255.250:1900\r\nNT: upnp:rootdevice\r\n"
                               "NTS: ssdp:alive\r\n" + location + "\r\n";
    trace.add(at, frames::udp({opts.device_mac, group_mac, opts.device_ip, group}, 1900, 1900, bytes(notify)));
    const std::string search = "M-SEARCH * HTTP/1.1\r\nHOST: 239.255.255.250:1900\r\nMAN: \"ssdp:discover\"\r\n"
                               "MX: 1\r\nST: ssdp:all\r\n\r\n";
    trace.add(at + 1, frames::udp({phone_mac, group_mac, phone, group}, 50000, 1900, bytes(search)));
    const std::string reply = "HTTP/1.1 200 OK\r\nST: upnp:rootdevice\r\n" + location + "\r\n";
    trace.add(at + 1.2,
              frames::udp({opts.device_mac, phone_mac, opts.device_ip, phone}, advertised_port, 50000, bytes(reply)));
}

MudProfile shift_subdomains(const MudProfile& profile, const std::string& label) {
    MudProfile out = profile;
    for (auto* list : {&out.from_device, &out.to_device})
        for (auto& ace : *list)
            if (ace.endpoint.kind == AceEndpoint::Kind::Domain) ace.endpoint.value = label + "-" + ace.endpoint.value;
    return out;
}

std::vector<CatalogEntry> catalog() {
    const AceEndpoint gateway = AceEndpoint::controller(std::string(kGatewayNamespace));
    const AceEndpoint local = AceEndpoint::local_networks();
    constexpr int tcp = ipproto::tcp, udp = ipproto::udp;
    std::vector<CatalogEntry> out;
    auto add = [&](const ProfileBuilder& b) {
        MudProfile p = b.build();
        out.push_back({p.systeminfo, std::move(p)});
    };
    add(ProfileBuilder("blipcare-bp").dns().client(dom("tech.carematix.com"), tcp, 8777));
    add(ProfileBuilder("tplink-plug")
            .dns()
            .client(dom("devs.tplinkcloud.com"), tcp, 50443)
            .client(dom("s1b.time.edu.cn"), udp, 123)
            .ping(gateway)
            .server(local, tcp, 9999));
    add(ProfileBuilder("wemo-switch")
            .dns()
            .client(dom("api.xbcs.net"), tcp, 8443)
            .client(AceEndpoint::literal(Ipv4{64, 22, 80, 9}), udp, 123)
            .server(local, tcp, 49153)
            .ping(gateway));
    add(ProfileBuilder("ihome-plug")
            .dns()
            .client(dom("api.ihomeaudio.net"), tcp, 443)
            .client(dom("time.ihomeaudio.net"), udp, 123)
            .server(local, tcp, 80));
    add(ProfileBuilder("hp-printer")
            .dns()
            .client(dom("xmpp.hpeprint.com"), tcp, 5222)
            .client(dom("chat.hpeprint.com"), tcp, 443)
            .client(dom("h10141.www1.hp.com"), tcp, 80)
            .server(local, tcp, 631)
            .server(local, tcp, 9100));
    add(ProfileBuilder("hue-bulb")
            .dns()
            .client(dom("bridge.meethue.com"), tcp, 443)
            .client(dom("diag.meethue.com"), tcp, 80)
            .server(local, tcp, 8080));
    add(ProfileBuilder("nest-cam")
            .dns()
            .client(dom("nexus.dropcam.com"), tcp, 443)
            .client(dom("oculus.dropcam.com"), tcp, 443)
            .pair(AceEndpoint::any(), udp, PortRange::any(), PortRange::any()));
    add(ProfileBuilder("echo-speaker")
            .dns()
            .client(dom("avs-alexa-na.amazon.com"), tcp, 443)
            .client(dom("device-metrics-us.amazon.com"), tcp, 443)
            .client(dom("ntp-g7g.amazon.com"), udp, 123)
            .ping(gateway));
    add(ProfileBuilder("withings-scale")
            .dns()
            .client(dom("scalews.withings.net"), tcp, 80)
            .client(dom("wbsapi.withings.net"), tcp, 443));
    add(ProfileBuilder("awair-air")
            .dns()
            .client(dom("messaging.awair.is"), tcp, 8883)
            .client(dom("time.awair.is"), udp, 123)
            .ping(gateway));
    return out;
}

} // namespace mudscope::synth
