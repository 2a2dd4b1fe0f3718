#include "mudscope/dns.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>

namespace mudscope {

namespace {

class DnsCursor {
public:
    explicit DnsCursor(std::span<const std::uint8_t> msg) : msg_(msg) {}

    bool ok() const { return ok_; }
    std::size_t pos() const { return pos_; }

    std::uint16_t u16() {
        if (!need(2)) return 0;
        std::uint16_t v = static_cast<std::uint16_t>((msg_[pos_] << 8) | msg_[pos_ + 1]);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }

    void skip(std::size_t n) {
        if (need(n)) pos_ += n;
    }

    void seek(std::size_t p) {
        if (p > msg_.size()) ok_ = false;
        else pos_ = p;
    }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        if (!need(n)) return {};
        auto s = msg_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    // Reads a possibly compressed name at the cursor and advances past it.
    std::string name() {
        std::string out;
        std::size_t p = pos_;
        bool jumped = false;
        int hops = 0;
        while (true) {
            if (p >= msg_.size()) return fail();
            std::uint8_t len = msg_[p];
            if ((len & 0xc0) == 0xc0) {
                if (p + 1 >= msg_.size() || ++hops > 32) return fail();
                std::size_t target = (std::size_t(len & 0x3f) << 8) | msg_[p + 1];
                if (!jumped) pos_ = p + 2;
                jumped = true;
                p = target;
                continue;
            }
            if (len & 0xc0) return fail();
            if (len == 0) {
                if (!jumped) pos_ = p + 1;
                break;
            }
            if (p + 1 + len > msg_.size()) return fail();
            if (!out.empty()) out += '.';
            out.append(reinterpret_cast<const char*>(&msg_[p + 1]), len);
            if (out.size() > 255) return fail();
            p += 1 + len;
        }
        return to_lower(out);
    }

private:
    bool need(std::size_t n) {
        if (!ok_ || pos_ + n > msg_.size()) {
            ok_ = false;
            return false;
        }
        return true;
    }

    std::string fail() {
        ok_ = false;
        return {};
    }

    std::span<const std::uint8_t> msg_;
    std::size_t pos_ = 0;
    bool ok_ = true;
};

std::optional<std::vector<DnsAnswer>> decode_message(std::span<const std::uint8_t> msg, double ts) {
    DnsCursor c(msg);
    c.u16(); // id
    std::uint16_t flags = c.u16();
    std::uint16_t qd = c.u16(), an = c.u16();
    c.u16();
    c.u16();
    if (!c.ok()) return std::nullopt;
    if ((flags & 0x8000) == 0) return std::vector<DnsAnswer>{};
    if ((flags & 0x000f) != 0) return std::vector<DnsAnswer>{};

    std::string qname;
    for (int i = 0; i < qd; ++i) {
        auto n = c.name();
        c.skip(4);
        if (!c.ok()) return std::nullopt;
        if (i == 0) qname = n;
    }

    std::map<std::string, std::string> cname;
    std::vector<std::pair<std::string, DnsAnswer>> a_records;
    for (int i = 0; i < an; ++i) {
        auto owner = c.name();
        std::uint16_t type = c.u16();
        std::uint16_t klass = c.u16();
        std::uint32_t ttl = c.u32();
        std::uint16_t rdlen = c.u16();
        if (!c.ok()) return std::nullopt;
        std::size_t rdata_start = c.pos();
        if (type == 1 && klass == 1 && rdlen == 4) {
            auto rd = c.bytes(4);
            if (!c.ok()) return std::nullopt;
            DnsAnswer a;
            a.answer_ip = Ipv4(rd[0], rd[1], rd[2], rd[3]);
            a.ttl = ttl;
            a.observed_at = ts;
            a_records.emplace_back(owner, a);
        } else if (type == 5) {
            auto target = c.name();
            if (!c.ok() || c.pos() > rdata_start + rdlen) return std::nullopt;
            cname[owner] = target;
            c.seek(rdata_start + rdlen);
        } else {
            c.skip(rdlen);
        }
        if (!c.ok()) return std::nullopt;
    }

    // Every name reachable from the question via CNAMEs is an alias of it.
    std::set<std::string> chain;
    for (std::string n = qname; !n.empty() && chain.insert(n).second;) {
        auto it = cname.find(n);
        n = it == cname.end() ? std::string() : it->second;
    }
    std::vector<DnsAnswer> out;
    for (auto& [owner, a] : a_records) {
        a.query_name = chain.count(owner) ? qname : owner;
        if (!a.query_name.empty()) out.push_back(a);
    }
    return out;
}

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    put16(b, static_cast<std::uint16_t>(v >> 16));
    put16(b, static_cast<std::uint16_t>(v & 0xffff));
}

void put_name(std::vector<std::uint8_t>& b, const std::string& name) {
    std::size_t start = 0;
    while (start < name.size()) {
        auto dot = name.find('.', start);
        if (dot == std::string::npos) dot = name.size();
        b.push_back(static_cast<std::uint8_t>(dot - start));
        b.insert(b.end(), name.begin() + static_cast<std::ptrdiff_t>(start),
                 name.begin() + static_cast<std::ptrdiff_t>(dot));
        start = dot + 1;
    }
    b.push_back(0);
}

std::vector<std::uint8_t> header(std::uint16_t id, std::uint16_t flags, std::uint16_t qd, std::uint16_t an) {
    std::vector<std::uint8_t> b;
    put16(b, id);
    put16(b, flags);
    put16(b, qd);
    put16(b, an);
    put16(b, 0);
    put16(b, 0);
    return b;
}

} // namespace

std::vector<DnsAnswer> extract_dns_answers(const PacketEvent& event, DnsStats& stats) {
    if (event.ip_proto != ipproto::udp && event.ip_proto != ipproto::tcp) return {};
    if (event.src_port != 53 && event.dst_port != 53) return {};
    std::span<const std::uint8_t> msg(event.payload);
    if (event.ip_proto == ipproto::tcp) {
        if (msg.empty()) return {}; // bare handshake/ack segment
        if (msg.size() < 2) {
            ++stats.tcp_fragmented;
            return {};
        }
        std::size_t len = (std::size_t(msg[0]) << 8) | msg[1];
        if (len != msg.size() - 2) {
            ++stats.tcp_fragmented;
            return {};
        }
        msg = msg.subspan(2);
    }
    auto decoded = decode_message(msg, event.timestamp);
    if (!decoded) {
        ++stats.truncated;
        return {};
    }
    return std::move(*decoded);
}

std::vector<DnsAnswer> extract_dns_answers(const PacketEvent& event) {
    DnsStats ignored;
    return extract_dns_answers(event, ignored);
}

std::vector<std::uint8_t> encode_dns_query(std::uint16_t id, const std::string& qname) {
    auto b = header(id, 0x0100, 1, 0);
    put_name(b, qname);
    put16(b, 1);
    put16(b, 1);
    return b;
}

std::vector<std::uint8_t> encode_dns_response(std::uint16_t id, const std::string& qname,
                                              const std::vector<DnsRecord>& answers) {
    auto b = header(id, 0x8180, 1, static_cast<std::uint16_t>(answers.size()));
    put_name(b, qname);
    put16(b, 1);
    put16(b, 1);
    for (const auto& rr : answers) {
        put_name(b, rr.name);
        put16(b, rr.type);
        put16(b, 1);
        put32(b, rr.ttl);
        if (rr.type == 5) {
            std::vector<std::uint8_t> rd;
            put_name(rd, rr.target);
            put16(b, static_cast<std::uint16_t>(rd.size()));
            b.insert(b.end(), rd.begin(), rd.end());
        } else {
            put16(b, 4);
            put32(b, rr.address.value);
        }
    }
    return b;
}

} // namespace mudscope
