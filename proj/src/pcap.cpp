#include "mudscope/pcap.hpp"

#include <cmath>
#include <sstream>

namespace mudscope {

namespace {

constexpr std::uint32_t kMagicMicros = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNanos = 0xa1b23c4d;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::size_t kEthHeader = 14;
constexpr std::uint32_t kMaxRecord = 256 * 1024;

std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00) | ((v << 8) & 0xff0000) | (v << 24);
}

std::uint32_t read_le32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::uint16_t be16(std::span<const std::uint8_t> s, std::size_t off) {
    return static_cast<std::uint16_t>((s[off] << 8) | s[off + 1]);
}

std::uint32_t be32(std::span<const std::uint8_t> s, std::size_t off) {
    return (std::uint32_t(s[off]) << 24) | (std::uint32_t(s[off + 1]) << 16) | (std::uint32_t(s[off + 2]) << 8) |
           s[off + 3];
}

void put_le32(std::ostream& out, std::uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char(v >> 24)};
    out.write(b, 4);
}

void put_le16(std::ostream& out, std::uint16_t v) {
    char b[2] = {char(v & 0xff), char(v >> 8)};
    out.write(b, 2);
}

} // namespace

std::string link_type_name(std::uint32_t link_type) {
    switch (link_type) {
    case 0: return "LINKTYPE_NULL";
    case 1: return "LINKTYPE_ETHERNET";
    case 101: return "LINKTYPE_RAW";
    case 105: return "LINKTYPE_IEEE802_11";
    case 113: return "LINKTYPE_LINUX_SLL";
    case 127: return "LINKTYPE_IEEE802_11_RADIOTAP";
    case 276: return "LINKTYPE_LINUX_SLL2";
    default: return "LINKTYPE_" + std::to_string(link_type);
    }
}

PcapReader::PcapReader(std::unique_ptr<std::istream> in, ReaderOptions opts)
    : in_(std::move(in)), opts_(std::move(opts)) {
    std::uint8_t hdr[24];
    if (!in_->read(reinterpret_cast<char*>(hdr), sizeof hdr)) {
        // A zero-length file is treated as an empty trace; anything shorter than a header is not.
        if (in_->gcount() == 0) {
            eof_ = true;
            link_type_ = kLinkEthernet;
            return;
        }
        throw PcapError("truncated pcap global header");
    }
    std::uint32_t magic = read_le32(hdr);
    if (magic == kMagicMicros || magic == kMagicNanos) {
        swapped_ = false;
    } else if (bswap32(magic) == kMagicMicros || bswap32(magic) == kMagicNanos) {
        swapped_ = true;
        magic = bswap32(magic);
    } else {
        throw PcapError("not a classic pcap file (bad magic)");
    }
    nanos_ = magic == kMagicNanos;
    link_type_ = read_le32(hdr + 20);
    if (swapped_) link_type_ = bswap32(link_type_);
    if (link_type_ != kLinkEthernet)
        throw PcapError("unsupported link type " + link_type_name(link_type_));
}

PcapReader PcapReader::open(const std::filesystem::path& path, ReaderOptions opts) {
    auto f = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*f) throw PcapError("cannot open " + path.string());
    return PcapReader(std::move(f), std::move(opts));
}

PcapReader PcapReader::from_bytes(std::span<const std::uint8_t> bytes, ReaderOptions opts) {
    auto s = std::make_unique<std::istringstream>(std::string(bytes.begin(), bytes.end()), std::ios::binary);
    return PcapReader(std::move(s), std::move(opts));
}

std::optional<PacketEvent> PcapReader::next() {
    while (!eof_) {
        std::uint8_t rec[16];
        if (!in_->read(reinterpret_cast<char*>(rec), sizeof rec)) {
            if (in_->gcount() > 0) {
                // A partial record header at end of file is one malformed frame.
                ++stats_.frames;
                ++stats_.malformed;
            }
            eof_ = true;
            break;
        }
        ++stats_.frames;
        auto field = [&](int i) {
            std::uint32_t v = read_le32(rec + 4 * i);
            return swapped_ ? bswap32(v) : v;
        };
        std::uint32_t sec = field(0), frac = field(1), incl = field(2);
        if (incl > kMaxRecord) {
            ++stats_.malformed;
            eof_ = true;
            break;
        }
        buf_.resize(incl);
        if (!in_->read(reinterpret_cast<char*>(buf_.data()), incl)) {
            ++stats_.malformed;
            eof_ = true;
            break;
        }
        double ts = double(sec) + double(frac) / (nanos_ ? 1e9 : 1e6);
        if (auto ev = decode(ts, buf_)) {
            ++stats_.events;
            return ev;
        }
    }
    return std::nullopt;
}

std::optional<PacketEvent> PcapReader::decode(double ts, std::span<const std::uint8_t> frame) {
    if (frame.size() < kEthHeader) {
        ++stats_.malformed;
        return std::nullopt;
    }
    PacketEvent ev;
    ev.timestamp = ts;
    std::copy_n(frame.begin(), 6, ev.dst_mac.bytes.begin());
    std::copy_n(frame.begin() + 6, 6, ev.src_mac.bytes.begin());
    std::size_t off = 12;
    std::uint16_t ethertype = be16(frame, off);
    off += 2;
    while (ethertype == 0x8100 || ethertype == 0x88a8) {
        if (frame.size() < off + 4) {
            ++stats_.malformed;
            return std::nullopt;
        }
        ethertype = be16(frame, off + 2);
        off += 4;
    }
    if (ethertype == 0x86dd) {
        ++stats_.ipv6;
        return std::nullopt;
    }
    if (ethertype != 0x0800) {
        ++stats_.non_ip;
        return std::nullopt;
    }
    auto ip = frame.subspan(off);
    if (ip.size() < 20 || (ip[0] >> 4) != 4) {
        ++stats_.malformed;
        return std::nullopt;
    }
    std::size_t ihl = std::size_t(ip[0] & 0x0f) * 4;
    std::uint16_t total = be16(ip, 2);
    if (ihl < 20 || total < ihl || ip.size() < ihl) {
        ++stats_.malformed;
        return std::nullopt;
    }
    // Snaplen may cut the frame short of the IP total length; decode what is present.
    ip = ip.first(std::min<std::size_t>(ip.size(), total));
    std::uint16_t frag = be16(ip, 6);
    if ((frag & 0x1fff) != 0) {
        ++stats_.fragments;
        return std::nullopt;
    }
    ev.ip_proto = ip[9];
    ev.src_ip = Ipv4(be32(ip, 12));
    ev.dst_ip = Ipv4(be32(ip, 16));
    ev.length = total;
    auto l4 = ip.subspan(ihl);
    std::span<const std::uint8_t> payload;
    switch (ev.ip_proto) {
    case ipproto::tcp: {
        if (l4.size() < 20) {
            ++stats_.malformed;
            return std::nullopt;
        }
        ev.src_port = be16(l4, 0);
        ev.dst_port = be16(l4, 2);
        std::size_t doff = std::size_t(l4[12] >> 4) * 4;
        ev.tcp_syn = (l4[13] & 0x02) != 0;
        ev.tcp_ack = (l4[13] & 0x10) != 0;
        if (doff < 20 || doff > l4.size()) {
            ++stats_.malformed;
            return std::nullopt;
        }
        payload = l4.subspan(doff);
        break;
    }
    case ipproto::udp: {
        if (l4.size() < 8) {
            ++stats_.malformed;
            return std::nullopt;
        }
        ev.src_port = be16(l4, 0);
        ev.dst_port = be16(l4, 2);
        payload = l4.subspan(8);
        if (payload.size() >= 20 && (payload[0] & 0xc0) == 0 && be32(payload, 4) == 0x2112a442)
            ev.stun_cookie = true;
        break;
    }
    case ipproto::icmp: {
        if (l4.size() < 4) {
            ++stats_.malformed;
            return std::nullopt;
        }
        ev.icmp_type = l4[0];
        ev.icmp_code = l4[1];
        break;
    }
    default: ++stats_.unsupported_proto; return std::nullopt;
    }
    bool keep = ev.ip_proto != ipproto::icmp &&
                (opts_.retain_payload_ports.count(ev.src_port) || opts_.retain_payload_ports.count(ev.dst_port));
    if (!keep && opts_.retain_ssdp_like && ev.ip_proto == ipproto::udp) {
        // SSDP replies come from ports advertised at run time.
        std::string_view head(reinterpret_cast<const char*>(payload.data()), std::min<std::size_t>(payload.size(), 9));
        keep = head.starts_with("HTTP/1.") || head.starts_with("NOTIFY * ") || head.starts_with("M-SEARCH ");
    }
    if (keep) ev.payload.assign(payload.begin(), payload.end());
    return ev;
}

Trace read_trace(const std::filesystem::path& path, ReaderOptions opts) {
    auto reader = PcapReader::open(path, std::move(opts));
    Trace t;
    while (auto ev = reader.next()) t.events.push_back(std::move(*ev));
    t.stats = reader.stats();
    return t;
}

PcapWriter::PcapWriter(const std::filesystem::path& path) : file_(path, std::ios::binary), out_(&file_) {
    if (!file_) throw PcapError("cannot create " + path.string());
    write_header();
}

PcapWriter::PcapWriter(std::ostream& out) : out_(&out) { write_header(); }

void PcapWriter::write_header() {
    put_le32(*out_, kMagicMicros);
    put_le16(*out_, 2);
    put_le16(*out_, 4);
    put_le32(*out_, 0);
    put_le32(*out_, 0);
    put_le32(*out_, 65535);
    put_le32(*out_, kLinkEthernet);
}

void PcapWriter::write(double timestamp, std::span<const std::uint8_t> frame) {
    double whole = std::floor(timestamp);
    auto sec = static_cast<std::uint32_t>(whole);
    auto usec = static_cast<std::uint32_t>(std::llround((timestamp - whole) * 1e6));
    if (usec >= 1000000) {
        ++sec;
        usec -= 1000000;
    }
    put_le32(*out_, sec);
    put_le32(*out_, usec);
    put_le32(*out_, static_cast<std::uint32_t>(frame.size()));
    put_le32(*out_, static_cast<std::uint32_t>(frame.size()));
    out_->write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    out_->flush();
}

} // namespace mudscope
