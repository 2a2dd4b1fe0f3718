#include "mudscope/ssdp.hpp"

#include <cctype>
#include <charconv>
#include <string>

namespace mudscope {

namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Port from a URL such as http://192.168.1.5:49153/desc.xml
std::optional<std::uint16_t> url_port(std::string_view url) {
    auto scheme = url.find("://");
    if (scheme == std::string_view::npos) return std::nullopt;
    auto host = url.substr(scheme + 3);
    host = host.substr(0, host.find('/'));
    auto colon = host.rfind(':');
    if (colon == std::string_view::npos) return starts_with_ci(url, "http:") ? std::optional<std::uint16_t>(80) : std::nullopt;
    auto digits = host.substr(colon + 1);
    unsigned v = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || p != digits.data() + digits.size() || v == 0 || v > 65535) return std::nullopt;
    return static_cast<std::uint16_t>(v);
}

} // namespace

std::string_view to_string(SsdpMethod m) {
    switch (m) {
    case SsdpMethod::Notify: return "NOTIFY";
    case SsdpMethod::MSearch: return "M-SEARCH";
    case SsdpMethod::Response: return "RESPONSE";
    }
    return "?";
}

std::optional<SsdpEvent> extract_ssdp(const PacketEvent& event, const std::set<std::uint16_t>& learned_ports) {
    if (event.ip_proto != ipproto::udp) return std::nullopt;
    bool port_ok = event.dst_port == 1900 || event.src_port == 1900 || learned_ports.count(event.src_port) ||
                   learned_ports.count(event.dst_port);
    if (!port_ok || event.payload.empty()) return std::nullopt;

    std::string_view text(reinterpret_cast<const char*>(event.payload.data()), event.payload.size());
    auto eol = text.find('\n');
    auto start = trim(text.substr(0, eol));
    SsdpEvent ev;
    ev.device_mac = event.src_mac;
    if (starts_with_ci(start, "NOTIFY * HTTP/1.")) ev.method = SsdpMethod::Notify;
    else if (starts_with_ci(start, "M-SEARCH * HTTP/1.")) ev.method = SsdpMethod::MSearch;
    else if (starts_with_ci(start, "HTTP/1.1 200") || starts_with_ci(start, "HTTP/1.0 200")) ev.method = SsdpMethod::Response;
    else return std::nullopt;

    if (ev.method != SsdpMethod::MSearch) {
        while (eol != std::string_view::npos) {
            text.remove_prefix(eol + 1);
            eol = text.find('\n');
            auto line = trim(text.substr(0, eol));
            if (line.empty()) break;
            if (starts_with_ci(line, "LOCATION:")) {
                ev.advertised_port = url_port(trim(line.substr(9)));
                break;
            }
        }
    }
    return ev;
}

std::optional<SsdpEvent> SsdpTracker::observe(const PacketEvent& event) {
    auto ev = extract_ssdp(event, ports_);
    if (ev && ev->advertised_port) ports_.insert(*ev->advertised_port);
    return ev;
}

} // namespace mudscope
