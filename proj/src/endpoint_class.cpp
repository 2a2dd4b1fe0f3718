#include "mudscope/endpoint_class.hpp"

namespace mudscope {

EndpointClass EndpointClass::of(const AceEndpoint& e) {
    switch (e.kind) {
    case AceEndpoint::Kind::Wildcard: return any();
    case AceEndpoint::Kind::Domain: return {Kind::Domain, e.value, {}};
    case AceEndpoint::Kind::Controller: return {Kind::Controller, e.value, {}};
    case AceEndpoint::Kind::MyController: return {Kind::MyController, {}, {}};
    case AceEndpoint::Kind::LocalNetworks: return local_networks();
    case AceEndpoint::Kind::SameManufacturer: return {Kind::SameManufacturer, {}, {}};
    case AceEndpoint::Kind::Literal: return {Kind::Literal, {}, e.ip};
    }
    return any();
}

std::optional<EndpointClass> EndpointClass::parse(std::string_view t) {
    if (t == "any" || t == "*") return any();
    if (t == "local-networks") return local_networks();
    if (t == "internet") return internet();
    if (t == "my-controller") return EndpointClass{Kind::MyController, {}, {}};
    if (t == "same-manufacturer") return EndpointClass{Kind::SameManufacturer, {}, {}};
    if (t.starts_with("controller:")) return EndpointClass{Kind::Controller, std::string(t.substr(11)), {}};
    if (t.starts_with("domain:")) return EndpointClass{Kind::Domain, to_lower(t.substr(7)), {}};
    if (auto ip = Ipv4::parse(t)) return EndpointClass{Kind::Literal, {}, *ip};
    return std::nullopt;
}

std::optional<EndpointClass> EndpointClass::parent() const {
    switch (kind) {
    case Kind::Any: return std::nullopt;
    case Kind::LocalNetworks:
    case Kind::Internet: return any();
    case Kind::Controller:
    case Kind::MyController:
    case Kind::SameManufacturer: return local_networks();
    case Kind::Literal: return ip.has_local_significance() ? local_networks() : internet();
    case Kind::Domain: return internet();
    }
    return std::nullopt;
}

bool EndpointClass::covers(const EndpointClass& other) const {
    for (std::optional<EndpointClass> c = other; c; c = c->parent())
        if (*c == *this) return true;
    return false;
}

int EndpointClass::depth() const {
    int d = 0;
    for (auto c = parent(); c; c = c->parent()) ++d;
    return d;
}

std::string EndpointClass::to_string() const {
    switch (kind) {
    case Kind::Any: return "any";
    case Kind::LocalNetworks: return "local-networks";
    case Kind::Internet: return "internet";
    case Kind::Controller: return "controller:" + value;
    case Kind::MyController: return "my-controller";
    case Kind::SameManufacturer: return "same-manufacturer";
    case Kind::Literal: return ip.to_string();
    case Kind::Domain: return "domain:" + value;
    }
    return "?";
}

} // namespace mudscope
