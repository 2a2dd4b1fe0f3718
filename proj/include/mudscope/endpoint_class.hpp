#pragma once

#include "mudscope/mud.hpp"

#include <optional>
#include <string>

namespace mudscope {

/// Endpoint classes ordered by containment:
///
///   any
///   +-- local-networks
///   |   +-- controller(urn), my-controller, same-manufacturer, private literal
///   +-- internet
///       +-- domain(name), public literal
struct EndpointClass {
    enum class Kind : std::uint8_t { Any, LocalNetworks, Internet, Controller, MyController, SameManufacturer, Literal, Domain };
    Kind kind = Kind::Any;
    std::string value; // controller URN or domain
    Ipv4 ip;

    static EndpointClass any() { return {}; }
    static EndpointClass local_networks() { return {Kind::LocalNetworks, {}, {}}; }
    static EndpointClass internet() { return {Kind::Internet, {}, {}}; }

    static EndpointClass of(const AceEndpoint& e);
    /// Parses the to_string() form: "any", "local-networks", "internet",
    /// "controller:<urn>", "my-controller", "same-manufacturer", "domain:<name>", or an IPv4 address.
    static std::optional<EndpointClass> parse(std::string_view text);

    std::optional<EndpointClass> parent() const;
    /// True when `other` is this class or lies below it.
    bool covers(const EndpointClass& other) const;
    int depth() const;
    std::string to_string() const;

    auto operator<=>(const EndpointClass&) const = default;
};

} // namespace mudscope
