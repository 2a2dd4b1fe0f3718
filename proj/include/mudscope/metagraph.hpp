#pragma once

#include "mudscope/endpoint_class.hpp"
#include "mudscope/intervals.hpp"
#include "mudscope/mud.hpp"

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mudscope {

/// Sorted set of element ids.
class ElementSet {
public:
    ElementSet() = default;
    ElementSet(std::initializer_list<int> ids);

    void insert(int id);
    bool contains(int id) const;
    bool includes(const ElementSet& o) const;
    bool intersects(const ElementSet& o) const;
    ElementSet unite(const ElementSet& o) const;
    ElementSet minus(const ElementSet& o) const;

    bool empty() const { return ids_.empty(); }
    std::size_t size() const { return ids_.size(); }
    auto begin() const { return ids_.begin(); }
    auto end() const { return ids_.end(); }

    auto operator<=>(const ElementSet&) const = default;

private:
    std::vector<int> ids_;
};

struct MetaEdge {
    ElementSet invertex;
    ElementSet outvertex;
    std::string label;
};

class MetagraphError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Generating set split into variables and propositions, plus edges between element sets.
/// Propositions attached to an edge live in its invertex as conditions.
class ConditionalMetagraph {
public:
    /// Returns the existing id when the name is already a variable.
    int add_variable(const std::string& name);
    int add_proposition(const std::string& name);
    /// Throws MetagraphError when the edge breaks the conditional-metagraph rules.
    std::size_t add_edge(ElementSet invertex, ElementSet outvertex, std::string label = {});

    std::optional<int> find(const std::string& name) const;
    const std::string& name(int id) const { return names_[static_cast<std::size_t>(id)]; }
    bool is_proposition(int id) const { return is_prop_[static_cast<std::size_t>(id)]; }
    std::size_t element_count() const { return names_.size(); }
    ElementSet variables() const;
    ElementSet propositions() const;
    const std::vector<MetaEdge>& edges() const { return edges_; }

    /// Empty when every structural rule holds.
    std::vector<std::string> check_invariants() const;

private:
    int add_element(const std::string& name, bool proposition);

    std::vector<std::string> names_;
    std::vector<bool> is_prop_;
    std::vector<MetaEdge> edges_;
};

struct Metapath {
    ElementSet source;
    ElementSet target;
    std::vector<std::size_t> edges; // sorted edge indices
};

/// Every edge fires from `source` plus outputs of other edges in the set, the outputs
/// cover `target`, and every edge feeds the target (directly or through other edges).
bool is_metapath(const ConditionalMetagraph& g, const ElementSet& source, const ElementSet& target,
                 const std::vector<std::size_t>& edges);

struct MetapathSearch {
    std::vector<Metapath> paths;
    bool truncated = false;
};

/// Exhaustive when at most `exhaustive_limit` edges can take part; otherwise stops after `max_paths`.
MetapathSearch metapaths(const ConditionalMetagraph& g, const ElementSet& source, const ElementSet& target,
                         std::size_t exhaustive_limit = 20, std::size_t max_paths = 10000);

bool is_edge_dominant(const ConditionalMetagraph& g, const Metapath& m);
bool is_input_dominant(const ConditionalMetagraph& g, const Metapath& m);
bool is_dominant(const ConditionalMetagraph& g, const Metapath& m);

/// Variables: device, local-gateway, local-network and one per remote endpoint.
/// One edge per ACE whose invertex carries the ACE's protocol/port/action propositions.
ConditionalMetagraph from_mud(const MudProfile& profile, std::string_view gateway_namespace = kGatewayNamespace);

/// Meaning of an edge in MUD shape (device on exactly one side), recovered from its propositions.
struct EdgeSemantics {
    EndpointClass endpoint;
    Direction direction = Direction::FromDevice;
    Region region{3};
    bool accept = true;
};
std::optional<EdgeSemantics> edge_semantics(const ConditionalMetagraph& g, std::size_t edge,
                                            std::string_view gateway_namespace = kGatewayNamespace);

struct RedundancyFinding {
    enum class Category : std::uint8_t { Redundant, Ambiguous };
    Category category = Category::Redundant;
    std::size_t edge = 0;
    std::string ace_name;
    /// Edges that together admit everything the reported edge admits.
    Metapath witness;
    bool witness_dominant = false;
};

std::vector<RedundancyFinding> find_redundancies(const ConditionalMetagraph& g,
                                                 std::string_view gateway_namespace = kGatewayNamespace);

struct RedundancySummary {
    std::size_t rule_count = 0;
    std::size_t redundant_count = 0;
    double cpu_time_ms = 0.0;
};

RedundancySummary summarize(const ConditionalMetagraph& g, const std::vector<RedundancyFinding>& findings,
                            double cpu_time_ms);

std::string redundancy_json(const ConditionalMetagraph& g, const std::vector<RedundancyFinding>& findings);

} // namespace mudscope
