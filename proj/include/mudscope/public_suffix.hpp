#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mudscope {

/// Public-suffix matching (plain, "*." wildcard and "!" exception rules) over a rule list.
class PublicSuffixList {
public:
    /// The bundled snapshot.
    static const PublicSuffixList& builtin();
    /// One rule per line; blank lines and "//" comments are skipped.
    static PublicSuffixList parse(std::string_view text);

    /// Longest public suffix of `name`; the implicit "*" rule applies when nothing matches.
    std::string public_suffix(std::string_view name) const;
    /// Public suffix plus one label, or nullopt when `name` is itself a public suffix.
    std::optional<std::string> registrable_domain(std::string_view name) const;

    std::size_t size() const { return rules_.size(); }

private:
    std::vector<std::string> rules_; // sorted
};

/// Registrable domain under the bundled list, falling back to `name` itself.
std::string compact_domain(std::string_view name);

} // namespace mudscope
