#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mudscope {

struct Interval {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;

    bool contains(std::uint32_t x) const { return lo <= x && x <= hi; }
    bool operator==(const Interval&) const = default;
    auto operator<=>(const Interval&) const = default;
};

using Box = std::vector<Interval>;

/// A set of points in a fixed number of integer dimensions, stored as nested
/// maximal slabs. Two regions holding the same points have identical structure,
/// so operator== is set equality.
class Region {
public:
    explicit Region(int dims = 1) : dims_(dims) {}
    static Region from_box(const Box& box);

    int dims() const { return dims_; }
    bool empty() const { return slabs_.empty(); }
    bool contains(const std::vector<std::uint32_t>& point) const;

    Region unite(const Region& o) const;
    Region intersect(const Region& o) const;
    Region subtract(const Region& o) const;
    bool subset_of(const Region& o) const { return subtract(o).empty(); }
    bool overlaps(const Region& o) const { return !intersect(o).empty(); }

    /// Disjoint boxes covering the region, in lexicographic order.
    std::vector<Box> boxes() const;
    std::string to_string() const;

    bool operator==(const Region& o) const { return dims_ == o.dims_ && slabs_ == o.slabs_; }

private:
    struct Slab;
    template <class Op>
    static Region combine(const Region* a, const Region* b, int dims, Op op);
    void collect(Box& prefix, std::vector<Box>& out) const;

    int dims_;
    std::vector<Slab> slabs_;
};

struct Region::Slab {
    Interval span;
    Region sub{0};
    bool operator==(const Slab& o) const { return span == o.span && sub == o.sub; }
};

} // namespace mudscope
