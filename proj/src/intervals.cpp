#include "mudscope/intervals.hpp"

#include <algorithm>

namespace mudscope {

Region Region::from_box(const Box& box) {
    Region r(static_cast<int>(box.size()));
    if (box.empty()) return r;
    for (const auto& iv : box)
        if (iv.lo > iv.hi) return r;
    Box rest(box.begin() + 1, box.end());
    r.slabs_.push_back({box.front(), from_box(rest)});
    return r;
}

bool Region::contains(const std::vector<std::uint32_t>& point) const {
    const Region* r = this;
    for (std::uint32_t x : point) {
        auto it = std::find_if(r->slabs_.begin(), r->slabs_.end(), [&](const Slab& s) { return s.span.contains(x); });
        if (it == r->slabs_.end()) return false;
        r = &it->sub;
    }
    return true;
}

namespace {

template <class Slabs>
const Region* slab_at(const Slabs& slabs, std::uint32_t x) {
    auto it = std::upper_bound(slabs.begin(), slabs.end(), x,
                               [](std::uint32_t v, const auto& s) { return v < s.span.lo; });
    if (it == slabs.begin()) return nullptr;
    --it;
    return it->span.contains(x) ? &it->sub : nullptr;
}

} // namespace

// `a`/`b` may be null (empty). At zero remaining dimensions a non-null region is
// the single full point, so the boolean op decides membership directly.
template <class Op>
Region Region::combine(const Region* a, const Region* b, int dims, Op op) {
    Region out(dims);
    if (dims == 0) return out;
    std::vector<std::uint64_t> cuts;
    for (const Region* r : {a, b}) {
        if (!r) continue;
        for (const auto& s : r->slabs_) {
            cuts.push_back(s.span.lo);
            cuts.push_back(std::uint64_t(s.span.hi) + 1);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto x = static_cast<std::uint32_t>(cuts[i]);
        const Region* sa = a ? slab_at(a->slabs_, x) : nullptr;
        const Region* sb = b ? slab_at(b->slabs_, x) : nullptr;
        if (!sa && !sb) continue;
        Region sub(dims - 1);
        bool present;
        if (dims == 1) {
            present = op(sa != nullptr, sb != nullptr);
        } else {
            sub = combine(sa, sb, dims - 1, op);
            present = !sub.empty();
        }
        if (!present) continue;
        Interval span{x, static_cast<std::uint32_t>(cuts[i + 1] - 1)};
        if (!out.slabs_.empty() && std::uint64_t(out.slabs_.back().span.hi) + 1 == x && out.slabs_.back().sub == sub)
            out.slabs_.back().span.hi = span.hi;
        else
            out.slabs_.push_back({span, std::move(sub)});
    }
    return out;
}

Region Region::unite(const Region& o) const {
    return combine(this, &o, dims_, [](bool x, bool y) { return x || y; });
}

Region Region::intersect(const Region& o) const {
    return combine(this, &o, dims_, [](bool x, bool y) { return x && y; });
}

Region Region::subtract(const Region& o) const {
    return combine(this, &o, dims_, [](bool x, bool y) { return x && !y; });
}

void Region::collect(Box& prefix, std::vector<Box>& out) const {
    for (const auto& s : slabs_) {
        prefix.push_back(s.span);
        if (dims_ == 1) out.push_back(prefix);
        else s.sub.collect(prefix, out);
        prefix.pop_back();
    }
}

std::vector<Box> Region::boxes() const {
    std::vector<Box> out;
    Box prefix;
    collect(prefix, out);
    return out;
}

std::string Region::to_string() const {
    std::string s;
    for (const auto& b : boxes()) {
        if (!s.empty()) s += " | ";
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (i) s += " x ";
            s += "[" + std::to_string(b[i].lo) + "," + std::to_string(b[i].hi) + "]";
        }
    }
    return s.empty() ? "{}" : s;
}

} // namespace mudscope
