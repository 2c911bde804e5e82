#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace ghznet {

/// Union-find with union by size and path halving.
class DisjointSet {
public:
    using index_type = std::uint32_t;

    DisjointSet() = default;
    explicit DisjointSet(std::size_t n) { reset(n); }

    void reset(std::size_t n)
    {
        parent_.resize(n);
        size_.assign(n, 1);
        std::iota(parent_.begin(), parent_.end(), index_type{0});
    }

    std::size_t size() const { return parent_.size(); }

    index_type find(index_type x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Root lookup without path compression.
    index_type find(index_type x) const
    {
        while (parent_[x] != x)
            x = parent_[x];
        return x;
    }

    /// Returns the surviving root.
    index_type unite(index_type a, index_type b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return a;
        if (size_[a] < size_[b])
            std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return a;
    }

    bool same(index_type a, index_type b) { return find(a) == find(b); }

    index_type set_size(index_type x) { return size_[find(x)]; }

private:
    std::vector<index_type> parent_;
    std::vector<index_type> size_;
};

} // namespace ghznet
