#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace dagi {

/// Per-node adjacency lists. Symmetric: j in lists[i] iff i in lists[j].
struct NeighborIndex {
    std::vector<std::vector<std::uint32_t>> lists;
    std::size_t node_count() const { return lists.size(); }
};

/// Undirected edges stored once as (lo, hi) with lo < hi.
using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

} // namespace dagi
