#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dagi/adjacency.hpp"
#include "dagi/matrix.hpp"

namespace dagi {

/// Fixed region-of-interest graph shared by every subject: named nodes, a
/// binary symmetric adjacency with zero diagonal, and derived edge/neighbor
/// views. Immutable after construction.
struct RoiGraph {
    std::vector<std::string> node_names;
    Matrix adjacency;     // v x v, entries in {0,1}
    EdgeList edge_list;   // (i,j) with i<j, sorted ascending
    NeighborIndex neighbors;

    std::size_t node_count() const { return node_names.size(); }
    /// Index of a node name; throws SchemaError when absent.
    std::size_t index_of(std::string_view name) const;
};

struct GraphReport {
    bool symmetric = false;
    bool zero_diagonal = false;
    std::vector<std::size_t> degrees;
    std::size_t component_count = 0;
    std::string to_string() const;
};

/// Builds a graph from an index edge list; duplicates collapse, self-loops
/// and out-of-range endpoints are rejected.
RoiGraph make_graph(std::vector<std::string> node_names, const EdgeList& edges);

/// Reads a `name<TAB>name` edge file (UTF-8, `#` comments, blank lines
/// skipped). Unknown names, self-loops, and malformed lines raise
/// FormatError carrying the line number.
RoiGraph load_graph(const std::filesystem::path& edge_file,
                    std::vector<std::string> node_names);

/// Writes the canonical edge list; load_graph(save_graph(g)) reproduces g
/// exactly.
void save_graph(const RoiGraph& g, const std::filesystem::path& edge_file);

GraphReport validate_graph(const RoiGraph& g);

/// The 34 bilateral cortical region names used by the default pipeline.
const std::vector<std::string>& default_node_names();

/// Loads the adjacency file shipped with the project for the default nodes.
RoiGraph load_default_graph();

} // namespace dagi
