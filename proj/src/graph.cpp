#include "dagi/graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "dagi/errors.hpp"

namespace dagi {

std::size_t RoiGraph::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < node_names.size(); ++i)
        if (node_names[i] == name) return i;
    throw SchemaError("graph: unknown node name '" + std::string(name) + "'");
}

RoiGraph make_graph(std::vector<std::string> node_names, const EdgeList& edges) {
    const std::size_t v = node_names.size();
    RoiGraph g;
    g.node_names = std::move(node_names);
    g.adjacency = Matrix(v, v);
    EdgeList canonical;
    canonical.reserve(edges.size());
    for (auto [a, b] : edges) {
        if (a == b)
            throw ContractError("graph: self-loop on node " + std::to_string(a));
        if (a >= v || b >= v)
            throw DimensionError("graph: edge endpoint " + std::to_string(std::max(a, b)) +
                                 " outside " + std::to_string(v) + " nodes");
        if (a > b) std::swap(a, b);
        canonical.emplace_back(a, b);
    }
    std::sort(canonical.begin(), canonical.end());
    canonical.erase(std::unique(canonical.begin(), canonical.end()), canonical.end());
    g.edge_list = std::move(canonical);
    g.neighbors.lists.resize(v);
    for (auto [a, b] : g.edge_list) {
        g.adjacency(a, b) = 1.0;
        g.adjacency(b, a) = 1.0;
        g.neighbors.lists[a].push_back(b);
        g.neighbors.lists[b].push_back(a);
    }
    for (auto& lst : g.neighbors.lists) std::sort(lst.begin(), lst.end());
    return g;
}

RoiGraph load_graph(const std::filesystem::path& edge_file,
                    std::vector<std::string> node_names) {
    std::ifstream in(edge_file);
    if (!in)
        throw IoError("graph: cannot open edge file " + edge_file.string());

    std::map<std::string, std::uint32_t, std::less<>> index;
    for (std::size_t i = 0; i < node_names.size(); ++i)
        index.emplace(node_names[i], static_cast<std::uint32_t>(i));

    EdgeList edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError("graph: line " + std::to_string(line_no) +
                              ": expected <name><TAB><name>");
        const std::string a = line.substr(0, tab);
        const std::string b = line.substr(tab + 1);
        auto ai = index.find(a);
        auto bi = index.find(b);
        if (ai == index.end())
            throw FormatError("graph: line " + std::to_string(line_no) +
                              ": unknown node name '" + a + "'");
        if (bi == index.end())
            throw FormatError("graph: line " + std::to_string(line_no) +
                              ": unknown node name '" + b + "'");
        if (ai->second == bi->second)
            throw FormatError("graph: line " + std::to_string(line_no) +
                              ": self-loop on '" + a + "'");
        edges.emplace_back(ai->second, bi->second);
    }
    return make_graph(std::move(node_names), edges);
}

void save_graph(const RoiGraph& g, const std::filesystem::path& edge_file) {
    std::ofstream out(edge_file, std::ios::trunc);
    if (!out)
        throw IoError("graph: cannot write edge file " + edge_file.string());
    for (auto [a, b] : g.edge_list)
        out << g.node_names[a] << '\t' << g.node_names[b] << '\n';
    out.flush();
    if (!out)
        throw IoError("graph: write failed for " + edge_file.string());
}

GraphReport validate_graph(const RoiGraph& g) {
    const std::size_t v = g.node_count();
    GraphReport report;
    report.symmetric = true;
    report.zero_diagonal = true;
    for (std::size_t i = 0; i < v; ++i) {
        if (g.adjacency(i, i) != 0.0) report.zero_diagonal = false;
        for (std::size_t j = i + 1; j < v; ++j)
            if (g.adjacency(i, j) != g.adjacency(j, i)) report.symmetric = false;
    }
    report.degrees.resize(v);
    for (std::size_t i = 0; i < v; ++i) report.degrees[i] = g.neighbors.lists[i].size();

    std::vector<char> seen(v, 0);
    for (std::size_t start = 0; start < v; ++start) {
        if (seen[start]) continue;
        ++report.component_count;
        std::vector<std::size_t> stack{start};
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::uint32_t j : g.neighbors.lists[i])
                if (!seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
        }
    }
    return report;
}

std::string GraphReport::to_string() const {
    std::ostringstream os;
    os << "symmetric=" << (symmetric ? "yes" : "no")
       << " zero_diagonal=" << (zero_diagonal ? "yes" : "no")
       << " nodes=" << degrees.size() << " components=" << component_count << " degrees=[";
    for (std::size_t i = 0; i < degrees.size(); ++i)
        os << (i ? "," : "") << degrees[i];
    os << "]";
    return os.str();
}

const std::vector<std::string>& default_node_names() {
    static const std::vector<std::string> names{
        "bankssts", "caudalanteriorcingulate", "caudalmiddlefrontal", "cuneus",
        "entorhinal", "frontalpole", "fusiform", "inferiorparietal",
        "inferiortemporal", "insula", "isthmuscingulate", "lateraloccipital",
        "lateralorbitofrontal", "lingual", "medialorbitofrontal", "middletemporal",
        "paracentral", "parahippocampal", "parsopercularis", "parsorbitalis",
        "parstriangularis", "pericalcarine", "postcentral", "posteriorcingulate",
        "precentral", "precuneus", "rostralanteriorcingulate", "rostralmiddlefrontal",
        "superiorfrontal", "superiorparietal", "superiortemporal", "supramarginal",
        "temporalpole", "transversetemporal"};
    return names;
}

RoiGraph load_default_graph() {
    return load_graph(std::filesystem::path(DAGI_DATA_DIR) / "dk_adjacency.tsv",
                      default_node_names());
}

} // namespace dagi
