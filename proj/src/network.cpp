#include "edp/network.hpp"

#include <algorithm>
#include <string>

#include "edp/errors.hpp"

namespace edp {

Network::Network(std::vector<NodeSpec> nodes, std::span<const IdEdge> edges)
    : nodes_(std::move(nodes)) {
    std::stable_sort(nodes_.begin(), nodes_.end(),
                     [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        validate_node(nodes_[i]);
        if (i > 0 && nodes_[i].id == nodes_[i - 1].id) {
            throw ValidationError("duplicate node id " + std::to_string(nodes_[i].id));
        }
    }
    std::vector<Graph::Edge> idx;
    idx.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        const auto ia = find(a);
        const auto ib = find(b);
        if (!ia || !ib) {
            throw ValidationError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                  ") names an unknown node");
        }
        idx.emplace_back(*ia, *ib);
    }
    try {
        graph_ = Graph(nodes_.size(), idx);
    } catch (const StructuralError& e) {
        // Re-raise with node ids rather than vertex indices.
        for (const auto& [a, b] : edges) {
            if (a == b) {
                throw StructuralError("self-loop at node " + std::to_string(a));
            }
        }
        std::vector<IdEdge> sorted;
        for (const auto& [a, b] : edges) {
            sorted.emplace_back(std::min(a, b), std::max(a, b));
        }
        std::sort(sorted.begin(), sorted.end());
        const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
        if (dup != sorted.end()) {
            throw StructuralError("duplicate edge (" + std::to_string(dup->first) + ", " +
                                  std::to_string(dup->second) + ")");
        }
        throw;
    }
}

std::optional<std::size_t> Network::find(NodeId id) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                     [](const NodeSpec& n, NodeId v) { return n.id < v; });
    if (it == nodes_.end() || it->id != id) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - nodes_.begin());
}

std::vector<IdEdge> Network::id_edges() const {
    std::vector<IdEdge> out;
    out.reserve(graph_.edges().size());
    for (const auto& [u, v] : graph_.edges()) {
        out.emplace_back(nodes_[u].id, nodes_[v].id);
    }
    return out;
}

std::vector<NodeId> Network::ids() const {
    std::vector<NodeId> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) {
        out.push_back(n.id);
    }
    return out;
}

void Network::require_connected() const {
    if (nodes_.empty()) {
        throw StructuralError("network has no nodes");
    }
    if (!is_connected(graph_)) {
        throw StructuralError("communication graph is disconnected");
    }
}

}  // namespace edp
