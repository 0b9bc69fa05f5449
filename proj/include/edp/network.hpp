#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "edp/graph.hpp"
#include "edp/model.hpp"

namespace edp {

using IdEdge = std::pair<NodeId, NodeId>;

/// Node set plus communication graph. Nodes are kept in ascending id order and
/// graph vertex i is nodes()[i].
class Network {
public:
    Network() = default;
    /// Validates every node, rejects duplicate ids and edges that name unknown
    /// ids (ValidationError) and malformed edge sets (StructuralError).
    /// Connectivity is not required here; see require_connected().
    Network(std::vector<NodeSpec> nodes, std::span<const IdEdge> edges);

    [[nodiscard]] std::span<const NodeSpec> nodes() const noexcept { return nodes_; }
    [[nodiscard]] const NodeSpec& node(std::size_t index) const { return nodes_.at(index); }
    [[nodiscard]] const Graph& graph() const noexcept { return graph_; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

    [[nodiscard]] std::optional<std::size_t> find(NodeId id) const;
    [[nodiscard]] std::vector<IdEdge> id_edges() const;
    [[nodiscard]] std::vector<NodeId> ids() const;

    /// Throws StructuralError when the graph is disconnected.
    void require_connected() const;

private:
    std::vector<NodeSpec> nodes_;
    Graph graph_;
};

}  // namespace edp
