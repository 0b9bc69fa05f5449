#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace edp {

/// Undirected, unweighted communication graph on nodes 0..n-1.
/// Immutable after construction.
class Graph {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    Graph() = default;
    /// Throws StructuralError on self-loops, duplicates or out-of-range endpoints.
    Graph(std::size_t n, std::span<const Edge> edges);

    [[nodiscard]] std::size_t size() const noexcept { return adjacency_.size(); }
    /// Normalized (lo, hi) pairs in ascending order.
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] std::span<const std::size_t> neighbors(std::size_t i) const {
        return adjacency_[i];
    }
    [[nodiscard]] std::size_t degree(std::size_t i) const { return adjacency_[i].size(); }
    [[nodiscard]] std::size_t max_degree() const noexcept;
    [[nodiscard]] bool has_edge(std::size_t i, std::size_t j) const;

private:
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

struct LaplacianSummary {
    double sigma2 = 0.0;      // algebraic connectivity
    double lambda_max = 0.0;  // spectral radius, used by the Euler stability guard
    std::vector<std::size_t> degrees;
};

[[nodiscard]] Eigen::MatrixXi laplacian(const Graph& g);

[[nodiscard]] bool is_connected(const Graph& g);

/// Smallest nonzero Laplacian eigenvalue. Throws StructuralError when the
/// graph is disconnected.
[[nodiscard]] double algebraic_connectivity(const Graph& g);

/// sigma2, spectral radius and degrees from one dense eigensolve.
/// Throws StructuralError when the graph is disconnected.
[[nodiscard]] LaplacianSummary summarize(const Graph& g);

/// lam' L lam, evaluated edge-wise.
[[nodiscard]] double laplacian_quadratic_form(const Graph& g, std::span<const double> lam);

}  // namespace edp
