#include "edp/graph.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include <Eigen/Eigenvalues>

#include "edp/errors.hpp"

namespace edp {

Graph::Graph(std::size_t n, std::span<const Edge> edges) : adjacency_(n) {
    edges_.reserve(edges.size());
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n) {
            throw StructuralError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                  ") has an endpoint outside 0.." + std::to_string(n));
        }
        if (u == v) {
            throw StructuralError("self-loop at node " + std::to_string(u));
        }
        edges_.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(edges_.begin(), edges_.end());
    const auto dup = std::adjacent_find(edges_.begin(), edges_.end());
    if (dup != edges_.end()) {
        throw StructuralError("duplicate edge (" + std::to_string(dup->first) + ", " +
                              std::to_string(dup->second) + ")");
    }
    for (const auto& [u, v] : edges_) {
        adjacency_[u].push_back(v);
        adjacency_[v].push_back(u);
    }
    for (auto& adj : adjacency_) {
        std::sort(adj.begin(), adj.end());
    }
}

std::size_t Graph::max_degree() const noexcept {
    std::size_t d = 0;
    for (const auto& adj : adjacency_) {
        d = std::max(d, adj.size());
    }
    return d;
}

bool Graph::has_edge(std::size_t i, std::size_t j) const {
    const auto& adj = adjacency_.at(i);
    return std::binary_search(adj.begin(), adj.end(), j);
}

Eigen::MatrixXi laplacian(const Graph& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXi l = Eigen::MatrixXi::Zero(n, n);
    for (const auto& [u, v] : g.edges()) {
        const auto a = static_cast<Eigen::Index>(u);
        const auto b = static_cast<Eigen::Index>(v);
        l(a, b) = -1;
        l(b, a) = -1;
        ++l(a, a);
        ++l(b, b);
    }
    return l;
}

bool is_connected(const Graph& g) {
    if (g.size() <= 1) {
        return true;
    }
    std::vector<bool> seen(g.size(), false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v : g.neighbors(u)) {
            if (!seen[v]) {
                seen[v] = true;
                ++reached;
                frontier.push(v);
            }
        }
    }
    return reached == g.size();
}

LaplacianSummary summarize(const Graph& g) {
    if (!is_connected(g)) {
        throw StructuralError("graph is disconnected; algebraic connectivity is zero");
    }
    LaplacianSummary s;
    s.degrees.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        s.degrees.push_back(g.degree(i));
    }
    if (g.size() == 1) {
        return s;
    }
    const Eigen::MatrixXd l = laplacian(g).cast<double>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();  // ascending
    s.sigma2 = ev(1);
    s.lambda_max = ev(ev.size() - 1);
    return s;
}

double algebraic_connectivity(const Graph& g) {
    if (g.size() == 1) {
        throw StructuralError("a single node has no nonzero Laplacian eigenvalue");
    }
    return summarize(g).sigma2;
}

double laplacian_quadratic_form(const Graph& g, std::span<const double> lam) {
    double q = 0.0;
    for (const auto& [u, v] : g.edges()) {
        const double d = lam[u] - lam[v];
        q += d * d;
    }
    return q;
}

}  // namespace edp
