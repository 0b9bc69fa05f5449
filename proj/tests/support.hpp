#pragma once

// Shared fixtures for unit and acceptance tests: seeded random instances,
// random connected graphs, and a dense Jacobi eigenvalue oracle that does not
// go through Eigen.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "edp/graph.hpp"
#include "edp/model.hpp"
#include "edp/network.hpp"
#include "edp/oracle.hpp"

namespace edp::test {

using Edge = Graph::Edge;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
    }
    std::size_t below(std::size_t n) {
        return std::min(n - 1, static_cast<std::size_t>(uniform(0.0, static_cast<double>(n))));
    }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }

private:
    std::mt19937_64 engine_;
};

struct InstanceShape {
    double b_lo = 1.0, b_hi = 3.0;
    double c_lo = 0.5, c_hi = 1.0;
    double x_hi_lo = 2.0, x_hi_hi = 5.0;
    /// Fraction of the capacity range the total demand sits at.
    double fill_lo = 0.2, fill_hi = 0.8;
};

/// Quadratic nodes with x_lo = 0 and total demand strictly inside the range.
inline std::vector<NodeSpec> random_feasible_nodes(Rng& rng, std::size_t n,
                                                   const InstanceShape& s = {}) {
    std::vector<NodeSpec> nodes(n);
    double cap = 0.0;
    std::vector<double> w(n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].id = static_cast<NodeId>(i + 1);
        nodes[i].cost = CostModel::quadratic(rng.uniform(0.0, 2.0), rng.uniform(s.b_lo, s.b_hi),
                                             rng.uniform(s.c_lo, s.c_hi));
        nodes[i].x_lo = 0.0;
        nodes[i].x_hi = rng.uniform(s.x_hi_lo, s.x_hi_hi);
        cap += nodes[i].x_hi;
        w[i] = rng.uniform(0.0, 1.0);
        wsum += w[i];
    }
    const double total = cap * rng.uniform(s.fill_lo, s.fill_hi);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].demand = total * w[i] / wsum;
    }
    return nodes;
}

/// Random recursive spanning tree plus every other pair with probability p.
inline std::vector<Edge> random_connected_edges(Rng& rng, std::size_t n, double p) {
    std::set<Edge> edges;
    for (std::size_t i = 1; i < n; ++i) {
        edges.insert({rng.below(i), i});
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!edges.count({i, j}) && rng.chance(p)) {
                edges.insert({i, j});
            }
        }
    }
    return {edges.begin(), edges.end()};
}

inline std::vector<IdEdge> to_id_edges(const std::vector<NodeSpec>& nodes,
                                       const std::vector<Edge>& edges) {
    std::vector<IdEdge> out;
    for (const auto& [a, b] : edges) {
        out.emplace_back(nodes[a].id, nodes[b].id);
    }
    return out;
}

inline Network random_network(Rng& rng, std::size_t n, double p, const InstanceShape& s = {}) {
    auto nodes = random_feasible_nodes(rng, n, s);
    const auto edges = to_id_edges(nodes, random_connected_edges(rng, n, p));
    return Network(std::move(nodes), edges);
}

/// Cyclic Jacobi rotations on a dense symmetric matrix; returns sorted
/// eigenvalues.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline std::vector<std::vector<double>> dense_laplacian(std::size_t n,
                                                        const std::vector<Edge>& edges) {
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    for (const auto& [a, b] : edges) {
        l[a][a] += 1.0;
        l[b][b] += 1.0;
        l[a][b] -= 1.0;
        l[b][a] -= 1.0;
    }
    return l;
}

/// Largest KKT stationarity violation of a dual solution.
inline double kkt_violation(std::span<const NodeSpec> nodes, const DualSolution& s) {
    double worst = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const NodeSpec& n = nodes[i];
        if (!n.has_range()) continue;
        const double x = s.x_star[i];
        const double mc = marginal_cost(n, x);
        double v = 0.0;
        if (x >= n.x_hi) {
            v = std::max(0.0, mc - s.lam_star);
        } else if (x <= n.x_lo) {
            v = std::max(0.0, s.lam_star - mc);
        } else {
            v = std::abs(mc - s.lam_star);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

/// Step size at half the stability bound.
inline double half_guard_tau(const Network& net, double k, double lambda_max) {
    double lmax = 0.0;
    for (const auto& n : net.nodes()) lmax = std::max(lmax, dual_lipschitz(n));
    return 1.0 / (k * lambda_max + lmax);
}

}  // namespace edp::test
