#include "edp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace edp {

namespace {

constexpr int kMaxBisections = 200;
constexpr double kWindowPad = 1.0;

// Sign threshold for the total dual derivative. A flat stretch of the
// derivative is an exact sum of capacity bounds and demands, which rounding
// may leave a few ulps away from zero.
double zero_band(std::span<const NodeSpec> nodes) {
    double scale = 1.0;
    for (const auto& n : nodes) {
        scale += std::abs(n.demand) + std::abs(n.x_lo) + std::abs(n.x_hi);
    }
    return 64.0 * std::numeric_limits<double>::epsilon() * scale;
}

// Boundary of the predicate `pred` (true on the left, false on the right)
// inside [lo, hi], to width tol.
template <typename Pred>
Price bisect_boundary(Price lo, Price hi, Price tol, Pred pred) {
    for (int it = 0; it < kMaxBisections && hi - lo > tol; ++it) {
        const Price mid = 0.5 * (lo + hi);
        if (pred(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

Power total_dual_derivative(std::span<const NodeSpec> nodes, Price lam) {
    Power sum = 0.0;
    for (const auto& n : nodes) {
        sum += dual_derivative(n, lam);
    }
    return sum;
}

DualSolution solve_dual(std::span<const NodeSpec> nodes, Price tol) {
    if (nodes.empty()) {
        throw ArgumentError("solve_dual: empty node list");
    }
    if (!(tol > 0.0)) {
        throw ArgumentError("solve_dual: tolerance must be positive");
    }
    const FeasibilityClass cls = classify_feasibility(nodes);
    if (cls != FeasibilityClass::Feasible) {
        throw FeasibilityError(cls, "solve_dual: problem is " + std::string(to_string(cls)));
    }

    const LambdaWindow w = lambda_window(nodes);
    const Price lo = w.lo - kWindowPad;
    const Price hi = w.hi + kWindowPad;
    const double band = zero_band(nodes);
    auto residual = [&](Price lam) { return total_dual_derivative(nodes, lam); };

    // The optimal set is {residual == 0}; residual is nonincreasing, so its
    // left end is where residual stops being positive and its right end is
    // where it starts being negative.
    DualSolution sol;
    PriceInterval& iv = sol.lam_star_interval;
    if (residual(lo) <= band) {
        iv.lo = lo;
        iv.unbounded_below = true;
    } else {
        iv.lo = bisect_boundary(lo, hi, tol, [&](Price l) { return residual(l) > band; });
    }
    if (residual(hi) >= -band) {
        iv.hi = hi;
        iv.unbounded_above = true;
    } else {
        iv.hi = bisect_boundary(lo, hi, tol, [&](Price l) { return residual(l) >= -band; });
    }
    if (iv.hi < iv.lo) {
        // Point solution: the two bisections bracket the same crossing.
        const Price mid = 0.5 * (iv.lo + iv.hi);
        iv.lo = iv.hi = mid;
    }

    if (iv.unbounded_below && iv.unbounded_above) {
        sol.degenerate = true;
        sol.lam_star = 0.0;
    } else {
        sol.lam_star = 0.5 * (iv.lo + iv.hi);
    }

    sol.x_star.reserve(nodes.size());
    Power supplied = 0.0;
    for (const auto& n : nodes) {
        const Power x = theta(n, sol.lam_star);
        sol.x_star.push_back(x);
        sol.total_cost += n.cost.cost(x);
        supplied += x;
    }
    sol.balance_residual = totals(nodes).demand - supplied;
    return sol;
}

GridSolution brute_force_oracle(std::span<const NodeSpec> nodes, Power grid_step) {
    const std::size_t n = nodes.size();
    if (n == 0 || n > 4) {
        throw ArgumentError("brute_force_oracle: supports 1 to 4 nodes, got " +
                            std::to_string(n));
    }
    if (!(grid_step > 0.0)) {
        throw ArgumentError("brute_force_oracle: grid step must be positive");
    }
    const FeasibilityClass cls = classify_feasibility(nodes);
    if (cls != FeasibilityClass::Feasible) {
        throw FeasibilityError(cls, "brute_force_oracle: problem is " +
                                        std::string(to_string(cls)));
    }

    // Per-coordinate candidate values and their costs, computed once.
    std::vector<std::vector<Power>> values(n - 1);
    std::vector<std::vector<double>> costs(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto& node = nodes[i];
        for (std::size_t k = 0;; ++k) {
            const Power x = node.x_lo + static_cast<double>(k) * grid_step;
            if (x >= node.x_hi) {
                break;
            }
            values[i].push_back(x);
        }
        values[i].push_back(node.x_hi);
        for (Power x : values[i]) {
            costs[i].push_back(node.cost.cost(x));
        }
    }

    const NodeSpec& last = nodes[n - 1];
    const Power demand = totals(nodes).demand;
    GridSolution best;
    best.cost_best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(n - 1, 0);
    // Balance closure tolerance for the last coordinate.
    const Power slack = 1e-12 * (1.0 + std::abs(demand));

    while (true) {
        Power partial = 0.0;
        double cost = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            partial += values[i][idx[i]];
            cost += costs[i][idx[i]];
        }
        Power x_last = demand - partial;
        if (x_last >= last.x_lo - slack && x_last <= last.x_hi + slack) {
            x_last = std::clamp(x_last, last.x_lo, last.x_hi);
            cost += last.cost.cost(x_last);
            if (cost < best.cost_best) {
                best.cost_best = cost;
                best.x_best.clear();
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    best.x_best.push_back(values[i][idx[i]]);
                }
                best.x_best.push_back(x_last);
            }
        }
        std::size_t d = 0;
        while (d + 1 < n && ++idx[d] == values[d].size()) {
            idx[d] = 0;
            ++d;
        }
        if (d + 1 >= n) {
            break;
        }
    }
    if (best.x_best.empty()) {
        throw InfeasibleOnGridError("brute_force_oracle: no grid point balances supply and "
                                    "demand; refine the grid step");
    }
    return best;
}

Price centralized_flow_step(std::span<const NodeSpec> nodes, Price lam, double dt) {
    if (!(dt > 0.0)) {
        throw ArgumentError("centralized_flow_step: dt must be positive");
    }
    return lam + dt * total_dual_derivative(nodes, lam);
}

}  // namespace edp
