#pragma once

// Centralized ground truth for the dispatch problem: a bisection solver on the
// monotone dual derivative, an exhaustive grid search for tiny instances, and
// one forward-Euler step of the centralized dual gradient flow.

#include <span>
#include <vector>

#include "edp/errors.hpp"
#include "edp/model.hpp"

namespace edp {

/// Raised when an operation that needs a feasible problem gets an infeasible one.
class FeasibilityError : public Error {
public:
    FeasibilityError(FeasibilityClass cls, const std::string& what)
        : Error(what), class_(cls) {}
    [[nodiscard]] FeasibilityClass feasibility() const noexcept { return class_; }

private:
    FeasibilityClass class_;
};

/// No grid point satisfies the balance equation; refine the grid step.
class InfeasibleOnGridError : public Error {
public:
    using Error::Error;
};

struct PriceInterval {
    Price lo = 0.0;
    Price hi = 0.0;
    bool unbounded_below = false;  // lo is the clip of the search window
    bool unbounded_above = false;  // hi is the clip of the search window
};

struct DualSolution {
    Price lam_star = 0.0;
    PriceInterval lam_star_interval;
    /// Optimal prices are unbounded on both sides; lam_star is reported as 0.
    bool degenerate = false;
    std::vector<Power> x_star;
    double total_cost = 0.0;
    /// sum(d) - sum(x_star).
    Power balance_residual = 0.0;
};

inline constexpr Price kDefaultPriceTolerance = 1e-9;

/// Throws FeasibilityError for infeasible input, ArgumentError for an empty list.
[[nodiscard]] DualSolution solve_dual(std::span<const NodeSpec> nodes,
                                      Price tol = kDefaultPriceTolerance);

struct GridSolution {
    std::vector<Power> x_best;
    double cost_best = 0.0;
};

/// Exhaustive search for N <= 4: the first N-1 coordinates range over a grid
/// (plus the interval endpoints) and the last closes the balance exactly.
[[nodiscard]] GridSolution brute_force_oracle(std::span<const NodeSpec> nodes, Power grid_step);

/// lam + dt * sum_i dual_derivative(node_i, lam).
[[nodiscard]] Price centralized_flow_step(std::span<const NodeSpec> nodes, Price lam, double dt);

/// sum_i dual_derivative(node_i, lam).
[[nodiscard]] Power total_dual_derivative(std::span<const NodeSpec> nodes, Price lam);

}  // namespace edp
