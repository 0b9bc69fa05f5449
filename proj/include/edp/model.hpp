#pragma once

// Per-node economics of the dispatch problem: cost curves, the clamped
// inverse-marginal map theta, and the distributed dual function built on it.
// Nothing in here knows about the communication graph.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace edp {

using Power = double;  // MW
using Price = double;  // $/MW
using NodeId = int;

/// J(x) = a + b x + c x^2 with c > 0.
struct QuadraticCost {
    double a = 0.0;
    double b = 0.0;
    double c = 1.0;
};

/// User-supplied strictly convex cost. The inverse of the marginal cost and a
/// Lipschitz bound for it are part of the contract, since nothing here can
/// construct them in general.
struct CustomCost {
    std::string name;
    std::function<double(double)> cost;
    std::function<double(double)> marginal;
    std::function<double(double)> inverse_marginal;
    double inverse_lipschitz = 0.0;
    Power domain_lo = 0.0;
    Power domain_hi = 0.0;
};

class CostModel {
public:
    /// Throws ArgumentError unless c > 0.
    static CostModel quadratic(double a, double b, double c);
    /// Validates monotonicity and inverse consistency on the declared domain.
    static CostModel custom(CustomCost model);

    [[nodiscard]] bool is_quadratic() const noexcept {
        return std::holds_alternative<QuadraticCost>(kind_);
    }
    [[nodiscard]] const QuadraticCost* as_quadratic() const noexcept {
        return std::get_if<QuadraticCost>(&kind_);
    }
    [[nodiscard]] const CustomCost* as_custom() const noexcept {
        return std::get_if<CustomCost>(&kind_);
    }

    [[nodiscard]] double cost(Power x) const;
    [[nodiscard]] Price marginal(Power x) const;
    /// v(lam): the x with marginal(x) == lam. Custom models clamp nothing.
    [[nodiscard]] Power inverse_marginal(Price lam) const;
    /// Lipschitz bound of inverse_marginal (1/(2c) for quadratics).
    [[nodiscard]] double inverse_lipschitz() const noexcept;

private:
    explicit CostModel(std::variant<QuadraticCost, CustomCost> kind)
        : kind_(std::move(kind)) {}

    std::variant<QuadraticCost, CustomCost> kind_;
};

/// One bus's private data. A customer without a generator has
/// x_lo == x_hi == 0.
struct NodeSpec {
    NodeId id = 0;
    CostModel cost = CostModel::quadratic(0.0, 0.0, 1.0);
    Power demand = 0.0;
    Power x_lo = 0.0;
    Power x_hi = 0.0;

    [[nodiscard]] bool has_range() const noexcept { return x_lo < x_hi; }
    [[nodiscard]] bool is_customer() const noexcept { return x_lo == 0.0 && x_hi == 0.0; }
};

/// Throws ValidationError naming the node when the capacity interval is
/// inverted, a value is non-finite, or a custom cost does not cover it.
void validate_node(const NodeSpec& node);

/// Marginal costs at the two ends of the capacity interval.
struct Breakpoints {
    Price lo = 0.0;
    Price hi = 0.0;
};

enum class FeasibilityClass { Feasible, OverDemand, UnderDemand };

[[nodiscard]] std::string_view to_string(FeasibilityClass f) noexcept;

struct LambdaWindow {
    Price lo = 0.0;
    Price hi = 0.0;
};

struct Totals {
    Power demand = 0.0;
    Power x_lo = 0.0;
    Power x_hi = 0.0;
};

[[nodiscard]] Price marginal_cost(const NodeSpec& node, Power x);
[[nodiscard]] Breakpoints breakpoints(const NodeSpec& node);

/// Cost-minimizing output at price lam: the inverse marginal clamped to
/// [x_lo, x_hi]. At an exact breakpoint the inverse-marginal branch is used;
/// both branches agree there.
[[nodiscard]] Power theta(const NodeSpec& node, Price lam);

/// d - theta(lam). Nonincreasing, bounded in [d - x_hi, d - x_lo].
[[nodiscard]] Power dual_derivative(const NodeSpec& node, Price lam);

/// g(lam) = J(theta(lam)) + lam (d - theta(lam)).
[[nodiscard]] double dual_value(const NodeSpec& node, Price lam);

/// Lipschitz bound of dual_derivative: zero for fixed-output nodes.
[[nodiscard]] double dual_lipschitz(const NodeSpec& node) noexcept;

/// Throws ArgumentError on an empty list.
[[nodiscard]] LambdaWindow lambda_window(std::span<const NodeSpec> nodes);

[[nodiscard]] Totals totals(std::span<const NodeSpec> nodes) noexcept;

/// Boundary equalities are feasible.
[[nodiscard]] FeasibilityClass classify_feasibility(std::span<const NodeSpec> nodes);

}  // namespace edp
