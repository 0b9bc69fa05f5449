#include "edp/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edp/errors.hpp"

namespace edp {

namespace {

constexpr int kCustomProbePoints = 65;
constexpr double kInverseTolerance = 1e-9;

void require_in_domain(const CustomCost& m, Power x) {
    if (!(x >= m.domain_lo && x <= m.domain_hi)) {
        throw DomainError("cost model '" + m.name + "' evaluated at x=" + std::to_string(x) +
                          " outside [" + std::to_string(m.domain_lo) + ", " +
                          std::to_string(m.domain_hi) + "]");
    }
}

}  // namespace

CostModel CostModel::quadratic(double a, double b, double c) {
    if (!(c > 0.0) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        throw ArgumentError("quadratic cost requires finite coefficients and c > 0 (got c=" +
                            std::to_string(c) + ")");
    }
    return CostModel(QuadraticCost{a, b, c});
}

CostModel CostModel::custom(CustomCost model) {
    if (!model.cost || !model.marginal || !model.inverse_marginal) {
        throw ArgumentError("custom cost '" + model.name + "' is missing a function handle");
    }
    if (!(model.domain_lo <= model.domain_hi) || !(model.inverse_lipschitz >= 0.0)) {
        throw ArgumentError("custom cost '" + model.name + "' has an invalid domain or bound");
    }
    const double span = model.domain_hi - model.domain_lo;
    double prev = 0.0;
    for (int k = 0; k < kCustomProbePoints; ++k) {
        const double x = model.domain_lo + span * k / (kCustomProbePoints - 1);
        const double m = model.marginal(x);
        if (k > 0 && span > 0.0 && !(m > prev)) {
            throw ArgumentError("custom cost '" + model.name +
                                "' marginal is not strictly increasing near x=" +
                                std::to_string(x));
        }
        const double back = model.inverse_marginal(m);
        if (std::abs(back - x) > kInverseTolerance * std::max(1.0, std::abs(x))) {
            throw ArgumentError("custom cost '" + model.name +
                                "' inverse marginal disagrees at x=" + std::to_string(x));
        }
        prev = m;
    }
    return CostModel(std::move(model));
}

double CostModel::cost(Power x) const {
    if (const auto* q = as_quadratic()) {
        return q->a + q->b * x + q->c * x * x;
    }
    const auto& m = std::get<CustomCost>(kind_);
    require_in_domain(m, x);
    return m.cost(x);
}

Price CostModel::marginal(Power x) const {
    if (const auto* q = as_quadratic()) {
        return q->b + 2.0 * q->c * x;
    }
    const auto& m = std::get<CustomCost>(kind_);
    require_in_domain(m, x);
    return m.marginal(x);
}

Power CostModel::inverse_marginal(Price lam) const {
    if (const auto* q = as_quadratic()) {
        return (lam - q->b) / (2.0 * q->c);
    }
    return std::get<CustomCost>(kind_).inverse_marginal(lam);
}

double CostModel::inverse_lipschitz() const noexcept {
    if (const auto* q = as_quadratic()) {
        return 1.0 / (2.0 * q->c);
    }
    return std::get<CustomCost>(kind_).inverse_lipschitz;
}

void validate_node(const NodeSpec& node) {
    const std::string who = "node " + std::to_string(node.id);
    if (!std::isfinite(node.demand) || !std::isfinite(node.x_lo) || !std::isfinite(node.x_hi)) {
        throw ValidationError(who + ": non-finite demand or capacity");
    }
    if (!(node.x_lo <= node.x_hi)) {
        throw ValidationError(who + ": x_lo " + std::to_string(node.x_lo) + " exceeds x_hi " +
                              std::to_string(node.x_hi));
    }
    if (const auto* m = node.cost.as_custom()) {
        if (node.x_lo < m->domain_lo || node.x_hi > m->domain_hi) {
            throw ValidationError(who + ": capacity interval outside the domain of cost '" +
                                  m->name + "'");
        }
    }
}

std::string_view to_string(FeasibilityClass f) noexcept {
    switch (f) {
        case FeasibilityClass::Feasible:
            return "feasible";
        case FeasibilityClass::OverDemand:
            return "over_demand";
        case FeasibilityClass::UnderDemand:
            return "under_demand";
    }
    return "unknown";
}

Price marginal_cost(const NodeSpec& node, Power x) { return node.cost.marginal(x); }

Breakpoints breakpoints(const NodeSpec& node) {
    return {node.cost.marginal(node.x_lo), node.cost.marginal(node.x_hi)};
}

Power theta(const NodeSpec& node, Price lam) {
    if (!node.has_range()) {
        return node.x_hi;
    }
    const Breakpoints bp = breakpoints(node);
    if (lam < bp.lo) {
        return node.x_lo;
    }
    if (lam > bp.hi) {
        return node.x_hi;
    }
    // Rounding in the inverse can step a hair outside the interval.
    return std::clamp(node.cost.inverse_marginal(lam), node.x_lo, node.x_hi);
}

Power dual_derivative(const NodeSpec& node, Price lam) { return node.demand - theta(node, lam); }

double dual_value(const NodeSpec& node, Price lam) {
    const Power x = theta(node, lam);
    return node.cost.cost(x) + lam * (node.demand - x);
}

double dual_lipschitz(const NodeSpec& node) noexcept {
    return node.has_range() ? node.cost.inverse_lipschitz() : 0.0;
}

LambdaWindow lambda_window(std::span<const NodeSpec> nodes) {
    if (nodes.empty()) {
        throw ArgumentError("lambda_window: empty node list");
    }
    LambdaWindow w{breakpoints(nodes.front()).lo, breakpoints(nodes.front()).hi};
    for (const auto& n : nodes.subspan(1)) {
        const Breakpoints bp = breakpoints(n);
        w.lo = std::min(w.lo, bp.lo);
        w.hi = std::max(w.hi, bp.hi);
    }
    return w;
}

Totals totals(std::span<const NodeSpec> nodes) noexcept {
    Totals t;
    for (const auto& n : nodes) {
        t.demand += n.demand;
        t.x_lo += n.x_lo;
        t.x_hi += n.x_hi;
    }
    return t;
}

FeasibilityClass classify_feasibility(std::span<const NodeSpec> nodes) {
    if (nodes.empty()) {
        throw ArgumentError("classify_feasibility: empty node list");
    }
    const Totals t = totals(nodes);
    if (t.demand > t.x_hi) {
        return FeasibilityClass::OverDemand;
    }
    if (t.demand < t.x_lo) {
        return FeasibilityClass::UnderDemand;
    }
    return FeasibilityClass::Feasible;
}

}  // namespace edp
