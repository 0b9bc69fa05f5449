#include "edp/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edp/errors.hpp"

namespace edp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double t1_for(std::size_t n, double m_lambda, double delta, double k, double sigma2) {
    if (n <= 1) {
        return 0.0;  // no disagreement coordinates
    }
    const double arg = std::sqrt(static_cast<double>(n)) * m_lambda / delta;
    if (arg < 1.0) {
        return 0.0;
    }
    return 2.0 / (k * sigma2) * std::log(arg);
}

}  // namespace

double vector_field_bound(std::span<const NodeSpec> nodes) {
    double sq = 0.0;
    for (const auto& n : nodes) {
        const double m = std::max(std::abs(n.demand - n.x_hi), std::abs(n.demand - n.x_lo));
        sq += m * m;
    }
    return std::sqrt(sq);
}

double delta_for_epsilon(std::span<const NodeSpec> nodes, Power epsilon) {
    if (!(epsilon > 0.0)) {
        throw ArgumentError("delta_for_epsilon: epsilon must be positive");
    }
    if (nodes.empty()) {
        throw ArgumentError("delta_for_epsilon: empty node list");
    }
    double l_max = 0.0;
    for (const auto& n : nodes) {
        l_max = std::max(l_max, dual_lipschitz(n));
    }
    if (l_max == 0.0) {
        return kInf;
    }
    return epsilon / (3.0 * static_cast<double>(nodes.size()) * l_max);
}

double k_bar(std::span<const NodeSpec> nodes, double sigma2, Power epsilon) {
    const double delta = delta_for_epsilon(nodes, epsilon);
    if (std::isinf(delta) || (nodes.size() <= 1 && !(sigma2 > 0.0))) {
        return kGainFloor;
    }
    if (!(sigma2 > 0.0)) {
        throw StructuralError("k_bar: sigma2 must be positive (graph disconnected?)");
    }
    return 2.0 * vector_field_bound(nodes) / (sigma2 * delta);
}

double k_bar(std::span<const NodeSpec> nodes, const Graph& g, Power epsilon) {
    const double sigma2 = g.size() > 1 ? summarize(g).sigma2 : 0.0;
    return k_bar(nodes, sigma2, epsilon);
}

TuningReport tune(std::span<const NodeSpec> nodes, double sigma2, Power epsilon, double k,
                  std::span<const Price> init) {
    if (!(k > 0.0)) {
        throw ArgumentError("tune: gain must be positive");
    }
    TuningReport r;
    r.epsilon = epsilon;
    r.k = k;
    r.sigma2 = sigma2;
    r.b_f = vector_field_bound(nodes);
    r.delta = delta_for_epsilon(nodes, epsilon);
    r.k_bar = k_bar(nodes, sigma2, epsilon);
    r.gain_sufficient = k >= r.k_bar;
    r.window = lambda_window(nodes);
    r.feasibility = classify_feasibility(nodes);

    const std::size_t n = nodes.size();
    const double nd = static_cast<double>(n);
    r.M_lambda = std::max(std::abs(r.window.lo), std::abs(r.window.hi));
    if (!init.empty()) {
        if (init.size() != n) {
            throw ArgumentError("tune: initial price vector has the wrong length");
        }
        double m = 0.0;
        for (Price l : init) {
            m = std::max(m, std::abs(l));
            r.init_in_window = r.init_in_window && l >= r.window.lo && l <= r.window.hi;
        }
        r.M_lambda = m;
    }

    const Totals tot = totals(nodes);
    r.M_o = (tot.demand - tot.x_hi) / nd;
    r.M_u = (tot.demand - tot.x_lo) / nd;

    SettleTimes& t = r.times;
    t.T1 = t1_for(n, r.M_lambda, r.delta, k, sigma2);
    t.T2 = 3.0 * nd / epsilon *
           (r.window.hi - r.window.lo + t.T1 / nd * (tot.x_hi - tot.x_lo));
    t.T = t.T1 + t.T2;
    if (r.feasibility != FeasibilityClass::Feasible) {
        const double rate = r.feasibility == FeasibilityClass::OverDemand ? r.M_o : -r.M_u;
        const double t1_bar = t1_for(n, r.M_lambda, r.delta, r.k_bar, sigma2);
        t.T_dagger = std::max((r.window.hi - r.window.lo + r.delta) / rate, t1_bar);
    }
    return r;
}

TuningReport tune(std::span<const NodeSpec> nodes, const Graph& g, Power epsilon, double k,
                  std::span<const Price> init) {
    if (g.size() != nodes.size()) {
        throw ArgumentError("tune: graph and node list sizes differ");
    }
    const double sigma2 = g.size() > 1 ? summarize(g).sigma2 : 0.0;
    return tune(nodes, sigma2, epsilon, k, init);
}

SettleTimes settle_times(std::span<const NodeSpec> nodes, const Graph& g, Power epsilon,
                         double k, std::span<const Price> init) {
    return tune(nodes, g, epsilon, k, init).times;
}

double worst_case_public_k(const NetworkClassSpec& spec) {
    if (spec.candidate_costs.empty()) {
        throw ArgumentError("worst_case_public_k: empty candidate cost list");
    }
    if (spec.N_max == 0 || !(spec.epsilon > 0.0) || spec.d_min > spec.d_max ||
        spec.x_lo_min > spec.x_hi_max) {
        throw ArgumentError("worst_case_public_k: invalid class specification");
    }
    double l_hat = 0.0;
    for (const auto& c : spec.candidate_costs) {
        if (const auto* m = c.as_custom()) {
            if (spec.x_lo_min < m->domain_lo || spec.x_hi_max > m->domain_hi) {
                throw ArgumentError("worst_case_public_k: candidate '" + m->name +
                                    "' does not cover the capacity envelope");
            }
        }
        l_hat = std::max(l_hat, c.inverse_lipschitz());
    }
    const double n_max = static_cast<double>(spec.N_max);
    if (l_hat == 0.0) {
        return kGainFloor;
    }
    const double delta_hat = spec.epsilon / (3.0 * n_max * l_hat);
    const double span = std::max(std::abs(spec.d_min - spec.x_hi_max),
                                 std::abs(spec.d_max - spec.x_lo_min));
    return span * std::pow(n_max, 2.5) / (2.0 * delta_hat);
}

}  // namespace edp
