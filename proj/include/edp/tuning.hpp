#pragma once

// Gain and settling-time calculators for the distributed dual-gradient rule:
// the vector-field bound b_f, the price granularity delta, the gain bound
// k_bar = 2 b_f / (sigma2 delta), the settling times T1/T2/T and the
// infeasibility settling time, plus the operator's announce-once gain for a
// capacity-bounded class of networks.

#include <optional>
#include <span>
#include <vector>

#include "edp/graph.hpp"
#include "edp/model.hpp"

namespace edp {

/// Gain reported when every node has a fixed output (the bound is 0/0 there;
/// any positive gain keeps consensus).
inline constexpr double kGainFloor = 1.0;

struct SettleTimes {
    double T1 = 0.0;
    double T2 = 0.0;
    double T = 0.0;
    /// Only for infeasible networks.
    std::optional<double> T_dagger;
};

struct TuningReport {
    double b_f = 0.0;
    double sigma2 = 0.0;
    double delta = 0.0;  // +inf when no node has a capacity range
    double k_bar = 0.0;
    double M_lambda = 0.0;
    double epsilon = 0.0;
    double k = 0.0;
    /// k >= k_bar.
    bool gain_sufficient = false;
    /// Initial prices were supplied and all lie in the announced window, so
    /// the time bounds apply as stated.
    bool init_in_window = true;
    LambdaWindow window;
    SettleTimes times;
    Power M_o = 0.0;  // (sum d - sum x_hi) / N
    Power M_u = 0.0;  // (sum d - sum x_lo) / N
    FeasibilityClass feasibility = FeasibilityClass::Feasible;
};

/// A class of networks an operator may face, for choosing one public gain.
struct NetworkClassSpec {
    std::size_t N_max = 0;
    std::vector<CostModel> candidate_costs;
    Power x_hi_max = 0.0;
    Power x_lo_min = 0.0;
    Power d_min = 0.0;
    Power d_max = 0.0;
    Power epsilon = 1.0;
};

/// Euclidean bound on the stacked dual-derivative vector; exact.
[[nodiscard]] double vector_field_bound(std::span<const NodeSpec> nodes);

/// epsilon / (3 N L_max), with L_max the largest dual-derivative Lipschitz
/// bound. +inf when L_max is zero.
[[nodiscard]] double delta_for_epsilon(std::span<const NodeSpec> nodes, Power epsilon);

/// k_bar given a precomputed sigma2.
[[nodiscard]] double k_bar(std::span<const NodeSpec> nodes, double sigma2, Power epsilon);

/// Throws StructuralError for a disconnected graph.
[[nodiscard]] double k_bar(std::span<const NodeSpec> nodes, const Graph& g, Power epsilon);

/// Literal evaluation of the settling-time bounds for gain k. When `init` is
/// given, M_lambda is taken from it instead of from the announced window.
[[nodiscard]] SettleTimes settle_times(std::span<const NodeSpec> nodes, const Graph& g,
                                       Power epsilon, double k,
                                       std::span<const Price> init = {});

/// Everything above in one report.
[[nodiscard]] TuningReport tune(std::span<const NodeSpec> nodes, const Graph& g, Power epsilon,
                                double k, std::span<const Price> init = {});

/// Same, reusing a known sigma2 (no eigensolve).
[[nodiscard]] TuningReport tune(std::span<const NodeSpec> nodes, double sigma2, Power epsilon,
                                double k, std::span<const Price> init = {});

/// Worst-case gain over a class, using sigma2 >= 4 / N_max^2 in place of the
/// unknown graph. Throws ArgumentError on an empty candidate list.
[[nodiscard]] double worst_case_public_k(const NetworkClassSpec& spec);

}  // namespace edp
