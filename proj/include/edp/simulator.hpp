#pragma once

// Synchronous-round simulation of the distributed dual-gradient rule
//
//   lam_i <- lam_i + tau * alpha * [ (d_i - theta_i(lam_i)) + k * sum_j (lam_j - lam_i) ]
//
// Each node sees only its own private data and its neighbors' prices. The
// engine applies on-line scenario events without touching the prices, records
// diagnostics, and runs the over/under-demand detector.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "edp/graph.hpp"
#include "edp/model.hpp"
#include "edp/network.hpp"
#include "edp/tuning.hpp"

namespace edp {

struct SimConfig {
    double k = 200.0;
    double tau = 1e-3;
    double alpha = 1.0;
    double t_end = 25.0;
    std::size_t record_every = 10;
    Power epsilon = 1.0;
    /// Detector settings: the window is in simulated seconds.
    double detect_window = 1.0;
    double rate_tol = 1e-3;
    bool detect = true;
};

/// Throws ConfigError on nonpositive tau, alpha < 1, negative k, ...
void validate_config(const SimConfig& cfg);

/// Largest tau for which forward Euler stays stable:
/// 2 / (alpha * (k * lambda_max(L) + max_i L_i)).
[[nodiscard]] double max_stable_tau(const Network& net, double lambda_max, double k,
                                    double alpha);

/// Throws ConfigError quoting the bound when cfg.tau is not below it.
void check_stability(const Network& net, double lambda_max, const SimConfig& cfg);

struct DualState {
    std::int64_t n = 0;  // completed rounds
    double t = 0.0;
    std::vector<Price> lam;
    std::vector<double> lam_dot;  // price/s over the last round
};

struct Diagnostics {
    Price xi1 = 0.0;
    Price xi_e_norm = 0.0;
    double lyapunov = 0.0;
    Power total_mismatch = 0.0;
    std::vector<Power> generation;
};

enum class DetectorStatus { Normal, OverDemandDetected, UnderDemandDetected };

[[nodiscard]] std::string_view to_string(DetectorStatus s) noexcept;

/// Public constants a node needs to interpret its own price drift.
struct Announced {
    Price lam_lo = 0.0;
    Price lam_hi = 0.0;
    std::size_t n = 0;
};

struct InfeasibilityVerdict {
    DetectorStatus status = DetectorStatus::Normal;
    double settled_rate = 0.0;          // price/s
    Power estimated_imbalance = 0.0;    // MW, N * rate / alpha
    double detection_time = 0.0;
};

/// One node's synchronous update. Only the node's own data and the prices it
/// hears from neighbors go in.
[[nodiscard]] Price node_update(Price lam_self, std::span<const Price> neighbor_lams,
                                const NodeSpec& node, const SimConfig& cfg);

/// One Jacobi round over the whole network. The stability guard is the
/// caller's business here; Simulator and run() enforce it.
[[nodiscard]] DualState step(const DualState& state, const Network& net, const SimConfig& cfg);

/// Marginal cost at the middle of the capacity interval.
[[nodiscard]] Price default_init(const NodeSpec& node);
[[nodiscard]] std::vector<Price> default_init(std::span<const NodeSpec> nodes);

/// Looks at the states inside the trailing `window` seconds of `history`
/// (chronological). Normal unless every node sits beyond the announced window
/// with a settled drift.
[[nodiscard]] InfeasibilityVerdict detect_infeasibility(std::span<const DualState> history,
                                                        const Announced& announced,
                                                        double window, double rate_tol,
                                                        double alpha = 1.0);

/// Same over a history split in two chronological runs (older, newer).
[[nodiscard]] InfeasibilityVerdict detect_infeasibility(std::span<const DualState> older,
                                                        std::span<const DualState> newer,
                                                        const Announced& announced,
                                                        double window, double rate_tol,
                                                        double alpha = 1.0);

[[nodiscard]] Diagnostics diagnostics(const DualState& state, const Network& net,
                                      const SimConfig& cfg);

// ---------------------------------------------------------------------------
// Scenario events

struct SetDemand {
    NodeId node = 0;
    Power demand = 0.0;
};
struct ScaleCapacity {
    NodeId node = 0;
    double x_hi_factor = 1.0;
    double x_lo_factor = 1.0;
};
struct SetCost {
    NodeId node = 0;
    CostModel cost;
};
struct RemoveNode {
    NodeId node = 0;
};
struct AddNode {
    NodeSpec spec;
    std::optional<Price> lam0;
    std::vector<NodeId> neighbors;
};
struct AddEdge {
    NodeId a = 0;
    NodeId b = 0;
};
struct RemoveEdge {
    NodeId a = 0;
    NodeId b = 0;
};

using EventAction =
    std::variant<SetDemand, ScaleCapacity, SetCost, RemoveNode, AddNode, AddEdge, RemoveEdge>;

struct ScenarioEvent {
    double t = 0.0;
    EventAction action;
};

[[nodiscard]] std::string describe(const ScenarioEvent& e);

/// Stable sort by time.
void sort_events(std::vector<ScenarioEvent>& events);

// ---------------------------------------------------------------------------
// Engine

class Simulator {
public:
    /// Empty `init` means default_init. Throws ConfigError / StructuralError.
    Simulator(Network net, SimConfig cfg, std::vector<Price> init = {});

    [[nodiscard]] const Network& network() const noexcept { return net_; }
    [[nodiscard]] const SimConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const DualState& state() const noexcept { return state_; }
    [[nodiscard]] const LaplacianSummary& spectrum() const noexcept { return spectrum_; }
    [[nodiscard]] Announced announced() const;

    void step();

    /// Applies an event between rounds without resetting any price. Throws
    /// ScenarioError naming the event when it references an unknown node,
    /// produces an invalid node, or disconnects the graph; the engine is left
    /// unchanged in that case.
    void apply(const ScenarioEvent& event);

    [[nodiscard]] Diagnostics diagnostics() const;
    /// Detector over the retained history (Normal until a full window exists).
    [[nodiscard]] InfeasibilityVerdict detect() const;

private:
    void push_history();

    Network net_;
    SimConfig cfg_;
    LaplacianSummary spectrum_;
    DualState state_;
    DualState next_;
    std::vector<DualState> ring_;
    std::size_t ring_head_ = 0;  // next write slot
    std::size_t ring_count_ = 0;
};

// ---------------------------------------------------------------------------
// Run orchestration

struct SegmentInfo {
    std::size_t index = 0;
    double t_start = 0.0;
    /// Time of the next event, or t_end.
    double t_end = 0.0;
    FeasibilityClass feasibility = FeasibilityClass::Feasible;
    TuningReport tuning;
    /// Event that opened the segment (empty for the first).
    std::string opened_by;
};

struct Record {
    std::size_t segment = 0;
    DualState state;
    Diagnostics diag;
    InfeasibilityVerdict verdict;
};

struct RunObserver {
    std::function<void(const Simulator&, const SegmentInfo&)> on_segment;
    std::function<void(const Simulator&, const Record&)> on_record;
};

struct RunResult {
    std::vector<SegmentInfo> segments;
    std::vector<Record> records;  // empty when keep_records is false
};

/// Runs from t = 0 to cfg.t_end. Events (sorted by time) fire at the first
/// round boundary with t >= t_event. A record is taken at t = 0, every
/// cfg.record_every rounds, and at the end.
[[nodiscard]] RunResult run(Network net, const SimConfig& cfg,
                            std::span<const ScenarioEvent> events,
                            std::vector<Price> init = {}, const RunObserver& observer = {},
                            bool keep_records = true);

}  // namespace edp
