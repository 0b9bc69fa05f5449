#include "edp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "edp/errors.hpp"

namespace edp {

namespace {

// Events scheduled on a round boundary must not miss it because n * tau
// rounds a hair below t_event.
constexpr double kBoundarySlack = 1e-9;

void advance(const DualState& in, const Network& net, const SimConfig& cfg, DualState& out,
             std::vector<Price>& scratch) {
    const Graph& g = net.graph();
    const std::size_t n = net.size();
    out.n = in.n + 1;
    out.t = static_cast<double>(out.n) * cfg.tau;
    out.lam.resize(n);
    out.lam_dot.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        scratch.clear();
        for (std::size_t j : g.neighbors(i)) {
            scratch.push_back(in.lam[j]);
        }
        out.lam[i] = node_update(in.lam[i], scratch, net.node(i), cfg);
        out.lam_dot[i] = (out.lam[i] - in.lam[i]) / cfg.tau;
    }
}

double max_dual_lipschitz(const Network& net) {
    double l = 0.0;
    for (const auto& node : net.nodes()) {
        l = std::max(l, dual_lipschitz(node));
    }
    return l;
}

template <typename Fn>
void for_each_state(std::span<const DualState> older, std::span<const DualState> newer, Fn fn) {
    for (const auto& s : older) {
        fn(s);
    }
    for (const auto& s : newer) {
        fn(s);
    }
}

std::string event_name(const EventAction& a) {
    struct Visitor {
        std::string operator()(const SetDemand& e) const {
            return "set_demand(" + std::to_string(e.node) + ")";
        }
        std::string operator()(const ScaleCapacity& e) const {
            return "scale_capacity(" + std::to_string(e.node) + ")";
        }
        std::string operator()(const SetCost& e) const {
            return "set_cost(" + std::to_string(e.node) + ")";
        }
        std::string operator()(const RemoveNode& e) const {
            return "remove_node(" + std::to_string(e.node) + ")";
        }
        std::string operator()(const AddNode& e) const {
            return "add_node(" + std::to_string(e.spec.id) + ")";
        }
        std::string operator()(const AddEdge& e) const {
            return "add_edge(" + std::to_string(e.a) + ", " + std::to_string(e.b) + ")";
        }
        std::string operator()(const RemoveEdge& e) const {
            return "remove_edge(" + std::to_string(e.a) + ", " + std::to_string(e.b) + ")";
        }
    };
    return std::visit(Visitor{}, a);
}

}  // namespace

void validate_config(const SimConfig& cfg) {
    if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) {
        throw ConfigError("tau must be positive and finite");
    }
    if (!(cfg.alpha >= 1.0) || !std::isfinite(cfg.alpha)) {
        throw ConfigError("alpha must be >= 1");
    }
    if (!(cfg.k >= 0.0) || !std::isfinite(cfg.k)) {
        throw ConfigError("k must be nonnegative and finite");
    }
    if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) {
        throw ConfigError("t_end must be nonnegative");
    }
    if (cfg.record_every == 0) {
        throw ConfigError("record_every must be at least 1");
    }
    if (!(cfg.epsilon > 0.0)) {
        throw ConfigError("epsilon must be positive");
    }
    if (cfg.detect && (!(cfg.detect_window > 0.0) || !(cfg.rate_tol > 0.0))) {
        throw ConfigError("detector window and rate tolerance must be positive");
    }
}

double max_stable_tau(const Network& net, double lambda_max, double k, double alpha) {
    const double rate = alpha * (k * lambda_max + max_dual_lipschitz(net));
    return rate > 0.0 ? 2.0 / rate : std::numeric_limits<double>::infinity();
}

void check_stability(const Network& net, double lambda_max, const SimConfig& cfg) {
    const double bound = max_stable_tau(net, lambda_max, cfg.k, cfg.alpha);
    if (!(cfg.tau < bound)) {
        std::ostringstream msg;
        msg.precision(10);
        msg << "stability guard violated: tau = " << cfg.tau << " must be below "
            << "2 / (alpha * (k * lambda_max + L_max)) = " << bound << " (k = " << cfg.k
            << ", alpha = " << cfg.alpha << ", lambda_max = " << lambda_max << ")";
        throw ConfigError(msg.str());
    }
}

std::string_view to_string(DetectorStatus s) noexcept {
    switch (s) {
        case DetectorStatus::Normal:
            return "normal";
        case DetectorStatus::OverDemandDetected:
            return "over_demand";
        case DetectorStatus::UnderDemandDetected:
            return "under_demand";
    }
    return "unknown";
}

Price node_update(Price lam_self, std::span<const Price> neighbor_lams, const NodeSpec& node,
                  const SimConfig& cfg) {
    double coupling = 0.0;
    for (Price l : neighbor_lams) {
        coupling += l - lam_self;
    }
    return lam_self + cfg.tau * cfg.alpha * (dual_derivative(node, lam_self) + cfg.k * coupling);
}

DualState step(const DualState& state, const Network& net, const SimConfig& cfg) {
    if (state.lam.size() != net.size()) {
        throw ArgumentError("step: state and network sizes differ");
    }
    DualState out;
    std::vector<Price> scratch;
    scratch.reserve(net.graph().max_degree());
    advance(state, net, cfg, out, scratch);
    return out;
}

Price default_init(const NodeSpec& node) {
    return marginal_cost(node, 0.5 * (node.x_hi + node.x_lo));
}

std::vector<Price> default_init(std::span<const NodeSpec> nodes) {
    std::vector<Price> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) {
        out.push_back(default_init(n));
    }
    return out;
}

InfeasibilityVerdict detect_infeasibility(std::span<const DualState> history,
                                          const Announced& announced, double window,
                                          double rate_tol, double alpha) {
    return detect_infeasibility(history, {}, announced, window, rate_tol, alpha);
}

InfeasibilityVerdict detect_infeasibility(std::span<const DualState> older,
                                          std::span<const DualState> newer,
                                          const Announced& announced, double window,
                                          double rate_tol, double alpha) {
    InfeasibilityVerdict v;
    if (older.empty() && newer.empty()) {
        return v;
    }
    const DualState& last = newer.empty() ? older.back() : newer.back();
    const DualState& first = older.empty() ? newer.front() : older.front();
    v.detection_time = last.t;
    const double slack = 1e-6 * window;
    if (last.t - first.t < window - slack) {
        return v;  // not enough history yet
    }
    const std::size_t n = last.lam.size();
    if (n == 0) {
        return v;
    }
    const double t_from = last.t - window - slack;

    std::vector<double> lam_min(n, std::numeric_limits<double>::infinity());
    std::vector<double> lam_max(n, -std::numeric_limits<double>::infinity());
    std::vector<double> dot_min = lam_min;
    std::vector<double> dot_max = lam_max;
    std::vector<double> dot_sum(n, 0.0);
    std::size_t count = 0;
    bool consistent = true;
    for_each_state(older, newer, [&](const DualState& s) {
        if (s.t < t_from) {
            return;
        }
        if (s.lam.size() != n || s.lam_dot.size() != n) {
            consistent = false;
            return;
        }
        ++count;
        for (std::size_t i = 0; i < n; ++i) {
            lam_min[i] = std::min(lam_min[i], s.lam[i]);
            lam_max[i] = std::max(lam_max[i], s.lam[i]);
            dot_min[i] = std::min(dot_min[i], s.lam_dot[i]);
            dot_max[i] = std::max(dot_max[i], s.lam_dot[i]);
            dot_sum[i] += s.lam_dot[i];
        }
    });
    if (!consistent || count < 2) {
        return v;
    }

    bool all_over = true;
    bool all_under = true;
    double rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool settled = dot_max[i] - dot_min[i] < rate_tol;
        all_over = all_over && settled && lam_min[i] > announced.lam_hi;
        all_under = all_under && settled && lam_max[i] < announced.lam_lo;
        rate += dot_sum[i] / static_cast<double>(count);
    }
    rate /= static_cast<double>(n);

    if (all_over && rate > 0.0) {
        v.status = DetectorStatus::OverDemandDetected;
    } else if (all_under && rate < 0.0) {
        v.status = DetectorStatus::UnderDemandDetected;
    } else {
        return v;
    }
    v.settled_rate = rate;
    v.estimated_imbalance = static_cast<double>(announced.n) * rate / alpha;
    return v;
}

Diagnostics diagnostics(const DualState& state, const Network& net, const SimConfig& cfg) {
    const std::size_t n = net.size();
    if (state.lam.size() != n) {
        throw ArgumentError("diagnostics: state and network sizes differ");
    }
    Diagnostics d;
    if (n == 0) {
        return d;
    }
    double sum = 0.0;
    for (Price l : state.lam) {
        sum += l;
    }
    d.xi1 = sum / static_cast<double>(n);
    double dev = 0.0;
    for (Price l : state.lam) {
        dev += (l - d.xi1) * (l - d.xi1);
    }
    d.xi_e_norm = std::sqrt(dev) / std::sqrt(static_cast<double>(n));

    d.generation.reserve(n);
    double dual_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const NodeSpec& node = net.node(i);
        const Power x = theta(node, state.lam[i]);
        d.generation.push_back(x);
        d.total_mismatch += node.demand - x;
        dual_sum += node.cost.cost(x) + state.lam[i] * (node.demand - x);
    }
    d.lyapunov = -dual_sum + 0.5 * cfg.k * laplacian_quadratic_form(net.graph(), state.lam);
    return d;
}

std::string describe(const ScenarioEvent& e) {
    std::ostringstream s;
    s << event_name(e.action) << " at t=" << e.t;
    return s.str();
}

void sort_events(std::vector<ScenarioEvent>& events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.t < b.t; });
}

// ---------------------------------------------------------------------------

Simulator::Simulator(Network net, SimConfig cfg, std::vector<Price> init)
    : net_(std::move(net)), cfg_(cfg) {
    validate_config(cfg_);
    net_.require_connected();
    spectrum_ = summarize(net_.graph());
    check_stability(net_, spectrum_.lambda_max, cfg_);
    if (init.empty()) {
        init = default_init(net_.nodes());
    }
    if (init.size() != net_.size()) {
        throw ArgumentError("initial price vector has " + std::to_string(init.size()) +
                            " entries for " + std::to_string(net_.size()) + " nodes");
    }
    state_.lam = std::move(init);
    state_.lam_dot.assign(net_.size(), 0.0);
    if (cfg_.detect) {
        const auto rounds = static_cast<std::size_t>(std::ceil(cfg_.detect_window / cfg_.tau));
        ring_.resize(rounds + 1);
    }
    push_history();
}

Announced Simulator::announced() const {
    const LambdaWindow w = lambda_window(net_.nodes());
    return {w.lo, w.hi, net_.size()};
}

void Simulator::push_history() {
    if (ring_.empty()) {
        return;
    }
    DualState& slot = ring_[ring_head_];
    slot.n = state_.n;
    slot.t = state_.t;
    slot.lam.assign(state_.lam.begin(), state_.lam.end());
    slot.lam_dot.assign(state_.lam_dot.begin(), state_.lam_dot.end());
    ring_head_ = (ring_head_ + 1) % ring_.size();
    ring_count_ = std::min(ring_count_ + 1, ring_.size());
}

void Simulator::step() {
    thread_local std::vector<Price> scratch;
    advance(state_, net_, cfg_, next_, scratch);
    std::swap(state_, next_);
    push_history();
}

Diagnostics Simulator::diagnostics() const { return edp::diagnostics(state_, net_, cfg_); }

InfeasibilityVerdict Simulator::detect() const {
    if (ring_count_ == 0) {
        return {};
    }
    const std::span<const DualState> all(ring_);
    const Announced a = announced();
    if (ring_count_ < ring_.size()) {
        return detect_infeasibility(all.first(ring_count_), {}, a, cfg_.detect_window,
                                    cfg_.rate_tol, cfg_.alpha);
    }
    return detect_infeasibility(all.subspan(ring_head_), all.first(ring_head_), a,
                                cfg_.detect_window, cfg_.rate_tol, cfg_.alpha);
}

void Simulator::apply(const ScenarioEvent& event) {
    const std::string what = describe(event);
    std::vector<NodeSpec> nodes(net_.nodes().begin(), net_.nodes().end());
    std::vector<IdEdge> edges = net_.id_edges();
    std::optional<Price> added_lam;

    auto find_node = [&](NodeId id) -> NodeSpec& {
        const auto it = std::find_if(nodes.begin(), nodes.end(),
                                     [id](const NodeSpec& n) { return n.id == id; });
        if (it == nodes.end()) {
            throw ScenarioError(what + ": unknown node " + std::to_string(id));
        }
        return *it;
    };
    auto has_edge = [&](NodeId a, NodeId b) {
        return std::any_of(edges.begin(), edges.end(), [&](const IdEdge& e) {
            return (e.first == a && e.second == b) || (e.first == b && e.second == a);
        });
    };

    struct Visitor {
        decltype(find_node)& find;
        decltype(has_edge)& edge_exists;
        std::vector<NodeSpec>& nodes;
        std::vector<IdEdge>& edges;
        std::optional<Price>& added_lam;
        const std::string& what;

        void operator()(const SetDemand& e) const { find(e.node).demand = e.demand; }
        void operator()(const ScaleCapacity& e) const {
            NodeSpec& n = find(e.node);
            n.x_hi *= e.x_hi_factor;
            n.x_lo *= e.x_lo_factor;
        }
        void operator()(const SetCost& e) const { find(e.node).cost = e.cost; }
        void operator()(const RemoveNode& e) const {
            find(e.node);
            std::erase_if(nodes, [&](const NodeSpec& n) { return n.id == e.node; });
            std::erase_if(edges, [&](const IdEdge& x) {
                return x.first == e.node || x.second == e.node;
            });
        }
        void operator()(const AddNode& e) const {
            for (const auto& n : nodes) {
                if (n.id == e.spec.id) {
                    throw ScenarioError(what + ": node " + std::to_string(e.spec.id) +
                                        " already exists");
                }
            }
            for (NodeId nb : e.neighbors) {
                find(nb);
            }
            nodes.push_back(e.spec);
            for (NodeId nb : e.neighbors) {
                edges.emplace_back(e.spec.id, nb);
            }
            added_lam = e.lam0 ? *e.lam0 : default_init(e.spec);
        }
        void operator()(const AddEdge& e) const {
            find(e.a);
            find(e.b);
            if (edge_exists(e.a, e.b)) {
                throw ScenarioError(what + ": edge already present");
            }
            edges.emplace_back(e.a, e.b);
        }
        void operator()(const RemoveEdge& e) const {
            if (!edge_exists(e.a, e.b)) {
                throw ScenarioError(what + ": no such edge");
            }
            std::erase_if(edges, [&](const IdEdge& x) {
                return (x.first == e.a && x.second == e.b) || (x.first == e.b && x.second == e.a);
            });
        }
    };
    std::visit(Visitor{find_node, has_edge, nodes, edges, added_lam, what}, event.action);

    Network next;
    try {
        next = Network(std::move(nodes), edges);
    } catch (const ValidationError& e) {
        throw ScenarioError(what + ": " + e.what());
    } catch (const StructuralError& e) {
        throw ScenarioError(what + ": " + e.what());
    }
    if (next.size() == 0 || !is_connected(next.graph())) {
        throw ScenarioError(what + ": event disconnects the communication graph");
    }
    LaplacianSummary spec = summarize(next.graph());
    try {
        check_stability(next, spec.lambda_max, cfg_);
    } catch (const ConfigError& e) {
        throw ConfigError(what + ": " + e.what());
    }

    // Carry prices over by node id; no state is reset.
    DualState carried;
    carried.n = state_.n;
    carried.t = state_.t;
    carried.lam.reserve(next.size());
    carried.lam_dot.reserve(next.size());
    const bool same_ids = next.ids() == net_.ids();
    for (const auto& node : next.nodes()) {
        if (const auto old = net_.find(node.id)) {
            carried.lam.push_back(state_.lam[*old]);
            carried.lam_dot.push_back(state_.lam_dot[*old]);
        } else {
            carried.lam.push_back(added_lam.value_or(default_init(node)));
            carried.lam_dot.push_back(0.0);
        }
    }

    net_ = std::move(next);
    spectrum_ = std::move(spec);
    state_ = std::move(carried);
    if (!same_ids) {
        ring_count_ = 0;
        ring_head_ = 0;
        push_history();
    }
}

// ---------------------------------------------------------------------------

RunResult run(Network net, const SimConfig& cfg, std::span<const ScenarioEvent> events,
              std::vector<Price> init, const RunObserver& observer, bool keep_records) {
    std::vector<ScenarioEvent> sorted(events.begin(), events.end());
    sort_events(sorted);

    Simulator sim(std::move(net), cfg, std::move(init));
    RunResult result;
    const auto total = static_cast<std::int64_t>(std::llround(cfg.t_end / cfg.tau));
    std::size_t next_event = 0;

    auto open_segment = [&](std::string opened_by) {
        SegmentInfo seg;
        seg.index = result.segments.size();
        seg.t_start = sim.state().t;
        seg.t_end = cfg.t_end;
        for (std::size_t e = next_event; e < sorted.size(); ++e) {
            if (sorted[e].t > seg.t_start + kBoundarySlack * cfg.tau) {
                seg.t_end = std::min(sorted[e].t, cfg.t_end);
                break;
            }
        }
        seg.feasibility = classify_feasibility(sim.network().nodes());
        seg.tuning = tune(sim.network().nodes(), sim.spectrum().sigma2, cfg.epsilon,
                          std::max(cfg.k, std::numeric_limits<double>::min()),
                          sim.state().lam);
        seg.opened_by = std::move(opened_by);
        if (observer.on_segment) {
            observer.on_segment(sim, seg);
        }
        result.segments.push_back(std::move(seg));
    };

    auto fire_due_events = [&]() {
        std::string opened;
        const double now = sim.state().t;
        while (next_event < sorted.size() &&
               now + kBoundarySlack * cfg.tau >= sorted[next_event].t) {
            sim.apply(sorted[next_event]);
            opened += (opened.empty() ? "" : "; ") + describe(sorted[next_event]);
            ++next_event;
        }
        return opened;
    };

    // Events at t = 0 shape the first segment.
    std::string opened = fire_due_events();
    open_segment(opened);

    for (std::int64_t n = 0;; ++n) {
        if (n > 0) {
            opened = fire_due_events();
            if (!opened.empty()) {
                open_segment(opened);
            }
        }
        if (n % static_cast<std::int64_t>(cfg.record_every) == 0 || n == total) {
            Record rec;
            rec.segment = result.segments.size() - 1;
            rec.state = sim.state();
            rec.diag = sim.diagnostics();
            if (cfg.detect) {
                rec.verdict = sim.detect();
            }
            if (observer.on_record) {
                observer.on_record(sim, rec);
            }
            if (keep_records) {
                result.records.push_back(std::move(rec));
            }
        }
        if (n >= total) {
            break;
        }
        sim.step();
    }
    return result;
}

}  // namespace edp
