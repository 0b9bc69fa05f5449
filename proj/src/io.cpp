#include "edp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "edp/errors.hpp"

namespace edp::io {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open " + path.string());
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    out << text;
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        // Drop the library's own "[json.exception...] parse error at ..." prefix.
        std::string msg = e.what();
        if (const auto at = msg.find("column"); at != std::string::npos) {
            if (const auto colon = msg.find(": ", at); colon != std::string::npos) {
                msg = msg.substr(colon + 2);
            }
        }
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col), msg);
    }
}

// Field access with a path for error messages.
const json& field(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object()) {
        throw ParseError(path, "expected an object");
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(path + "." + std::string(key), "missing field");
    }
    return *it;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) {
        throw ParseError(path, "expected a number");
    }
    return v.get<double>();
}

double number_field(const json& obj, std::string_view key, const std::string& path) {
    return number(field(obj, key, path), path + "." + std::string(key));
}

std::optional<double> optional_number(const json& obj, std::string_view key,
                                      const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    return number(*it, path + "." + std::string(key));
}

NodeId id_value(const json& v, const std::string& path) {
    if (!v.is_number_integer()) {
        throw ParseError(path, "expected an integer node id");
    }
    return v.get<NodeId>();
}

const json& array_field(const json& obj, std::string_view key, const std::string& path) {
    const json& v = field(obj, key, path);
    if (!v.is_array()) {
        throw ParseError(path + "." + std::string(key), "expected an array");
    }
    return v;
}

CostModel parse_cost(const json& v, const std::string& path, const CostRegistry& registry,
                     NodeId id) {
    if (!v.is_object()) {
        throw ParseError(path, "expected a cost object");
    }
    if (const auto it = v.find("custom"); it != v.end()) {
        if (!it->is_string()) {
            throw ParseError(path + ".custom", "expected a cost model name");
        }
        const auto name = it->get<std::string>();
        const auto found = registry.find(name);
        if (found == registry.end()) {
            throw ValidationError("node " + std::to_string(id) + ": unknown custom cost '" +
                                  name + "'");
        }
        return found->second;
    }
    const double a = v.contains("a") ? number_field(v, "a", path) : 0.0;
    const double b = number_field(v, "b", path);
    const double c = number_field(v, "c", path);
    if (!(c > 0.0)) {
        throw ValidationError("node " + std::to_string(id) +
                              ": cost must be strictly convex (c > 0), got c = " +
                              std::to_string(c));
    }
    return CostModel::quadratic(a, b, c);
}

NodeSpec parse_node(const json& v, const std::string& path, const CostRegistry& registry) {
    NodeSpec n;
    n.id = id_value(field(v, "id", path), path + ".id");
    n.cost = parse_cost(field(v, "cost", path), path + ".cost", registry, n.id);
    n.demand = number_field(v, "d", path);
    n.x_lo = number_field(v, "x_lo", path);
    n.x_hi = number_field(v, "x_hi", path);
    return n;
}

json cost_json(const CostModel& c) {
    if (const auto* q = c.as_quadratic()) {
        return json{{"a", q->a}, {"b", q->b}, {"c", q->c}};
    }
    return json{{"custom", c.as_custom()->name}};
}

json node_json(const NodeSpec& n) {
    return json{{"id", n.id}, {"cost", cost_json(n.cost)}, {"d", n.demand},
                {"x_lo", n.x_lo}, {"x_hi", n.x_hi}};
}

// Deterministic uniform draws from the raw 64-bit engine output; the standard
// distributions are implementation-defined.
class Draw {
public:
    explicit Draw(std::uint64_t seed) : engine_(seed) {}
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::size_t below(std::size_t n) {
        return static_cast<std::size_t>(unit() * static_cast<double>(n));
    }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace

// ---------------------------------------------------------------------------

NetworkDocument parse_network(const std::string& text, const CostRegistry& registry) {
    const json root = parse_json(text);
    const json& nodes_j = array_field(root, "nodes", "$");
    std::vector<NodeSpec> nodes;
    nodes.reserve(nodes_j.size());
    for (std::size_t i = 0; i < nodes_j.size(); ++i) {
        nodes.push_back(parse_node(nodes_j[i], "$.nodes[" + std::to_string(i) + "]", registry));
    }
    const json& edges_j = array_field(root, "edges", "$");
    std::vector<IdEdge> edges;
    edges.reserve(edges_j.size());
    for (std::size_t i = 0; i < edges_j.size(); ++i) {
        const std::string p = "$.edges[" + std::to_string(i) + "]";
        const json& e = edges_j[i];
        if (!e.is_array() || e.size() != 2) {
            throw ParseError(p, "expected a [from, to] pair");
        }
        edges.emplace_back(id_value(e[0], p + "[0]"), id_value(e[1], p + "[1]"));
    }

    NetworkDocument doc;
    try {
        doc.network = Network(std::move(nodes), edges);
    } catch (const StructuralError& e) {
        throw ValidationError(e.what());
    }
    if (doc.network.size() == 0) {
        throw ValidationError("network has no nodes");
    }
    if (!is_connected(doc.network.graph())) {
        throw ValidationError("communication graph is disconnected");
    }

    if (const auto it = root.find("announced"); it != root.end() && !it->is_null()) {
        const std::string p = "$.announced";
        if (!it->is_object()) {
            throw ParseError(p, "expected an object");
        }
        doc.announced.k = optional_number(*it, "k", p);
        doc.announced.lam_lo = optional_number(*it, "lam_lo", p);
        doc.announced.lam_hi = optional_number(*it, "lam_hi", p);
        if (const auto n = it->find("N"); n != it->end() && !n->is_null()) {
            if (!n->is_number_unsigned()) {
                throw ParseError(p + ".N", "expected a nonnegative integer");
            }
            doc.announced.n = n->get<std::size_t>();
        }
    }
    return doc;
}

NetworkDocument load_network(const std::filesystem::path& path, const CostRegistry& registry) {
    try {
        return parse_network(read_file(path), registry);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.locus(),
                         std::string(e.what()).substr(e.locus().size() + 2));
    }
}

std::string write_network(const NetworkDocument& doc) {
    json root;
    root["nodes"] = json::array();
    for (const auto& n : doc.network.nodes()) {
        root["nodes"].push_back(node_json(n));
    }
    root["edges"] = json::array();
    for (const auto& [a, b] : doc.network.id_edges()) {
        root["edges"].push_back(json::array({a, b}));
    }
    const auto& an = doc.announced;
    if (an.k || an.lam_lo || an.lam_hi || an.n) {
        json a = json::object();
        if (an.k) a["k"] = *an.k;
        if (an.lam_lo) a["lam_lo"] = *an.lam_lo;
        if (an.lam_hi) a["lam_hi"] = *an.lam_hi;
        if (an.n) a["N"] = *an.n;
        root["announced"] = a;
    }
    return root.dump(2) + "\n";
}

void save_network(const std::filesystem::path& path, const NetworkDocument& doc) {
    write_file(path, write_network(doc));
}

// ---------------------------------------------------------------------------

std::vector<ScenarioEvent> parse_scenario(const std::string& text, const CostRegistry& registry) {
    const json root = parse_json(text);
    const json& events_j = array_field(root, "events", "$");
    std::vector<ScenarioEvent> events;
    for (std::size_t i = 0; i < events_j.size(); ++i) {
        const std::string p = "$.events[" + std::to_string(i) + "]";
        const json& e = events_j[i];
        ScenarioEvent ev;
        ev.t = number_field(e, "t", p);
        if (!(ev.t >= 0.0)) {
            throw ValidationError(p + ": event time must be nonnegative");
        }
        const json& type_j = field(e, "type", p);
        if (!type_j.is_string()) {
            throw ParseError(p + ".type", "expected a string");
        }
        const auto type = type_j.get<std::string>();
        if (type == "set_demand") {
            ev.action = SetDemand{id_value(field(e, "node", p), p + ".node"),
                                  number_field(e, "demand", p)};
        } else if (type == "scale_capacity") {
            ScaleCapacity s;
            s.node = id_value(field(e, "node", p), p + ".node");
            s.x_hi_factor = optional_number(e, "x_hi_factor", p).value_or(1.0);
            s.x_lo_factor = optional_number(e, "x_lo_factor", p).value_or(1.0);
            ev.action = s;
        } else if (type == "set_cost") {
            const NodeId id = id_value(field(e, "node", p), p + ".node");
            ev.action = SetCost{id, parse_cost(field(e, "cost", p), p + ".cost", registry, id)};
        } else if (type == "remove_node") {
            ev.action = RemoveNode{id_value(field(e, "node", p), p + ".node")};
        } else if (type == "add_node") {
            AddNode a;
            a.spec = parse_node(field(e, "spec", p), p + ".spec", registry);
            a.lam0 = optional_number(e, "lam0", p);
            if (e.contains("neighbors")) {
                const json& nb = array_field(e, "neighbors", p);
                for (std::size_t k = 0; k < nb.size(); ++k) {
                    a.neighbors.push_back(
                        id_value(nb[k], p + ".neighbors[" + std::to_string(k) + "]"));
                }
            }
            ev.action = std::move(a);
        } else if (type == "add_edge" || type == "remove_edge") {
            const NodeId a = id_value(field(e, "a", p), p + ".a");
            const NodeId b = id_value(field(e, "b", p), p + ".b");
            if (type == "add_edge") {
                ev.action = AddEdge{a, b};
            } else {
                ev.action = RemoveEdge{a, b};
            }
        } else {
            throw ParseError(p + ".type", "unknown event type '" + type + "'");
        }
        events.push_back(std::move(ev));
    }
    sort_events(events);
    return events;
}

std::vector<ScenarioEvent> load_scenario(const std::filesystem::path& path,
                                         const CostRegistry& registry) {
    return parse_scenario(read_file(path), registry);
}

std::string write_scenario(const std::vector<ScenarioEvent>& events) {
    json arr = json::array();
    for (const auto& ev : events) {
        json e;
        e["t"] = ev.t;
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, SetDemand>) {
                    e["type"] = "set_demand";
                    e["node"] = a.node;
                    e["demand"] = a.demand;
                } else if constexpr (std::is_same_v<T, ScaleCapacity>) {
                    e["type"] = "scale_capacity";
                    e["node"] = a.node;
                    e["x_hi_factor"] = a.x_hi_factor;
                    e["x_lo_factor"] = a.x_lo_factor;
                } else if constexpr (std::is_same_v<T, SetCost>) {
                    e["type"] = "set_cost";
                    e["node"] = a.node;
                    e["cost"] = cost_json(a.cost);
                } else if constexpr (std::is_same_v<T, RemoveNode>) {
                    e["type"] = "remove_node";
                    e["node"] = a.node;
                } else if constexpr (std::is_same_v<T, AddNode>) {
                    e["type"] = "add_node";
                    e["spec"] = node_json(a.spec);
                    if (a.lam0) {
                        e["lam0"] = *a.lam0;
                    }
                    e["neighbors"] = a.neighbors;
                } else if constexpr (std::is_same_v<T, AddEdge>) {
                    e["type"] = "add_edge";
                    e["a"] = a.a;
                    e["b"] = a.b;
                } else {
                    e["type"] = "remove_edge";
                    e["a"] = a.a;
                    e["b"] = a.b;
                }
            },
            ev.action);
        arr.push_back(std::move(e));
    }
    return json{{"events", arr}}.dump(2) + "\n";
}

void save_scenario(const std::filesystem::path& path, const std::vector<ScenarioEvent>& events) {
    write_file(path, write_scenario(events));
}

// ---------------------------------------------------------------------------

void check_ieee118_aggregates(const NetworkDocument& doc) {
    const Network& net = doc.network;
    const auto nodes = net.nodes();
    const std::size_t gens = static_cast<std::size_t>(std::count_if(
        nodes.begin(), nodes.end(), [](const NodeSpec& n) { return n.has_range(); }));
    const std::size_t loads = static_cast<std::size_t>(std::count_if(
        nodes.begin(), nodes.end(), [](const NodeSpec& n) { return n.demand > 0.0; }));
    const Totals t = totals(nodes);
    std::ostringstream err;
    if (net.size() != Ieee118Shape::kNodes) err << " nodes=" << net.size();
    if (gens != Ieee118Shape::kGenerators) err << " generators=" << gens;
    if (loads != Ieee118Shape::kLoads) err << " loads=" << loads;
    if (net.graph().edges().size() != Ieee118Shape::kBranches)
        err << " branches=" << net.graph().edges().size();
    if (std::abs(t.demand - Ieee118Shape::kTotalDemand) > 1e-6) err << " total_demand=" << t.demand;
    if (std::abs(t.x_hi - Ieee118Shape::kTotalCapacity) > 1e-6) err << " total_capacity=" << t.x_hi;
    if (!is_connected(net.graph())) err << " disconnected";
    if (!err.str().empty()) {
        throw ValidationError("IEEE-118 aggregates not met:" + err.str());
    }
}

NetworkDocument generate_ieee118_surrogate(std::uint64_t seed) {
    if (const char* env = std::getenv(kIeee118Env); env != nullptr && *env != '\0') {
        if (std::filesystem::exists(env)) {
            NetworkDocument doc = load_network(env);
            check_ieee118_aggregates(doc);
            return doc;
        }
    }

    using S = Ieee118Shape;
    Draw draw(seed);
    const std::size_t n = S::kNodes;
    const std::set<NodeId> outage(std::begin(kOutageNodes), std::end(kOutageNodes));

    // Generators: the outage nodes plus a random pick of the rest.
    std::vector<NodeId> others;
    for (NodeId id = 1; id <= static_cast<NodeId>(n); ++id) {
        if (!outage.count(id)) {
            others.push_back(id);
        }
    }
    draw.shuffle(others);
    std::set<NodeId> generators(outage.begin(), outage.end());
    for (std::size_t i = 0; generators.size() < S::kGenerators; ++i) {
        generators.insert(others[i]);
    }
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), 1);
    std::vector<NodeId> shuffled = all;
    draw.shuffle(shuffled);
    const std::set<NodeId> loads(shuffled.begin(), shuffled.begin() + S::kLoads);

    std::vector<NodeSpec> nodes;
    nodes.reserve(n);
    double cap_sum = 0.0;
    double load_sum = 0.0;
    for (NodeId id : all) {
        NodeSpec node;
        node.id = id;
        if (generators.count(id)) {
            node.cost = CostModel::quadratic(draw.uniform(6.78, 74.33),
                                             draw.uniform(8.3391, 37.6968),
                                             draw.uniform(0.0024, 0.0697));
            node.x_hi = draw.uniform(0.3, 1.0);
            cap_sum += node.x_hi;
        } else {
            // Customer: any strictly convex cost with J(0) = 0.
            node.cost = CostModel::quadratic(0.0, 0.0, 1.0);
        }
        if (loads.count(id)) {
            node.demand = draw.uniform(0.05, 1.0);
            load_sum += node.demand;
        }
        nodes.push_back(std::move(node));
    }
    // Rescale to the published totals; the last touched entry absorbs rounding.
    NodeSpec* last_gen = nullptr;
    NodeSpec* last_load = nullptr;
    double cap_acc = 0.0;
    double load_acc = 0.0;
    for (auto& node : nodes) {
        if (node.x_hi > 0.0) {
            node.x_hi *= S::kTotalCapacity / cap_sum;
            cap_acc += node.x_hi;
            last_gen = &node;
        }
        if (node.demand > 0.0) {
            node.demand *= S::kTotalDemand / load_sum;
            load_acc += node.demand;
            last_load = &node;
        }
    }
    last_gen->x_hi += S::kTotalCapacity - cap_acc;
    last_load->demand += S::kTotalDemand - load_acc;

    // Topology: a random recursive tree over the non-outage nodes keeps them
    // connected when the outage nodes drop out. Every edge respects
    // deg(u) + deg(v) <= 8, which bounds the Laplacian spectral radius by 8.
    constexpr std::size_t kDegreeSum = 8;
    std::vector<std::size_t> degree(n + 1, 0);
    std::set<IdEdge> edges;
    auto fits = [&](NodeId u, NodeId v) {
        if (u == v || edges.count({std::min(u, v), std::max(u, v)})) {
            return false;
        }
        if (degree[u] + degree[v] + 2 > kDegreeSum) {
            return false;
        }
        for (const auto& [a, b] : edges) {
            if (a == u || b == u) {
                if (degree[u] + 1 + degree[a == u ? b : a] > kDegreeSum) return false;
            }
            if (a == v || b == v) {
                if (degree[v] + 1 + degree[a == v ? b : a] > kDegreeSum) return false;
            }
        }
        return true;
    };
    auto connect = [&](NodeId u, NodeId v) {
        edges.insert({std::min(u, v), std::max(u, v)});
        ++degree[u];
        ++degree[v];
    };

    std::vector<NodeId> core = others;  // already shuffled
    for (std::size_t i = 1; i < core.size(); ++i) {
        for (std::size_t tries = 0;; ++tries) {
            if (tries > 100000) {
                throw ValidationError("surrogate: cannot grow spanning tree");
            }
            const NodeId parent = core[draw.below(i)];
            if (fits(core[i], parent)) {
                connect(core[i], parent);
                break;
            }
        }
    }
    for (NodeId id : kOutageNodes) {
        for (int links = 0; links < 2;) {
            const NodeId peer = core[draw.below(core.size())];
            if (fits(id, peer)) {
                connect(id, peer);
                ++links;
            }
        }
    }
    for (std::size_t tries = 0; edges.size() < S::kBranches; ++tries) {
        if (tries > 1000000) {
            throw ValidationError("surrogate: cannot place branches under the degree rule");
        }
        const NodeId u = all[draw.below(n)];
        const NodeId v = all[draw.below(n)];
        if (fits(u, v)) {
            connect(u, v);
        }
    }

    std::vector<IdEdge> edge_list(edges.begin(), edges.end());
    NetworkDocument doc;
    doc.network = Network(std::move(nodes), edge_list);
    const LambdaWindow w = lambda_window(doc.network.nodes());
    doc.announced.k = 200.0;
    doc.announced.lam_lo = w.lo;
    doc.announced.lam_hi = w.hi;
    doc.announced.n = n;
    check_ieee118_aggregates(doc);
    return doc;
}

std::vector<ScenarioEvent> feasible_scenario(const Network& net) {
    std::vector<ScenarioEvent> events;
    std::vector<NodeSpec> nodes(net.nodes().begin(), net.nodes().end());  // ascending ids

    int picked = 0;
    for (auto& node : nodes) {
        if (node.has_range() && picked < 10) {
            events.push_back({5.0, ScaleCapacity{node.id, 0.8, 1.0}});
            node.x_hi *= 0.8;
            ++picked;
        }
    }
    picked = 0;
    for (auto& node : nodes) {
        if (node.demand > 0.0 && picked < 10) {
            events.push_back({10.0, SetDemand{node.id, node.demand * 1.4}});
            node.demand *= 1.4;
            ++picked;
        }
    }
    const std::set<NodeId> outage(std::begin(kOutageNodes), std::end(kOutageNodes));
    for (NodeId id : kOutageNodes) {
        if (!net.find(id)) {
            throw ArgumentError("feasible_scenario: network lacks node " + std::to_string(id));
        }
        events.push_back({15.0, RemoveNode{id}});
    }

    // Restore with the spec held at outage time and the links to nodes that
    // are back online.
    std::set<NodeId> online;
    for (const auto& node : nodes) {
        if (!outage.count(node.id)) {
            online.insert(node.id);
        }
    }
    const auto id_edges = net.id_edges();
    for (NodeId id : kRestoredNodes) {
        AddNode add;
        add.spec = *std::find_if(nodes.begin(), nodes.end(),
                                 [id](const NodeSpec& n) { return n.id == id; });
        for (const auto& [a, b] : id_edges) {
            const NodeId other = a == id ? b : (b == id ? a : 0);
            if (other != 0 && online.count(other)) {
                add.neighbors.push_back(other);
            }
        }
        std::sort(add.neighbors.begin(), add.neighbors.end());
        events.push_back({20.0, std::move(add)});
        online.insert(id);
    }
    return events;
}

std::vector<ScenarioEvent> infeasible_scenario(const Network& net) {
    const auto idx = net.find(1);
    if (!idx) {
        throw ArgumentError("infeasible_scenario: network lacks node 1");
    }
    const Power d = net.node(*idx).demand;
    return {{5.0, SetDemand{1, d + 4500.0}}, {15.0, SetDemand{1, d}}};
}

}  // namespace edp::io
