#pragma once

// Network and scenario documents (JSON), the seeded IEEE-118-shaped surrogate,
// and the standard scenario builders.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edp/network.hpp"
#include "edp/simulator.hpp"

namespace edp::io {

/// Optional public constants shipped with a network file.
struct AnnouncedBlock {
    std::optional<double> k;
    std::optional<Price> lam_lo;
    std::optional<Price> lam_hi;
    std::optional<std::size_t> n;
};

struct NetworkDocument {
    Network network;
    AnnouncedBlock announced;
};

/// Named custom cost models a document may reference as {"custom": "<name>"}.
using CostRegistry = std::map<std::string, CostModel, std::less<>>;

/// Throws ParseError (line/column or field path) and ValidationError (names
/// the offending node or edge). Disconnected graphs are rejected.
[[nodiscard]] NetworkDocument parse_network(const std::string& text,
                                            const CostRegistry& registry = {});
[[nodiscard]] NetworkDocument load_network(const std::filesystem::path& path,
                                           const CostRegistry& registry = {});
[[nodiscard]] std::string write_network(const NetworkDocument& doc);
void save_network(const std::filesystem::path& path, const NetworkDocument& doc);

/// Events come back sorted by time (stable for ties).
[[nodiscard]] std::vector<ScenarioEvent> parse_scenario(const std::string& text,
                                                        const CostRegistry& registry = {});
[[nodiscard]] std::vector<ScenarioEvent> load_scenario(const std::filesystem::path& path,
                                                       const CostRegistry& registry = {});
[[nodiscard]] std::string write_scenario(const std::vector<ScenarioEvent>& events);
void save_scenario(const std::filesystem::path& path, const std::vector<ScenarioEvent>& events);

/// Aggregates the surrogate is pinned to.
struct Ieee118Shape {
    static constexpr std::size_t kNodes = 118;
    static constexpr std::size_t kGenerators = 54;
    static constexpr std::size_t kLoads = 91;
    static constexpr std::size_t kBranches = 186;
    static constexpr Power kTotalDemand = 3733.07;
    static constexpr Power kTotalCapacity = 7220.0;
    static constexpr Power kMaxDemand = 277.0;
};

/// Nodes that the standard topology scenario takes offline.
inline constexpr NodeId kOutageNodes[] = {10, 26, 65, 99};
/// Nodes the standard topology scenario brings back.
inline constexpr NodeId kRestoredNodes[] = {10, 99};

/// Environment variable that may point at a real IEEE-118 network document.
inline constexpr const char* kIeee118Env = "EDP_IEEE118_FILE";

/// Deterministic surrogate with the published IEEE-118 aggregates. When
/// EDP_IEEE118_FILE names a readable file, that document is loaded and checked
/// against the same aggregates instead.
[[nodiscard]] NetworkDocument generate_ieee118_surrogate(std::uint64_t seed);

/// Throws ValidationError when `doc` misses one of the published aggregates.
void check_ieee118_aggregates(const NetworkDocument& doc);

/// Four-stage on-line change scenario: capacity cut on the ten lowest-id
/// generators (t=5), +40% load on the ten lowest-id loads (t=10), outage of
/// kOutageNodes (t=15), restoration of kRestoredNodes (t=20).
[[nodiscard]] std::vector<ScenarioEvent> feasible_scenario(const Network& net);

/// Node 1 demand +4500 MW at t=5, restored at t=15.
[[nodiscard]] std::vector<ScenarioEvent> infeasible_scenario(const Network& net);

}  // namespace edp::io
