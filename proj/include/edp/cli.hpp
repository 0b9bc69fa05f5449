#pragma once

// Run orchestration and the command-line front end.

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edp/io.hpp"
#include "edp/oracle.hpp"
#include "edp/simulator.hpp"

namespace edp::cli {

/// Mismatch below which a segment counts as balanced (MW).
inline constexpr Power kBalanceTolerance = 1.0;
/// Fraction of each segment, counted from its end, used for the oracle error.
inline constexpr double kFinalFraction = 0.1;

struct DetectionEvent {
    double t = 0.0;
    DetectorStatus status = DetectorStatus::Normal;
    double settled_rate = 0.0;
    Power estimated_imbalance = 0.0;
};

struct SegmentSummary {
    SegmentInfo info;
    std::vector<NodeId> ids;
    /// Present when the oracle was requested and the segment is feasible.
    std::optional<DualSolution> oracle;
    /// max_i |theta_i - x_i*| over records in the final 10% of the segment.
    std::optional<Power> max_theta_error;
    Power final_mismatch = 0.0;
    /// Earliest record time after which |mismatch| < kBalanceTolerance holds
    /// for the rest of the segment.
    std::optional<double> balanced_from;
    /// First record with every price above (below) the segment's window.
    std::optional<double> all_above_window;
    std::optional<double> all_below_window;
    DetectorStatus final_status = DetectorStatus::Normal;
};

struct RunSummary {
    std::vector<SegmentSummary> segments;
    std::vector<DetectionEvent> detections;
    bool infeasibility_detected = false;
};

enum class Format { Csv, Jsonl };

/// Row sink for the time series.
class TimeSeriesWriter {
public:
    virtual ~TimeSeriesWriter() = default;
    virtual void write(const Simulator& sim, const Record& rec) = 0;
    virtual void flush() = 0;
};

/// Columns: t, lam_<id>..., theta_<id>..., total_mismatch, xi1, xi_e_norm,
/// lyapunov, status. `ids` is every id that appears during the run, ascending;
/// cells of absent nodes are empty (CSV) or null (JSONL).
[[nodiscard]] std::unique_ptr<TimeSeriesWriter> make_writer(Format format, std::ostream& out,
                                                            std::vector<NodeId> ids);

/// Ids present at the start plus every id an add_node event introduces.
[[nodiscard]] std::vector<NodeId> all_ids(const Network& net,
                                          std::span<const ScenarioEvent> events);

struct RunHooks {
    TimeSeriesWriter* series = nullptr;
    /// Summary lines (JSON), appended at each segment close and detection.
    std::ostream* summary = nullptr;
};

[[nodiscard]] RunSummary execute_run(const Network& net, const SimConfig& cfg,
                                     std::span<const ScenarioEvent> events, bool with_oracle,
                                     const RunHooks& hooks = {});

/// JSON text of a tuning report (one object).
[[nodiscard]] std::string tuning_json(const TuningReport& report, int indent = -1);

/// Exit status: 0 success, 1 usage/configuration/validation error, 2 when
/// --fail-on-infeasible is set and the detector fired.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const io::CostRegistry& registry = {});

}  // namespace edp::cli
