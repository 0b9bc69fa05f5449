#include "edp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "edp/errors.hpp"
#include "edp/tuning.hpp"

namespace edp::cli {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

class CsvWriter final : public TimeSeriesWriter {
public:
    CsvWriter(std::ostream& out, std::vector<NodeId> ids) : out_(out), ids_(std::move(ids)) {
        std::string header = "t";
        for (NodeId id : ids_) header += fmt::format(",lam_{}", id);
        for (NodeId id : ids_) header += fmt::format(",theta_{}", id);
        header += ",total_mismatch,xi1,xi_e_norm,lyapunov,status\n";
        out_ << header;
    }

    void write(const Simulator& sim, const Record& rec) override {
        const Network& net = sim.network();
        line_.clear();
        fmt::format_to(std::back_inserter(line_), "{}", rec.state.t);
        index_.clear();
        for (NodeId id : ids_) index_.push_back(net.find(id));
        for (const auto& i : index_) {
            line_ += ',';
            if (i) fmt::format_to(std::back_inserter(line_), "{}", rec.state.lam[*i]);
        }
        for (const auto& i : index_) {
            line_ += ',';
            if (i) fmt::format_to(std::back_inserter(line_), "{}", rec.diag.generation[*i]);
        }
        fmt::format_to(std::back_inserter(line_), ",{},{},{},{},{}\n", rec.diag.total_mismatch,
                       rec.diag.xi1, rec.diag.xi_e_norm, rec.diag.lyapunov,
                       to_string(rec.verdict.status));
        out_ << line_;
    }

    void flush() override { out_.flush(); }

private:
    std::ostream& out_;
    std::vector<NodeId> ids_;
    std::vector<std::optional<std::size_t>> index_;
    std::string line_;
};

class JsonlWriter final : public TimeSeriesWriter {
public:
    explicit JsonlWriter(std::ostream& out) : out_(out) {}

    void write(const Simulator& sim, const Record& rec) override {
        const Network& net = sim.network();
        line_.clear();
        fmt::format_to(std::back_inserter(line_), "{{\"t\":{},\"ids\":[", rec.state.t);
        for (std::size_t i = 0; i < net.size(); ++i) {
            fmt::format_to(std::back_inserter(line_), "{}{}", i ? "," : "", net.node(i).id);
        }
        line_ += "],\"lam\":[";
        for (std::size_t i = 0; i < net.size(); ++i) {
            fmt::format_to(std::back_inserter(line_), "{}{}", i ? "," : "", rec.state.lam[i]);
        }
        line_ += "],\"theta\":[";
        for (std::size_t i = 0; i < net.size(); ++i) {
            fmt::format_to(std::back_inserter(line_), "{}{}", i ? "," : "",
                           rec.diag.generation[i]);
        }
        fmt::format_to(std::back_inserter(line_),
                       "],\"total_mismatch\":{},\"xi1\":{},\"xi_e_norm\":{},\"lyapunov\":{},"
                       "\"status\":\"{}\"}}\n",
                       rec.diag.total_mismatch, rec.diag.xi1, rec.diag.xi_e_norm,
                       rec.diag.lyapunov, to_string(rec.verdict.status));
        out_ << line_;
    }

    void flush() override { out_.flush(); }

private:
    std::ostream& out_;
    std::string line_;
};

json oracle_json(const DualSolution& s, const std::vector<NodeId>& ids) {
    return json{{"lam_star", s.lam_star},
                {"lam_star_interval",
                 {{"lo", s.lam_star_interval.lo},
                  {"hi", s.lam_star_interval.hi},
                  {"unbounded_below", s.lam_star_interval.unbounded_below},
                  {"unbounded_above", s.lam_star_interval.unbounded_above}}},
                {"degenerate", s.degenerate},
                {"ids", ids},
                {"x_star", s.x_star},
                {"total_cost", s.total_cost},
                {"balance_residual", s.balance_residual}};
}

json tuning_object(const TuningReport& r) {
    return json{{"b_f", r.b_f},
                {"sigma2", r.sigma2},
                {"delta", r.delta},
                {"k_bar", r.k_bar},
                {"M_lambda", r.M_lambda},
                {"epsilon", r.epsilon},
                {"k", r.k},
                {"gain_sufficient", r.gain_sufficient},
                {"init_in_window", r.init_in_window},
                {"lam_lo", r.window.lo},
                {"lam_hi", r.window.hi},
                {"T1", r.times.T1},
                {"T2", r.times.T2},
                {"T", r.times.T},
                {"T_dagger", optional_json(r.times.T_dagger)},
                {"M_o", r.M_o},
                {"M_u", r.M_u},
                {"feasibility", to_string(r.feasibility)}};
}

json segment_json(const SegmentSummary& s) {
    return json{{"kind", "segment"},
                {"index", s.info.index},
                {"t_start", s.info.t_start},
                {"t_end", s.info.t_end},
                {"opened_by", s.info.opened_by},
                {"feasibility", to_string(s.info.feasibility)},
                {"tuning", tuning_object(s.info.tuning)},
                {"oracle", s.oracle ? oracle_json(*s.oracle, s.ids) : json(nullptr)},
                {"max_theta_error", optional_json(s.max_theta_error)},
                {"final_mismatch", s.final_mismatch},
                {"balanced_from", optional_json(s.balanced_from)},
                {"all_above_window", optional_json(s.all_above_window)},
                {"all_below_window", optional_json(s.all_below_window)},
                {"final_status", to_string(s.final_status)}};
}

}  // namespace

std::unique_ptr<TimeSeriesWriter> make_writer(Format format, std::ostream& out,
                                              std::vector<NodeId> ids) {
    if (format == Format::Csv) {
        return std::make_unique<CsvWriter>(out, std::move(ids));
    }
    return std::make_unique<JsonlWriter>(out);
}

std::vector<NodeId> all_ids(const Network& net, std::span<const ScenarioEvent> events) {
    std::set<NodeId> ids;
    for (const auto& n : net.nodes()) ids.insert(n.id);
    for (const auto& e : events) {
        if (const auto* add = std::get_if<AddNode>(&e.action)) ids.insert(add->spec.id);
    }
    return {ids.begin(), ids.end()};
}

std::string tuning_json(const TuningReport& report, int indent) {
    return tuning_object(report).dump(indent);
}

RunSummary execute_run(const Network& net, const SimConfig& cfg,
                       std::span<const ScenarioEvent> events, bool with_oracle,
                       const RunHooks& hooks) {
    RunSummary summary;
    std::optional<SegmentSummary> open;
    DetectorStatus last_status = DetectorStatus::Normal;

    auto close = [&]() {
        if (!open) return;
        if (hooks.summary) *hooks.summary << segment_json(*open).dump() << '\n';
        summary.segments.push_back(std::move(*open));
        open.reset();
        if (hooks.summary) hooks.summary->flush();
        if (hooks.series) hooks.series->flush();
    };

    RunObserver observer;
    observer.on_segment = [&](const Simulator& sim, const SegmentInfo& info) {
        close();
        SegmentSummary s;
        s.info = info;
        s.ids = sim.network().ids();
        if (with_oracle && info.feasibility == FeasibilityClass::Feasible) {
            s.oracle = solve_dual(sim.network().nodes());
        }
        open = std::move(s);
    };
    observer.on_record = [&](const Simulator& sim, const Record& rec) {
        if (hooks.series) hooks.series->write(sim, rec);
        SegmentSummary& s = *open;
        const double t = rec.state.t;
        s.final_mismatch = rec.diag.total_mismatch;
        if (std::abs(rec.diag.total_mismatch) < kBalanceTolerance) {
            if (!s.balanced_from) s.balanced_from = t;
        } else {
            s.balanced_from.reset();
        }
        const LambdaWindow w = s.info.tuning.window;
        const auto& lam = rec.state.lam;
        if (!s.all_above_window &&
            std::all_of(lam.begin(), lam.end(), [&](Price l) { return l > w.hi; })) {
            s.all_above_window = t;
        }
        if (!s.all_below_window &&
            std::all_of(lam.begin(), lam.end(), [&](Price l) { return l < w.lo; })) {
            s.all_below_window = t;
        }
        const double span = s.info.t_end - s.info.t_start;
        const double tail_start = s.info.t_end - kFinalFraction * span - 1e-9 * cfg.tau;
        if (s.oracle && t >= tail_start) {
            Power worst = 0.0;
            for (std::size_t i = 0; i < lam.size(); ++i) {
                worst = std::max(worst, std::abs(rec.diag.generation[i] - s.oracle->x_star[i]));
            }
            s.max_theta_error = std::max(s.max_theta_error.value_or(0.0), worst);
        }
        s.final_status = rec.verdict.status;
        if (rec.verdict.status != last_status) {
            DetectionEvent ev{t, rec.verdict.status, rec.verdict.settled_rate,
                              rec.verdict.estimated_imbalance};
            if (hooks.summary) {
                *hooks.summary << json{{"kind", "detection"},
                                       {"t", ev.t},
                                       {"status", to_string(ev.status)},
                                       {"settled_rate", ev.settled_rate},
                                       {"estimated_imbalance", ev.estimated_imbalance}}
                                      .dump()
                               << '\n';
            }
            summary.detections.push_back(ev);
            last_status = rec.verdict.status;
        }
        if (rec.verdict.status != DetectorStatus::Normal) summary.infeasibility_detected = true;
    };

    (void)run(net, cfg, events, {}, observer, false);
    close();
    if (hooks.summary) {
        *hooks.summary << json{{"kind", "run"},
                               {"segments", summary.segments.size()},
                               {"detections", summary.detections.size()},
                               {"infeasibility_detected", summary.infeasibility_detected}}
                              .dump()
                       << '\n';
        hooks.summary->flush();
    }
    return summary;
}

// ---------------------------------------------------------------------------

namespace {

struct RunFlags {
    std::string network;
    std::string scenario;
    std::optional<double> k;
    double dt = 1e-3;
    double alpha = 1.0;
    double t_end = 25.0;
    std::size_t record_every = 10;
    std::string out = "edp_out";
    bool oracle = false;
    bool tune_only = false;
    std::string format = "csv";
    bool fail_on_infeasible = false;
    double epsilon = 1.0;
};

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ArgumentError("cannot write " + path.string());
    return f;
}

int do_run(const RunFlags& flags, std::ostream& out, std::ostream& err,
           const io::CostRegistry& registry) {
    if (flags.network.empty()) {
        err << "error: --network is required\n";
        return 1;
    }
    const io::NetworkDocument doc = io::load_network(flags.network, registry);
    std::vector<ScenarioEvent> events;
    if (!flags.scenario.empty()) events = io::load_scenario(flags.scenario, registry);

    const Network& net = doc.network;
    SimConfig cfg;
    cfg.tau = flags.dt;
    cfg.alpha = flags.alpha;
    cfg.t_end = flags.t_end;
    cfg.record_every = flags.record_every;
    cfg.epsilon = flags.epsilon;
    if (flags.k) {
        cfg.k = *flags.k;
    } else if (doc.announced.k) {
        cfg.k = *doc.announced.k;
    } else {
        cfg.k = k_bar(net.nodes(), net.graph(), cfg.epsilon);
    }
    validate_config(cfg);

    if (flags.tune_only) {
        // No run, so no known start: bound over any start inside the window.
        const TuningReport report = tune(net.nodes(), net.graph(), cfg.epsilon, cfg.k);
        out << tuning_json(report, 2) << '\n';
        return 0;
    }

    const std::filesystem::path dir(flags.out);
    std::filesystem::create_directories(dir);
    const Format format = flags.format == "jsonl" ? Format::Jsonl : Format::Csv;
    std::ofstream series_file =
        open_output(dir / (format == Format::Csv ? "timeseries.csv" : "timeseries.jsonl"));
    std::ofstream summary_file = open_output(dir / "summary.jsonl");
    auto writer = make_writer(format, series_file, all_ids(net, events));

    const RunSummary summary =
        execute_run(net, cfg, events, flags.oracle, {writer.get(), &summary_file});

    for (const auto& s : summary.segments) {
        out << fmt::format("segment {} [{}, {}) {}: final mismatch {:.6g} MW", s.info.index,
                           s.info.t_start, s.info.t_end, to_string(s.info.feasibility),
                           s.final_mismatch);
        if (s.max_theta_error) out << fmt::format(", oracle error {:.6g} MW", *s.max_theta_error);
        out << '\n';
    }
    for (const auto& d : summary.detections) {
        out << fmt::format("detector {} at t={} (rate {:.6g}, imbalance {:.6g} MW)\n",
                           to_string(d.status), d.t, d.settled_rate, d.estimated_imbalance);
    }
    if (flags.fail_on_infeasible && summary.infeasibility_detected) {
        err << "infeasibility detected\n";
        return 2;
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const io::CostRegistry& registry) {
    CLI::App app{"Distributed dual-gradient economic dispatch simulator", "edp"};
    RunFlags flags;
    app.add_option("--network", flags.network, "Network document (JSON)");
    app.add_option("--scenario", flags.scenario, "Scenario document (JSON)");
    app.add_option("--k", flags.k, "Coupling gain (default: announced, else tuned k_bar)")
        ->check(CLI::PositiveNumber);
    app.add_option("--dt", flags.dt, "Step size in seconds")->capture_default_str();
    app.add_option("--alpha", flags.alpha, "Step scaling factor")->capture_default_str();
    app.add_option("--t-end", flags.t_end, "Simulated horizon in seconds")->capture_default_str();
    app.add_option("--record-every", flags.record_every, "Record every N rounds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--out", flags.out, "Output directory")->capture_default_str();
    app.add_flag("--oracle", flags.oracle, "Compare each segment with the centralized optimum");
    app.add_flag("--tune-only", flags.tune_only, "Print the tuning report and exit");
    app.add_option("--format", flags.format, "Time-series format")
        ->check(CLI::IsMember({"csv", "jsonl"}))
        ->capture_default_str();
    app.add_flag("--fail-on-infeasible", flags.fail_on_infeasible,
                 "Exit 2 when the infeasibility detector fires");
    app.add_option("--epsilon", flags.epsilon, "Accuracy target for tuning (MW)")
        ->capture_default_str();

    std::uint64_t seed = 1;
    std::string surrogate_out;
    auto* surrogate = app.add_subcommand("surrogate", "Write the seeded IEEE-118 surrogate");
    surrogate->add_option("--seed", seed, "Random seed")->capture_default_str();
    surrogate->add_option("--out", surrogate_out, "Output network file")->required();

    std::string scen_network;
    std::string scen_dir;
    auto* scenarios = app.add_subcommand("scenarios", "Write the standard scenario files");
    scenarios->add_option("--network", scen_network, "Network document")->required();
    scenarios->add_option("--out-dir", scen_dir, "Output directory")->required();
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*surrogate) {
            io::save_network(surrogate_out, io::generate_ieee118_surrogate(seed));
            return 0;
        }
        if (*scenarios) {
            const auto doc = io::load_network(scen_network, registry);
            const std::filesystem::path dir(scen_dir);
            std::filesystem::create_directories(dir);
            io::save_scenario(dir / "feasible.json", io::feasible_scenario(doc.network));
            io::save_scenario(dir / "infeasible.json", io::infeasible_scenario(doc.network));
            return 0;
        }
        return do_run(flags, out, err, registry);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace edp::cli
