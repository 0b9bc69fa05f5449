// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "edp/cli.hpp"
#include "edp/io.hpp"
#include "edp/oracle.hpp"
#include "edp/simulator.hpp"
#include "edp/tuning.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace edp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Criterion 1
constexpr int kOracleInstances = 100;
constexpr double kOracleGrid = 1e-3;
constexpr double kOracleCostTol = 1e-2;
constexpr double kKktTol = 1e-6;
constexpr double kBalanceTol = 1e-6;
constexpr double kOracleBudget = 60;
// Criteria 2, 3, 6
constexpr int kDeskInstances = 10;
constexpr std::size_t kDeskMaxN = 20;
constexpr double kDeskEdgeProb = 0.4;
constexpr double kDeskGains[] = {1, 10, 100};
constexpr double kDeskHorizon = 50;
constexpr double kMismatchFraction = 1e-3;
constexpr double kRateTol = 1e-4;
constexpr double kDeskBudget = 120;
constexpr double kEpsilon = 1;
constexpr double kLyapunovSlack = 1e-9;
// Criteria 4, 5
constexpr std::uint64_t kSurrogateSeed = 1;
constexpr double kSurrogateGain = 200;
constexpr double kSurrogateTau = 1e-3;
constexpr double kFeasibleHorizon = 25;
constexpr double kInfeasibleHorizon = 30;
constexpr double kMwTol = 1;
constexpr double kPublishedRate = 8.5853;
constexpr double kRateRelTol = 1e-3;
constexpr double kImbalance = 1013.07;
constexpr double kImbalanceTol = 0.2;
constexpr double kOverloadStart = 5;
constexpr double kOverloadEnd = 15;
constexpr double kSurrogateBudget = 300;
// Criterion 7
constexpr int kClassSamples = 100;
constexpr double kSettleTol = 1e-9;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] %d %s: %s (%.2f s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "edp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0 && code != 2) std::fprintf(stderr, "%s", err.str().c_str());
    return code;
}

std::vector<json> summary_lines(const fs::path& p) {
    std::vector<json> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) out.push_back(json::parse(line));
    return out;
}

std::vector<json> of_kind(const std::vector<json>& lines, const std::string& kind) {
    std::vector<json> out;
    for (const auto& j : lines)
        if (j["kind"] == kind) out.push_back(j);
    return out;
}

// ---------------------------------------------------------------------------

void oracle_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    test::Rng rng(1001);
    test::InstanceShape shape;
    shape.x_hi_lo = 0.5;
    shape.x_hi_hi = 5.0;
    shape.fill_lo = 0.05;
    shape.fill_hi = 0.95;
    double worst_cost = 0, worst_kkt = 0, worst_bal = 0;
    for (int i = 0; i < kOracleInstances; ++i) {
        const auto nodes = test::random_feasible_nodes(rng, 2 + rng.below(2), shape);
        const DualSolution s = solve_dual(nodes);
        const GridSolution g = brute_force_oracle(nodes, kOracleGrid);
        worst_cost = std::max(worst_cost, std::abs(s.total_cost - g.cost_best));
        worst_kkt = std::max(worst_kkt, test::kkt_violation(nodes, s));
        double bal = 0;
        for (std::size_t k = 0; k < nodes.size(); ++k) bal += s.x_star[k] - nodes[k].demand;
        worst_bal = std::max(worst_bal, std::abs(bal));
    }
    const double secs = seconds_since(t0);
    report(1, "oracle correctness",
           worst_cost <= kOracleCostTol && worst_kkt <= kKktTol && worst_bal <= kBalanceTol &&
               secs <= kOracleBudget,
           fmt::format("{} instances, max |cost diff| {:.3g}, max KKT {:.3g}, max balance {:.3g}",
                       kOracleInstances, worst_cost, worst_kkt, worst_bal),
           secs);
}

struct DeskInstance {
    Network net;
    double lambda_max;
    double sigma2;
};

std::vector<DeskInstance> desk_instances() {
    test::Rng rng(2002);
    std::vector<DeskInstance> out;
    for (int i = 0; i < kDeskInstances; ++i) {
        const std::size_t n = 2 + rng.below(kDeskMaxN - 1);
        Network net = test::random_network(rng, n, kDeskEdgeProb);
        const auto s = summarize(net.graph());
        out.push_back({std::move(net), s.lambda_max, s.sigma2});
    }
    return out;
}

void balance_and_lyapunov(const std::vector<DeskInstance>& inst) {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_mis = 0, worst_rate = 0, worst_rise = -INFINITY;
    int runs = 0;
    for (const auto& in : inst) {
        for (double k : kDeskGains) {
            SimConfig cfg;
            cfg.k = k;
            cfg.tau = test::half_guard_tau(in.net, k, in.lambda_max);
            cfg.detect = false;
            Simulator sim(in.net, cfg);
            const auto rounds = static_cast<std::int64_t>(std::llround(kDeskHorizon / cfg.tau));
            double y = sim.diagnostics().lyapunov;
            for (std::int64_t r = 0; r < rounds; ++r) {
                sim.step();
                const double next = sim.diagnostics().lyapunov;
                worst_rise = std::max(worst_rise, next - y);
                y = next;
            }
            const Totals tot = totals(in.net.nodes());
            worst_mis = std::max(worst_mis,
                                 std::abs(sim.diagnostics().total_mismatch) / tot.demand);
            for (double v : sim.state().lam_dot) worst_rate = std::max(worst_rate, std::abs(v));
            ++runs;
        }
    }
    const double secs = seconds_since(t0);
    report(2, "balance and stationarity at desk scale",
           worst_mis <= kMismatchFraction && worst_rate <= kRateTol && secs <= kDeskBudget,
           fmt::format("{} runs, max |mismatch|/sum d {:.3g}, max |lam_dot| {:.3g}", runs,
                       worst_mis, worst_rate),
           secs);
    report(6, "Lyapunov descent", worst_rise <= kLyapunovSlack,
           fmt::format("{} runs, largest per-step increase {:.3g}", runs, worst_rise), secs);
}

void settled_accuracy(const std::vector<DeskInstance>& inst) {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    double longest_T = 0;
    for (const auto& in : inst) {
        const auto nodes = in.net.nodes();
        const double kbar = k_bar(nodes, in.sigma2, kEpsilon);
        const TuningReport rep = tune(nodes, in.sigma2, kEpsilon, kbar, default_init(nodes));
        const double T = rep.times.T;
        longest_T = std::max(longest_T, T);
        const DualSolution opt = solve_dual(nodes);
        SimConfig cfg;
        cfg.k = kbar;
        cfg.tau = test::half_guard_tau(in.net, kbar, in.lambda_max);
        cfg.detect = false;
        Simulator sim(in.net, cfg);
        const double horizon = T + std::max(5.0, 0.25 * T);
        const auto rounds = static_cast<std::int64_t>(std::ceil(horizon / cfg.tau));
        for (std::int64_t r = 0; r < rounds; ++r) {
            sim.step();
            if (sim.state().t < T) continue;
            const auto& lam = sim.state().lam;
            for (std::size_t i = 0; i < lam.size(); ++i) {
                worst = std::max(worst, std::abs(theta(nodes[i], lam[i]) - opt.x_star[i]));
            }
        }
    }
    const double secs = seconds_since(t0);
    report(3, "accuracy after the tuned settling time",
           worst <= kEpsilon && secs <= kDeskBudget,
           fmt::format("{} runs at k = k_bar, max |theta - x*| after T(k) {:.3g} MW "
                       "(longest T {:.1f} s)",
                       inst.size(), worst, longest_T),
           secs);
}

void surrogate_feasible(const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path net = dir / "surrogate.json";
    io::save_network(net, io::generate_ieee118_surrogate(kSurrogateSeed));
    const auto doc = io::load_network(net);
    io::save_scenario(dir / "feasible.json", io::feasible_scenario(doc.network));
    const int code =
        cli({"--network", net.string(), "--scenario", (dir / "feasible.json").string(), "--k",
             fmt::format("{}", kSurrogateGain), "--dt", fmt::format("{}", kSurrogateTau),
             "--t-end", fmt::format("{}", kFeasibleHorizon), "--oracle", "--out",
             (dir / "feasible").string()});
    const double secs = seconds_since(t0);
    if (code != 0) {
        report(4, "surrogate feasible run", false, fmt::format("cli exit {}", code), secs);
        return;
    }
    const auto segs = of_kind(summary_lines(dir / "feasible" / "summary.jsonl"), "segment");
    bool balanced = segs.size() == 5;
    std::string times;
    for (std::size_t i = 1; i < segs.size(); ++i) {
        const auto& s = segs[i];
        const bool ok = s["balanced_from"].is_number() &&
                        s["balanced_from"].get<double>() < s["t_end"].get<double>();
        balanced = balanced && ok;
        times += fmt::format("{}{}", times.empty() ? "" : ", ",
                             ok ? fmt::format("{:.2f}", s["balanced_from"].get<double>())
                                : std::string("never"));
    }
    const double err = segs.empty() || !segs.back()["max_theta_error"].is_number()
                           ? INFINITY
                           : segs.back()["max_theta_error"].get<double>();
    report(4, "surrogate feasible run",
           balanced && err <= kMwTol && secs <= kSurrogateBudget,
           fmt::format("|mismatch| < {} MW from t = [{}]; final-segment max |theta - x*| {:.3g} MW",
                       kMwTol, times, err),
           secs);
}

void surrogate_infeasible(const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path net = dir / "surrogate.json";
    const auto doc = io::load_network(net);
    io::save_scenario(dir / "infeasible.json", io::infeasible_scenario(doc.network));
    const int code =
        cli({"--network", net.string(), "--scenario", (dir / "infeasible.json").string(), "--k",
             fmt::format("{}", kSurrogateGain), "--dt", fmt::format("{}", kSurrogateTau),
             "--t-end", fmt::format("{}", kInfeasibleHorizon), "--out",
             (dir / "infeasible").string()});
    const double secs = seconds_since(t0);
    if (code != 0) {
        report(5, "infeasibility signature", false, fmt::format("cli exit {}", code), secs);
        return;
    }
    const auto lines = summary_lines(dir / "infeasible" / "summary.jsonl");
    const auto segs = of_kind(lines, "segment");
    const auto dets = of_kind(lines, "detection");
    bool ok = segs.size() == 3;
    double above = INFINITY, rate = 0, imb = 0, det_t = INFINITY, recovered = INFINITY;
    if (ok) {
        if (segs[1]["all_above_window"].is_number()) above = segs[1]["all_above_window"];
        for (const auto& d : dets) {
            if (d["status"] == "over_demand") {
                det_t = d["t"];
                rate = d["settled_rate"];
                imb = d["estimated_imbalance"];
                break;
            }
        }
        if (segs[2]["balanced_from"].is_number()) recovered = segs[2]["balanced_from"];
    }
    const Totals tot = totals(doc.network.nodes());
    const double expected_rate =
        (tot.demand + 4500 - tot.x_hi) / static_cast<double>(doc.network.size());
    ok = ok && above < kOverloadEnd && det_t >= kOverloadStart && det_t < kOverloadEnd &&
         std::abs(rate - kPublishedRate) <= kRateRelTol * kPublishedRate &&
         std::abs(imb - kImbalance) <= kImbalanceTol && recovered <= kInfeasibleHorizon &&
         secs <= kSurrogateBudget;
    report(5, "infeasibility signature", ok,
           fmt::format("all prices above window at t={:.2f}, over_demand at t={:.2f}, rate {:.6g} "
                       "(exact {:.6g}), imbalance {:.6g} MW, balanced again from t={:.2f}",
                       above, det_t, rate, expected_rate, imb, recovered),
           secs);
}

void tuning_checks() {
    const auto t0 = std::chrono::steady_clock::now();
    NetworkClassSpec spec;
    spec.N_max = 8;
    spec.candidate_costs = {CostModel::quadratic(0, 10, 0.05), CostModel::quadratic(0, 5, 0.2),
                            CostModel::quadratic(1, 20, 0.01)};
    spec.x_lo_min = 0;
    spec.x_hi_max = 100;
    spec.d_min = 0;
    spec.d_max = 30;
    spec.epsilon = 3;
    const double public_k = worst_case_public_k(spec);
    test::Rng rng(7007);
    double ratio = 0;
    bool dominated = true;
    for (int i = 0; i < kClassSamples; ++i) {
        const std::size_t n = 2 + rng.below(spec.N_max - 1);
        std::vector<NodeSpec> nodes(n);
        for (std::size_t j = 0; j < n; ++j) {
            nodes[j].id = NodeId(j + 1);
            nodes[j].cost = spec.candidate_costs[rng.below(spec.candidate_costs.size())];
            nodes[j].x_lo = rng.uniform(spec.x_lo_min, 20);
            nodes[j].x_hi = rng.uniform(nodes[j].x_lo + 1, spec.x_hi_max);
            nodes[j].demand = rng.uniform(spec.d_min, spec.d_max);
        }
        const Graph g(n, test::random_connected_edges(rng, n, rng.uniform(0, 0.5)));
        const double kb = k_bar(nodes, g, spec.epsilon);
        dominated = dominated && public_k >= kb;
        ratio = std::max(ratio, kb / public_k);
    }

    const std::vector<NodeSpec> two = [] {
        std::vector<NodeSpec> v(2);
        v[0].id = 1;
        v[0].cost = CostModel::quadratic(0, 1, 0.5);
        v[0].x_hi = 10;
        v[1].id = 2;
        v[1].cost = CostModel::quadratic(0, 2, 0.5);
        v[1].x_hi = 10;
        v[1].demand = 5;
        return v;
    }();
    const Graph edge(2, std::vector<Graph::Edge>{{0, 1}});
    // hand values: b_f = sqrt(125), delta = 1/6, sigma2 = 2, M_lambda = 12
    const double kb = 2 * std::sqrt(125.0) / (2 * (1.0 / 6));
    const double l = std::log(std::sqrt(2.0) * 12 * 6);
    auto hand = [&](double k) {
        const double t1 = 2 / (k * 2) * l;
        const double t2 = 3 * 2 / 1.0 * (11 + t1 / 2 * 20);
        return SettleTimes{t1, t2, t1 + t2, {}};
    };
    double worst_settle = std::abs(k_bar(two, edge, 1) - kb);
    for (double k : {kb, 10.0}) {
        const SettleTimes got = settle_times(two, edge, 1, k);
        const SettleTimes want = hand(k);
        worst_settle = std::max({worst_settle, std::abs(got.T1 - want.T1),
                                 std::abs(got.T2 - want.T2), std::abs(got.T - want.T)});
    }
    // T1 = 0 branch: sqrt(N) M_lambda below delta
    std::vector<NodeSpec> tiny = two;
    for (auto& n : tiny) {
        n.cost = CostModel::quadratic(0, 0.001, 0.5);
        n.x_hi = 0.002;
        n.demand = 0.001;
    }
    const SettleTimes zero = settle_times(tiny, edge, 100, 1);
    const bool t1_zero = zero.T1 == 0.0 &&
                         std::abs(zero.T2 - 3 * 2 / 100.0 * (0.003 - 0.001)) <= kSettleTol;
    const double secs = seconds_since(t0);
    report(7, "tuning dominance and formulas",
           dominated && worst_settle <= kSettleTol && t1_zero,
           fmt::format("public k {:.6g} dominates {} samples (max k_bar/public {:.3g}); "
                       "settle-time error {:.3g}; T1 = 0 branch {}",
                       public_k, kClassSamples, ratio, worst_settle, t1_zero ? "ok" : "wrong"),
           secs);
}

void determinism(const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    bool same = true;
    std::vector<std::string> files;
    for (const char* run : {"a", "b"}) {
        const fs::path d = dir / run;
        fs::create_directories(d);
        same = same && cli({"surrogate", "--seed", "11", "--out", (d / "net.json").string()}) == 0;
        same = same && cli({"scenarios", "--network", (d / "net.json").string(), "--out-dir",
                            (d / "scn").string()}) == 0;
        same = same && cli({"--network", (d / "net.json").string(), "--scenario",
                            (d / "scn" / "feasible.json").string(), "--oracle", "--out",
                            (d / "out").string()}) == 0;
    }
    std::size_t compared = 0;
    for (const char* f : {"net.json", "scn/feasible.json", "scn/infeasible.json",
                          "out/timeseries.csv", "out/summary.jsonl"}) {
        const std::string a = slurp(dir / "a" / f);
        same = same && !a.empty() && a == slurp(dir / "b" / f);
        ++compared;
    }
    const double secs = seconds_since(t0);
    report(8, "determinism", same,
           fmt::format("{} output files byte-identical across two invocations", compared), secs);
}

}  // namespace

int main() {
    const fs::path dir = fs::temp_directory_path() / "edp_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    oracle_correctness();
    const auto inst = desk_instances();
    balance_and_lyapunov(inst);
    settled_accuracy(inst);
    surrogate_feasible(dir);
    surrogate_infeasible(dir);
    tuning_checks();
    determinism(dir / "det");

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
