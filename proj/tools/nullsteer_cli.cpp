// nullsteer: plan, simulate and inspect UAV jamming missions from a scenario file.
//
// Exit codes: 0 ok, 1 usage, 2 scenario, 3 solver did not converge, 4 I/O, 5 check failed.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nullsteer/report.hpp"
#include "nullsteer/scenario.hpp"

namespace {

using namespace nullsteer;

enum Exit { kOk = 0, kUsage = 1, kScenario = 2, kSolver = 3, kIo = 4, kCheck = 5 };

struct Flags {
    std::string scenario;
    std::string out = "out";
    std::optional<double> dt;
    std::optional<double> replan_interval;
    std::optional<double> horizon;
    std::optional<double> total;
    int resolution = 72;
};

void add_common(CLI::App* cmd, Flags& f, bool receding)
{
    cmd->add_option("--scenario", f.scenario, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "output directory")->capture_default_str();
    cmd->add_option("--dt", f.dt, "simulation step, s");
    cmd->add_option("--resolution", f.resolution, "beampattern samples per snapshot")->capture_default_str();
    if (receding) {
        cmd->add_option("--replan-interval", f.replan_interval, "time between replans, s");
        cmd->add_option("--horizon", f.horizon, "planning horizon, s");
        cmd->add_option("--total", f.total, "mission length, s");
    }
}

RunConfig run_config(const ScenarioFile& sc, const Flags& f)
{
    RunConfig cfg;
    cfg.dt = f.dt.value_or(sc.simulation.dt);
    cfg.resolution = f.resolution;
    if (!(cfg.dt > 0.0)) {
        throw InputError("--dt must be positive");
    }
    if (cfg.resolution < 8) {
        throw InputError("--resolution must be at least 8");
    }
    return cfg;
}

// Receding-horizon settings when the scenario or the flags ask for them.
std::optional<RecedingOptions> receding_options(const ScenarioFile& sc, const Flags& f, bool force)
{
    const bool wanted = force || f.replan_interval || f.horizon || f.total || sc.simulation.total;
    if (!wanted) {
        return std::nullopt;
    }
    RecedingOptions o;
    o.dt = f.dt.value_or(sc.simulation.dt);
    o.replan_interval = f.replan_interval.value_or(sc.simulation.replan_interval);
    o.horizon = f.horizon.value_or(sc.simulation.horizon.value_or(sc.mission.weights.t_f));
    o.total = f.total.value_or(sc.simulation.total.value_or(o.horizon));
    o.solver = sc.solver;
    return o;
}

void print_summary(const SummaryReport& s, const std::string& out)
{
    std::printf("converged: %s", s.converged ? "yes" : "no");
    if (s.replans > 0) {
        std::printf(" (%d/%d replans)", s.replans_converged, s.replans);
    }
    std::printf("\n");
    for (double th : s.thresholds) {
        auto it = s.first_crossing.find(th);
        if (it == s.first_crossing.end()) {
            std::printf("  %g dBm: never crossed\n", th);
        } else {
            std::printf("  %g dBm: first crossed at %.3f s\n", th, it->second);
        }
    }
    std::printf("  final power %.3f dBm, cost %.6g, max |u| %.4g, max client gain %.3g\n", s.final_power,
                s.total_cost, s.max_control, s.max_client_gain);
    if (!out.empty()) {
        std::printf("  outputs in %s\n", out.c_str());
    }
}

int run(const std::string& verb, const Flags& f)
{
    const ScenarioFile sc = load_scenario(f.scenario);
    RunConfig cfg = run_config(sc, f);

    if (verb == "plan") {
        const RunResult r = run_plan(sc, f.out, cfg);
        print_summary(r.summary, f.out);
        return r.summary.converged ? kOk : kSolver;
    }
    if (verb == "simulate") {
        const RunResult r = run_simulate(sc, *receding_options(sc, f, true), f.out, cfg);
        print_summary(r.summary, f.out);
        return r.summary.converged ? kOk : kSolver;
    }
    if (verb == "snapshot") {
        cfg.write_trajectory = false;
        cfg.write_summary = false;
        const auto rec = receding_options(sc, f, false);
        const RunResult r = rec ? run_simulate(sc, *rec, f.out, cfg) : run_plan(sc, f.out, cfg);
        std::printf("wrote %s/snapshots.csv\n", f.out.c_str());
        return r.summary.converged ? kOk : kSolver;
    }
    // check
    const auto results = check_scenario(sc, cfg, receding_options(sc, f, false));
    bool all = true;
    for (const CheckResult& c : results) {
        std::printf("%s %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                    c.detail.c_str());
        all = all && c.passed;
    }
    return all ? kOk : kCheck;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"UAV jamming trajectory planner with a steered client null"};
    app.require_subcommand(1);
    Flags flags;
    auto* plan = app.add_subcommand("plan", "solve one open-loop plan over the scenario horizon");
    auto* simulate = app.add_subcommand("simulate", "receding-horizon mission with moving targets");
    auto* snapshot = app.add_subcommand("snapshot", "write far-field beampattern snapshots only");
    auto* check = app.add_subcommand("check", "run the invariant suite on a scenario");
    add_common(plan, flags, false);
    add_common(simulate, flags, true);
    add_common(snapshot, flags, true);
    add_common(check, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    const std::string verb = app.get_subcommands().front()->get_name();
    try {
        return run(verb, flags);
    } catch (const ScenarioError& e) {
        std::cerr << "scenario: " << e.what() << "\n";
        return kScenario;
    } catch (const IoError& e) {
        std::cerr << "io: " << e.what() << "\n";
        return kIo;
    } catch (const DegenerateGeometryError& e) {
        std::cerr << "geometry: " << e.what() << "\n";
        return kScenario;
    } catch (const InputError& e) {
        std::cerr << "usage: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSolver;
    }
}
