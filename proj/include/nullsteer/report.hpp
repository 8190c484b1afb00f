#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nullsteer/mission.hpp"
#include "nullsteer/scenario.hpp"

namespace nullsteer {

inline constexpr int kTrajectoryColumns = 14;
extern const std::array<const char*, kTrajectoryColumns> kTrajectoryHeader;

struct SummaryReport {
    std::map<double, double> first_crossing; // threshold dBm -> s; absent if never crossed
    std::vector<double> thresholds;
    double final_power = kNullPower;         // dBm at the eavesdropper
    double total_cost = 0.0;
    double max_control = 0.0;                // m/s^2, max over axes and samples
    double max_client_gain = 0.0;
    bool client_null_pass = false;           // max_client_gain <= kNullGainTolerance
    bool converged = false;
    int replans = 0;
    int replans_converged = 0;
    double duration = 0.0;                   // s
    std::vector<double> per_replan_solve_times; // s; written to timing.csv only
};

/// First time the linearly interpolated eavesdropper power reaches `threshold`.
std::optional<double> first_crossing(std::span<const LogSample> samples, double threshold);

/// Realized running cost of a flown log: trapezoid over the samples with the
/// logged eavesdropper power. No terminal term.
double realized_cost(std::span<const LogSample> samples, const MissionScenario& scenario, const CostWeights& weights);

SummaryReport summarize(const TrajectoryLog& log, std::span<const double> thresholds, double total_cost,
                        bool converged);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string format_double(double v);

std::string trajectory_csv(const TrajectoryLog& log);
void write_trajectory(const TrajectoryLog& log, const std::filesystem::path& path);

struct TrajectoryTable {
    std::vector<std::array<double, kTrajectoryColumns>> rows;
};

TrajectoryTable read_trajectory(const std::filesystem::path& path);

struct PolarSample {
    double angle = 0.0; // rad, [0, 2 pi)
    double gain = 0.0;
};

struct BeampatternSnapshot {
    double time = 0.0;
    double theta_c = 0.0;
    double theta_e = 0.0;
    double gain_c = 0.0;
    double gain_e = 0.0;
    std::vector<PolarSample> samples;
};

/// Far-field gain at `resolution` uniform angles plus the client and
/// eavesdropper markers. Throws InputError for resolution < 8.
BeampatternSnapshot emit_beampattern_snapshot(const UavState& state, const BeamControl& beam, const Engagement& eng,
                                              int resolution, double time = 0.0);

/// Snapshots taken at the first log sample at or after each requested time.
std::vector<BeampatternSnapshot> snapshots_from_log(const TrajectoryLog& log, const MissionScenario& scenario,
                                                    std::span<const double> times, int resolution);

std::string snapshots_csv(std::span<const BeampatternSnapshot> snaps);
std::string summary_json(const SummaryReport& report);
std::string timing_csv(const TrajectoryLog& log);

struct RunConfig {
    double dt = 0.1;
    int resolution = 72;
    bool write_trajectory = true;
    bool write_snapshots = true;
    bool write_summary = true;
};

// Default snapshot times when the scenario lists none: 0, T/4, T/2, 3T/4, T.
std::vector<double> snapshot_times(const ScenarioFile& scenario, double duration);

struct RunResult {
    SummaryReport summary;
    TrajectoryLog log;
};

/// Single open-loop plan over weights.t_f, flown at cfg.dt.
RunResult run_plan(const ScenarioFile& scenario, const std::filesystem::path& out_dir, const RunConfig& cfg = {});

RunResult run_simulate(const ScenarioFile& scenario, const RecedingOptions& options,
                       const std::filesystem::path& out_dir, const RunConfig& cfg = {});

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant suite for one scenario: a single plan and, when `receding` is
/// given, a receding-horizon run.
std::vector<CheckResult> check_scenario(const ScenarioFile& scenario, const RunConfig& cfg,
                                        const std::optional<RecedingOptions>& receding);

} // namespace nullsteer
