#include "nullsteer/report.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace nullsteer {

namespace fs = std::filesystem;

const std::array<const char*, kTrajectoryColumns> kTrajectoryHeader = {
    "t",       "x_g",    "y_g",    "vx",     "vy",          "ux",         "uy",
    "phi1",    "phi2",   "theta_g", "gain_e", "gain_c", "power_e_dbm", "power_c_dbm"};

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v < 0 ? "-inf" : "inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::optional<double> first_crossing(std::span<const LogSample> samples, double threshold)
{
    if (samples.empty()) {
        return std::nullopt;
    }
    if (samples.front().power_at_eavesdropper >= threshold) {
        return samples.front().t;
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double p0 = samples[i - 1].power_at_eavesdropper;
        const double p1 = samples[i].power_at_eavesdropper;
        if (p0 < threshold && p1 >= threshold) {
            const double t0 = samples[i - 1].t;
            const double t1 = samples[i].t;
            if (!std::isfinite(p0)) {
                return t1;
            }
            return t0 + (threshold - p0) / (p1 - p0) * (t1 - t0);
        }
    }
    return std::nullopt;
}

double realized_cost(std::span<const LogSample> samples, const MissionScenario& scenario, const CostWeights& weights)
{
    auto running = [&](const LogSample& s) {
        const Vec2& u = s.control;
        double l = 0.5 * (weights.r.x * u.x * u.x + weights.r.y * u.y * u.y) +
                   0.5 * weights.q_r.quadratic(s.state.velocity);
        if (weights.a_r != 0.0) {
            l -= weights.a_r * sigma(s.power_at_eavesdropper, scenario.activation);
        }
        return l;
    };
    double total = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        total += 0.5 * (samples[i].t - samples[i - 1].t) * (running(samples[i - 1]) + running(samples[i]));
    }
    return total;
}

SummaryReport summarize(const TrajectoryLog& log, std::span<const double> thresholds, double total_cost,
                        bool converged)
{
    SummaryReport r;
    r.thresholds.assign(thresholds.begin(), thresholds.end());
    for (double th : thresholds) {
        if (auto t = first_crossing(log.samples, th)) {
            r.first_crossing[th] = *t;
        }
    }
    for (const LogSample& s : log.samples) {
        r.max_control = std::max({r.max_control, std::abs(s.control.x), std::abs(s.control.y)});
        r.max_client_gain = std::max(r.max_client_gain, s.gain_at_client);
    }
    if (!log.samples.empty()) {
        r.final_power = log.samples.back().power_at_eavesdropper;
        r.duration = log.samples.back().t - log.samples.front().t;
    }
    r.client_null_pass = r.max_client_gain <= kNullGainTolerance;
    r.total_cost = total_cost;
    r.converged = converged;
    r.replans = static_cast<int>(log.replans.size());
    for (const ReplanRecord& rec : log.replans) {
        r.replans_converged += rec.converged ? 1 : 0;
        r.per_replan_solve_times.push_back(rec.solve_seconds);
    }
    return r;
}

void write_atomic(const fs::path& path, const std::string& content)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out << content;
        out.flush();
        if (!out) {
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string trajectory_csv(const TrajectoryLog& log)
{
    std::string out;
    for (int c = 0; c < kTrajectoryColumns; ++c) {
        out += kTrajectoryHeader[static_cast<std::size_t>(c)];
        out += c + 1 < kTrajectoryColumns ? ',' : '\n';
    }
    for (const LogSample& s : log.samples) {
        const BeamControl b = s.beam.wrapped();
        const double row[kTrajectoryColumns] = {
            s.t,           s.state.position.x,     s.state.position.y, s.state.velocity.x, s.state.velocity.y,
            s.control.x,   s.control.y,            b.phi1,             b.phi2,             b.theta_g,
            s.gain_at_eavesdropper, s.gain_at_client, s.power_at_eavesdropper, s.power_at_client};
        for (int c = 0; c < kTrajectoryColumns; ++c) {
            out += format_double(row[c]);
            out += c + 1 < kTrajectoryColumns ? ',' : '\n';
        }
    }
    return out;
}

void write_trajectory(const TrajectoryLog& log, const fs::path& path)
{
    if (log.samples.empty()) {
        throw InputError("refusing to write an empty trajectory log");
    }
    write_atomic(path, trajectory_csv(log));
}

TrajectoryTable read_trajectory(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError(path.string() + ": empty file");
    }
    std::string expected;
    for (int c = 0; c < kTrajectoryColumns; ++c) {
        expected += kTrajectoryHeader[static_cast<std::size_t>(c)];
        if (c + 1 < kTrajectoryColumns) {
            expected += ',';
        }
    }
    if (line != expected) {
        throw IoError(path.string() + ": unexpected header");
    }
    TrajectoryTable table;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::array<double, kTrajectoryColumns> row{};
        const char* p = line.c_str();
        for (int c = 0; c < kTrajectoryColumns; ++c) {
            char* end = nullptr;
            errno = 0;
            row[static_cast<std::size_t>(c)] = std::strtod(p, &end);
            const char expect = c + 1 < kTrajectoryColumns ? ',' : '\0';
            if (end == p || *end != expect) {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed field " +
                              kTrajectoryHeader[static_cast<std::size_t>(c)]);
            }
            p = end + (expect ? 1 : 0);
        }
        table.rows.push_back(row);
    }
    return table;
}

BeampatternSnapshot emit_beampattern_snapshot(const UavState& state, const BeamControl& beam, const Engagement& eng,
                                              int resolution, double time)
{
    if (resolution < 8) {
        throw InputError("snapshot resolution must be at least 8");
    }
    const double kd = eng.kd();
    const auto ff = FarFieldGeometry::from_positions(state.position, eng.client, eng.eavesdropper);
    BeampatternSnapshot snap;
    snap.time = time;
    snap.theta_c = ff.theta_c;
    snap.theta_e = ff.theta_e;
    snap.gain_c = far_field_beampattern(FarFieldGeometry::from_bearings(ff.theta_c, ff.theta_c), beam.theta_g, kd);
    snap.gain_e = far_field_beampattern(ff, beam.theta_g, kd);
    snap.samples.reserve(static_cast<std::size_t>(resolution));
    for (int j = 0; j < resolution; ++j) {
        const double angle = 2.0 * std::numbers::pi * j / resolution;
        const double gain = far_field_beampattern(FarFieldGeometry::from_bearings(ff.theta_c, angle), beam.theta_g, kd);
        snap.samples.push_back({angle, gain});
    }
    return snap;
}

std::vector<BeampatternSnapshot> snapshots_from_log(const TrajectoryLog& log, const MissionScenario& scenario,
                                                    std::span<const double> times, int resolution)
{
    std::vector<BeampatternSnapshot> out;
    if (log.samples.empty()) {
        return out;
    }
    for (double t : times) {
        auto it = std::lower_bound(log.samples.begin(), log.samples.end(), t - 1e-9,
                                   [](const LogSample& s, double v) { return s.t < v; });
        if (it == log.samples.end()) {
            continue;
        }
        out.push_back(emit_beampattern_snapshot(it->state, it->beam, scenario.engagement_at(it->t), resolution, it->t));
    }
    return out;
}

std::string snapshots_csv(std::span<const BeampatternSnapshot> snaps)
{
    std::string out = "t,kind,angle,gain\n";
    auto row = [&](double t, const char* kind, double angle, double gain) {
        out += format_double(t) + "," + kind + "," + format_double(angle) + "," + format_double(gain) + "\n";
    };
    for (const auto& s : snaps) {
        row(s.time, "client", wrap_angle(s.theta_c), s.gain_c);
        row(s.time, "eavesdropper", wrap_angle(s.theta_e), s.gain_e);
        for (const auto& p : s.samples) {
            row(s.time, "sample", p.angle, p.gain);
        }
    }
    return out;
}

namespace {

nlohmann::ordered_json number_or_token(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    return format_double(v);
}

} // namespace

std::string summary_json(const SummaryReport& r)
{
    nlohmann::ordered_json j;
    nlohmann::ordered_json crossings = nlohmann::ordered_json::object();
    for (double th : r.thresholds) {
        auto it = r.first_crossing.find(th);
        if (it != r.first_crossing.end()) {
            crossings[format_double(th)] = it->second;
        }
    }
    j["converged"] = r.converged;
    j["duration"] = r.duration;
    j["first_crossing"] = crossings;
    j["final_power"] = number_or_token(r.final_power);
    j["total_cost"] = number_or_token(r.total_cost);
    j["max_control"] = r.max_control;
    j["max_client_gain"] = r.max_client_gain;
    j["client_null_pass"] = r.client_null_pass;
    j["replans"] = r.replans;
    j["replans_converged"] = r.replans_converged;
    return j.dump(2) + "\n";
}

std::string timing_csv(const TrajectoryLog& log)
{
    std::string out = "replan,time,converged,executed,iterations,max_defect,cost,solve_seconds\n";
    for (std::size_t i = 0; i < log.replans.size(); ++i) {
        const ReplanRecord& r = log.replans[i];
        out += std::to_string(i) + "," + format_double(r.time) + "," + (r.converged ? "1" : "0") + "," +
               (r.executed ? "1" : "0") + "," + std::to_string(r.iterations) + "," + format_double(r.max_defect) +
               "," + format_double(r.cost) + "," + format_double(r.solve_seconds) + "\n";
    }
    return out;
}

std::vector<double> snapshot_times(const ScenarioFile& scenario, double duration)
{
    if (!scenario.snapshot_times.empty()) {
        return scenario.snapshot_times;
    }
    return {0.0, 0.25 * duration, 0.5 * duration, 0.75 * duration, duration};
}

namespace {

void emit_outputs(const ScenarioFile& scenario, const RunResult& res, const fs::path& out_dir, const RunConfig& cfg)
{
    if (!cfg.write_trajectory && !cfg.write_snapshots && !cfg.write_summary) {
        return;
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + out_dir.string());
    }
    if (cfg.write_trajectory) {
        write_trajectory(res.log, out_dir / "trajectory.csv");
    }
    if (cfg.write_snapshots) {
        const auto times = snapshot_times(scenario, res.summary.duration);
        const auto snaps = snapshots_from_log(res.log, scenario.mission, times, cfg.resolution);
        write_atomic(out_dir / "snapshots.csv", snapshots_csv(snaps));
    }
    if (cfg.write_summary) {
        write_atomic(out_dir / "summary.json", summary_json(res.summary));
        if (!res.log.replans.empty()) {
            write_atomic(out_dir / "timing.csv", timing_csv(res.log));
        }
    }
}

} // namespace

RunResult run_plan(const ScenarioFile& scenario, const fs::path& out_dir, const RunConfig& cfg)
{
    const MissionScenario& m = scenario.mission;
    m.validate();
    const BvpSolution plan = solve_bvp(m.uav_initial, m.engagement_at(0.0), m.weights, scenario.solver);
    RunResult res;
    res.log = execute_plan(m, plan, cfg.dt);
    res.summary = summarize(res.log, scenario.thresholds_dbm, plan.cost, plan.converged);
    emit_outputs(scenario, res, out_dir, cfg);
    return res;
}

RunResult run_simulate(const ScenarioFile& scenario, const RecedingOptions& options, const fs::path& out_dir,
                       const RunConfig& cfg)
{
    const MissionScenario& m = scenario.mission;
    RunResult res;
    res.log = receding_horizon(m, options);
    CostWeights w = m.weights;
    w.t_f = options.horizon;
    bool all = !res.log.replans.empty();
    for (const ReplanRecord& r : res.log.replans) {
        all = all && r.converged;
    }
    res.summary = summarize(res.log, scenario.thresholds_dbm, realized_cost(res.log.samples, m, w), all);
    emit_outputs(scenario, res, out_dir, cfg);
    return res;
}

namespace {

void check_log(std::vector<CheckResult>& out, const std::string& prefix, const TrajectoryLog& log,
               const SummaryReport& summary, double u_bar)
{
    std::ostringstream d;
    d << "max |u| " << format_double(summary.max_control) << " vs " << format_double(u_bar);
    out.push_back({prefix + " actuation bound", summary.max_control <= u_bar * (1.0 + 1e-12), d.str()});

    d.str("");
    d << "max client gain " << format_double(summary.max_client_gain);
    out.push_back({prefix + " client null", summary.client_null_pass, d.str()});

    bool sentinel = true;
    for (const LogSample& s : log.samples) {
        sentinel = sentinel && is_null_power(s.power_at_client);
    }
    out.push_back({prefix + " client power sentinel", sentinel, sentinel ? "-inf at every sample" : "finite power"});

    bool inside = true;
    for (const auto& [th, t] : summary.first_crossing) {
        inside = inside && t >= 0.0 && t <= summary.duration + 1e-9;
    }
    out.push_back({prefix + " crossing times in range", inside, ""});

    bool monotone_time = true;
    for (std::size_t i = 1; i < log.samples.size(); ++i) {
        monotone_time = monotone_time && log.samples[i].t > log.samples[i - 1].t;
    }
    out.push_back({prefix + " strictly increasing time", monotone_time, ""});
}

} // namespace

std::vector<CheckResult> check_scenario(const ScenarioFile& scenario, const RunConfig& cfg,
                                        const std::optional<RecedingOptions>& receding)
{
    std::vector<CheckResult> out;
    const MissionScenario& m = scenario.mission;
    const fs::path none;
    RunConfig quiet = cfg;
    quiet.write_trajectory = quiet.write_snapshots = quiet.write_summary = false;

    auto run_once = [&]() {
        if (receding) {
            return run_simulate(scenario, *receding, none, quiet);
        }
        return run_plan(scenario, none, quiet);
    };
    const RunResult a = run_once();
    const std::string prefix = receding ? "simulate" : "plan";
    out.push_back({prefix + " converged", a.summary.converged,
                   receding ? std::to_string(a.summary.replans_converged) + "/" + std::to_string(a.summary.replans) +
                                  " replans converged"
                            : std::string()});
    check_log(out, prefix, a.log, a.summary, m.weights.u_bar);

    const RunResult b = run_once();
    const bool same = trajectory_csv(a.log) == trajectory_csv(b.log) && summary_json(a.summary) == summary_json(b.summary);
    out.push_back({prefix + " deterministic output", same, same ? "repeat run identical" : "repeat run differs"});
    return out;
}

} // namespace nullsteer
