#include "nullsteer/mission.hpp"

#include <chrono>
#include <cmath>

#include "nullsteer/errors.hpp"

namespace nullsteer {

namespace {

UavState rk4_step(const UavState& s, const std::function<Vec2(double)>& control, double t, double h)
{
    const Vec2 u0 = control(t);
    const Vec2 um = control(t + 0.5 * h);
    const Vec2 u1 = control(t + h);
    const Vec2 k1p = s.velocity;
    const Vec2 k2p = s.velocity + 0.5 * h * u0;
    const Vec2 k3p = s.velocity + 0.5 * h * um;
    const Vec2 k4p = s.velocity + h * um;
    UavState next;
    next.position = s.position + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    next.velocity = s.velocity + (h / 6.0) * (u0 + 4.0 * um + u1);
    return next;
}

// Steps per window, tolerant of dt not dividing the window exactly.
long step_count(double duration, double dt)
{
    const double ratio = duration / dt;
    const double rounded = std::round(ratio);
    return std::abs(ratio - rounded) < 1e-9 * std::max(1.0, ratio) ? static_cast<long>(rounded)
                                                                   : static_cast<long>(std::ceil(ratio));
}

} // namespace

TargetMotion TargetMotion::fixed(PlanarPoint p) { return {Kind::Static, p, {}, {}}; }

TargetMotion TargetMotion::constant_velocity(PlanarPoint p, Vec2 v) { return {Kind::ConstantVelocity, p, v, {}}; }

TargetMotion TargetMotion::waypoint_sequence(PlanarPoint p, std::vector<Waypoint> waypoints)
{
    TargetMotion m{Kind::WaypointSequence, p, {}, std::move(waypoints)};
    m.validate();
    return m;
}

PlanarPoint TargetMotion::position_at(double t) const
{
    switch (kind) {
    case Kind::Static:
        return initial;
    case Kind::ConstantVelocity:
        return initial + t * velocity;
    case Kind::WaypointSequence: {
        double t0 = 0.0;
        PlanarPoint p0 = initial;
        for (const auto& wp : waypoints) {
            if (t <= wp.time) {
                const double w = (t - t0) / (wp.time - t0);
                return p0 + std::max(0.0, w) * (wp.position - p0);
            }
            t0 = wp.time;
            p0 = wp.position;
        }
        return p0;
    }
    }
    return initial;
}

bool TargetMotion::is_static() const
{
    return kind == Kind::Static || (kind == Kind::ConstantVelocity && velocity == Vec2{}) ||
           (kind == Kind::WaypointSequence && waypoints.empty());
}

void TargetMotion::validate() const
{
    if (!std::isfinite(initial.x) || !std::isfinite(initial.y)) {
        throw InputError("target position must be finite");
    }
    if (kind == Kind::ConstantVelocity && (!std::isfinite(velocity.x) || !std::isfinite(velocity.y))) {
        throw InputError("target velocity must be finite");
    }
    if (kind == Kind::WaypointSequence) {
        double last = 0.0;
        for (const auto& wp : waypoints) {
            if (!(wp.time > last) || !std::isfinite(wp.position.x) || !std::isfinite(wp.position.y)) {
                throw InputError("waypoint times must be positive and strictly increasing");
            }
            last = wp.time;
        }
    }
}

Engagement MissionScenario::engagement_at(double t) const
{
    Engagement eng;
    eng.client = client.position_at(t);
    eng.eavesdropper = eavesdropper.position_at(t);
    eng.radio = radio;
    eng.separation = separation;
    eng.activation = activation;
    eng.regularization = regularization;
    return eng;
}

void MissionScenario::validate() const
{
    client.validate();
    eavesdropper.validate();
    weights.validate();
    engagement_at(0.0).validate();
}

std::vector<UavState> integrate_dynamics(const UavState& initial, const std::function<Vec2(double)>& control,
                                         double dt, double duration)
{
    if (!(dt > 0.0) || !(duration >= 0.0)) {
        throw InputError("integration needs dt > 0 and a non-negative duration");
    }
    const long steps = step_count(duration, dt);
    std::vector<UavState> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.push_back(initial);
    for (long i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double h = std::min(dt, duration - t);
        out.push_back(rk4_step(out.back(), control, t, h));
    }
    return out;
}

BeamControl apply_beam_control(const UavState& state, const PlanarPoint& client, const PlanarPoint& eavesdropper,
                               const MissionScenario& scenario, std::optional<double> previous_theta_g, double phi1)
{
    const double kd = scenario.radio.wavenumber * scenario.separation;
    const auto ff = FarFieldGeometry::from_positions(state.position, client, eavesdropper);
    BeamControl beam;
    beam.theta_g = optimal_orientation(ff, kd, previous_theta_g);
    beam.phi1 = phi1;
    const ArrayGeometry geom(state.position, beam.theta_g, scenario.separation, scenario.radio.wavenumber);
    beam.phi2 = nulling_phase(phi1, client, geom);
    return beam;
}

LogSample BeamTracker::observe(double t, const UavState& state, const Vec2& control)
{
    const PlanarPoint client = scenario_.client.position_at(t);
    const PlanarPoint eaves = scenario_.eavesdropper.position_at(t);
    const double rate = doppler_rate(state.velocity, state.position, eaves, scenario_.radio.wavenumber);
    if (last_time_) {
        phi1_ -= 0.5 * (t - *last_time_) * (last_rate_ + rate);
    }
    last_time_ = t;
    last_rate_ = rate;

    LogSample s;
    s.t = t;
    s.state = state;
    s.control = control;
    s.beam = apply_beam_control(state, client, eaves, scenario_, theta_g_, phi1_);
    theta_g_ = s.beam.theta_g;

    const ArrayGeometry geom(state.position, s.beam.theta_g, scenario_.separation, scenario_.radio.wavenumber);
    s.gain_at_eavesdropper = beampattern(eaves, geom, s.beam.phi1, s.beam.phi2);
    s.gain_at_client = beampattern(client, geom, s.beam.phi1, s.beam.phi2);
    s.power_at_eavesdropper = jamming_power_dbm(s.gain_at_eavesdropper, norm(eaves - state.position), scenario_.radio);
    s.power_at_client = s.gain_at_client <= kNullGainTolerance
                            ? kNullPower
                            : jamming_power_dbm(s.gain_at_client, norm(client - state.position), scenario_.radio);
    return s;
}

namespace {

// Flies [t_begin, t_end] under `control` (absolute time), appending samples.
// The sample at t_begin is skipped when the log already ends there.
UavState fly(UavState state, double t_begin, double t_end, double dt, const std::function<Vec2(double)>& control,
             BeamTracker& tracker, TrajectoryLog& log)
{
    if (log.samples.empty() || log.samples.back().t < t_begin) {
        log.samples.push_back(tracker.observe(t_begin, state, control(t_begin)));
    }
    const long steps = step_count(t_end - t_begin, dt);
    for (long i = 0; i < steps; ++i) {
        const double t = t_begin + static_cast<double>(i) * dt;
        const double t_next = (i + 1 == steps) ? t_end : t_begin + static_cast<double>(i + 1) * dt;
        state = rk4_step(state, control, t, t_next - t);
        log.samples.push_back(tracker.observe(t_next, state, control(t_next)));
    }
    return state;
}

std::function<Vec2(double)> plan_control(const BvpSolution& plan, double start)
{
    return [&plan, start](double t) {
        const double local = t - start;
        if (plan.mesh.empty() || local > plan.mesh.back() + 1e-9) {
            return Vec2{};
        }
        return plan.control_at(local);
    };
}

} // namespace

TrajectoryLog execute_plan(const MissionScenario& scenario, const BvpSolution& plan, double dt)
{
    if (!(dt > 0.0) || plan.mesh.empty()) {
        throw InputError("plan execution needs dt > 0 and a non-empty plan");
    }
    TrajectoryLog log;
    BeamTracker tracker(scenario);
    fly(scenario.uav_initial, 0.0, plan.mesh.back(), dt, plan_control(plan, 0.0), tracker, log);
    return log;
}

TrajectoryLog receding_horizon(const MissionScenario& scenario, const RecedingOptions& options)
{
    if (!(options.replan_interval > 0.0) || !(options.replan_interval <= options.horizon + 1e-12) ||
        !(options.horizon <= options.total + 1e-12) || !(options.dt > 0.0)) {
        throw InputError("receding horizon needs 0 < replan_interval <= horizon <= total and dt > 0");
    }
    scenario.validate();
    CostWeights weights = scenario.weights;
    weights.t_f = options.horizon;

    TrajectoryLog log;
    BeamTracker tracker(scenario);
    UavState state = scenario.uav_initial;
    std::optional<BvpSolution> plan;
    double plan_start = 0.0;

    const long replans = step_count(options.total, options.replan_interval);
    for (long r = 0; r < replans; ++r) {
        const double t_r = static_cast<double>(r) * options.replan_interval;
        const double t_end = std::min(options.total, t_r + options.replan_interval);
        const Engagement eng = scenario.engagement_at(t_r);
        if (options.shrink_horizon) {
            weights.t_f = std::min(options.horizon, options.total - t_r);
        }

        ReplanRecord record;
        record.time = t_r;
        const auto started = std::chrono::steady_clock::now();
        std::optional<BvpSolution> candidate;
        try {
            const InitialGuess guess = (options.warm_start && plan)
                                           ? shifted_guess(*plan, t_r - plan_start, weights.t_f,
                                                           options.solver.mesh_nodes)
                                           : default_initial_guess(state, eng, weights, options.solver.mesh_nodes);
            candidate = solve_bvp(state, eng, weights, guess, options.solver);
        } catch (const Error&) {
            candidate.reset();
        }
        record.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (candidate) {
            record.converged = candidate->converged;
            record.iterations = candidate->iterations;
            record.max_defect = candidate->max_defect;
            record.cost = candidate->cost;
        }
        if (candidate && (candidate->converged || !plan)) {
            plan = std::move(candidate);
            plan_start = t_r;
            record.executed = true;
        }
        log.replans.push_back(record);

        if (plan) {
            state = fly(state, t_r, t_end, options.dt, plan_control(*plan, plan_start), tracker, log);
        } else {
            state = fly(state, t_r, t_end, options.dt, [](double) { return Vec2{}; }, tracker, log);
        }
    }
    return log;
}

} // namespace nullsteer
