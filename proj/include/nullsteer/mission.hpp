#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nullsteer/optimizer.hpp"

namespace nullsteer {

struct Waypoint {
    double time = 0.0; // s
    PlanarPoint position;
};

// Ground-truth motion of the client or eavesdropper.
struct TargetMotion {
    enum class Kind { Static, ConstantVelocity, WaypointSequence };

    Kind kind = Kind::Static;
    PlanarPoint initial;
    Vec2 velocity;                  // ConstantVelocity
    std::vector<Waypoint> waypoints; // WaypointSequence, strictly increasing times > 0

    static TargetMotion fixed(PlanarPoint p);
    static TargetMotion constant_velocity(PlanarPoint p, Vec2 v);
    static TargetMotion waypoint_sequence(PlanarPoint p, std::vector<Waypoint> waypoints);

    // Linear between waypoints, holding the last one afterwards.
    PlanarPoint position_at(double t) const;
    bool is_static() const;
    void validate() const;
};

struct MissionScenario {
    TargetMotion client;
    TargetMotion eavesdropper;
    UavState uav_initial;
    RadioParams radio;
    double separation = 0.0;
    ActivationSpec activation;
    Regularization regularization;
    CostWeights weights;

    // Planning geometry with both targets frozen at time t.
    Engagement engagement_at(double t) const;
    void validate() const;
};

struct LogSample {
    double t = 0.0;
    UavState state;
    Vec2 control;
    BeamControl beam; // unwrapped; wrap on output
    double gain_at_eavesdropper = 0.0;
    double gain_at_client = 0.0;
    double power_at_eavesdropper = kNullPower;
    double power_at_client = kNullPower;
};

struct ReplanRecord {
    double time = 0.0;
    bool converged = false;
    bool executed = false; // false when the previous plan was kept
    int iterations = 0;
    double max_defect = 0.0;
    double cost = 0.0;
    double solve_seconds = 0.0;
};

struct TrajectoryLog {
    std::vector<LogSample> samples;
    std::vector<ReplanRecord> replans;
};

// Client gain at or below this is logged as a perfect null.
inline constexpr double kNullGainTolerance = 1e-12;

/// RK4 on p' = v, v' = u(t) over a fixed mesh; the last step is shortened to
/// land on `duration`. Returns the state at every mesh time, starting with `initial`.
std::vector<UavState> integrate_dynamics(const UavState& initial, const std::function<Vec2(double)>& control,
                                         double dt, double duration);

/// Orientation from the far-field optimum and phi2 from the exact-range null,
/// given the current Doppler phase phi1.
BeamControl apply_beam_control(const UavState& state, const PlanarPoint& client, const PlanarPoint& eavesdropper,
                               const MissionScenario& scenario, std::optional<double> previous_theta_g,
                               double phi1 = 0.0);

// Online beam steering along a simulated flight: integrates the Doppler phase
// and keeps the orientation branch continuous.
class BeamTracker {
public:
    explicit BeamTracker(const MissionScenario& scenario) : scenario_(scenario) {}

    LogSample observe(double t, const UavState& state, const Vec2& control);

private:
    const MissionScenario& scenario_;
    std::optional<double> last_time_;
    double last_rate_ = 0.0;
    double phi1_ = 0.0;
    std::optional<double> theta_g_;
};

/// Flies a single plan from the scenario's initial state over its horizon.
TrajectoryLog execute_plan(const MissionScenario& scenario, const BvpSolution& plan, double dt);

struct RecedingOptions {
    double replan_interval = 20.0;
    double horizon = 150.0;
    double total = 1000.0;
    double dt = 0.1;
    bool warm_start = true;
    bool shrink_horizon = false; // end every plan no later than `total`
    SolverOptions solver;
};

/// Replans every replan_interval with targets frozen at the replan time and
/// executes the leading part of each plan. A replan that fails to converge
/// keeps the previous plan running.
TrajectoryLog receding_horizon(const MissionScenario& scenario, const RecedingOptions& options);

} // namespace nullsteer
