#pragma once

#include <cmath>
#include <numbers>

#include "nullsteer/mission.hpp"
#include "nullsteer/scenario.hpp"

namespace fixtures {

using namespace nullsteer;

inline constexpr double kGpsL1 = 1575.42e6; // Hz

inline double wavelength() { return kSpeedOfLight / kGpsL1; }
inline double wavenumber() { return 2.0 * std::numbers::pi / wavelength(); }
inline double half_wave() { return 0.5 * wavelength(); }

inline CostWeights reference_weights(double t_f)
{
    CostWeights w;
    w.t_f = t_f;
    w.r = {200.0 / t_f, 200.0 / t_f};
    w.q_r = Mat2::identity(0.1 / t_f);
    w.q_f = Mat2::zero();
    w.a_r = std::log(10.0) / t_f;
    w.a_f = 0.0;
    w.u_bar = 2.0;
    return w;
}

inline MissionScenario static_scenario()
{
    MissionScenario m;
    m.client = TargetMotion::fixed({3000, 3000});
    m.eavesdropper = TargetMotion::fixed({6000, 6000});
    m.uav_initial = {};
    m.radio = {600.0, wavenumber()};
    m.separation = half_wave();
    m.activation = ActivationSpec::band(-100, -70);
    m.weights = reference_weights(300.0);
    return m;
}

inline MissionScenario moving_scenario(double speed = 5.0)
{
    MissionScenario m = static_scenario();
    m.client = TargetMotion::constant_velocity({6000, 0}, {0, speed});
    m.eavesdropper = TargetMotion::constant_velocity({10000, 0}, {0, speed});
    m.weights = reference_weights(150.0);
    return m;
}

inline RecedingOptions moving_options()
{
    RecedingOptions o;
    o.replan_interval = 20.0;
    o.horizon = 150.0;
    o.total = 1000.0;
    o.dt = 0.1;
    return o;
}

inline Engagement engagement(PlanarPoint client, PlanarPoint eaves)
{
    MissionScenario m = static_scenario();
    m.client = TargetMotion::fixed(client);
    m.eavesdropper = TargetMotion::fixed(eaves);
    return m.engagement_at(0.0);
}

} // namespace fixtures
