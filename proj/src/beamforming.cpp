#include "nullsteer/beamforming.hpp"

#include <cmath>
#include <numbers>

#include "nullsteer/errors.hpp"

namespace nullsteer {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

} // namespace

ArrayGeometry::ArrayGeometry(PlanarPoint c, double theta, double d, double k)
    : center(c), orientation(theta), separation(d), wavenumber(k)
{
    if (!(separation > 0.0) || !std::isfinite(separation)) {
        throw InputError("array separation must be positive and finite");
    }
    if (!(wavenumber > 0.0) || !std::isfinite(wavenumber)) {
        throw InputError("wavenumber must be positive and finite");
    }
}

PlanarPoint ArrayGeometry::antenna1() const { return center - 0.5 * separation * unit(orientation); }

PlanarPoint ArrayGeometry::antenna2() const { return center + 0.5 * separation * unit(orientation); }

double ArrayGeometry::range_difference(const PlanarPoint& p) const
{
    const double d1 = norm(p - antenna1());
    const double d2 = norm(p - antenna2());
    if (d1 == 0.0 || d2 == 0.0) {
        throw DegenerateGeometryError("observation point coincides with an antenna");
    }
    // d1^2 - d2^2 = 2 D (p - center) . u
    return 2.0 * separation * dot(p - center, unit(orientation)) / (d1 + d2);
}

BeamControl BeamControl::wrapped() const { return {wrap_angle(phi1), wrap_angle(phi2), wrap_angle(theta_g)}; }

FarFieldGeometry FarFieldGeometry::from_bearings(double theta_c, double theta_e)
{
    FarFieldGeometry ff;
    ff.theta_e = theta_e;
    ff.theta_c = theta_e + wrap_angle(theta_c - theta_e);
    ff.mu = std::sin(ff.half_difference());
    return ff;
}

FarFieldGeometry FarFieldGeometry::from_positions(const PlanarPoint& uav, const PlanarPoint& client,
                                                  const PlanarPoint& eavesdropper)
{
    return from_bearings(bearing(uav, client), bearing(uav, eavesdropper));
}

double bearing(const PlanarPoint& from, const PlanarPoint& to)
{
    const Vec2 d = to - from;
    if (d.x == 0.0 && d.y == 0.0) {
        throw DegenerateGeometryError("bearing between coincident points");
    }
    return wrap_angle(std::atan2(d.y, d.x));
}

double beampattern(const PlanarPoint& p, const ArrayGeometry& geom, double phi1, double phi2)
{
    const double phase = geom.wavenumber * geom.range_difference(p) + phi1 - phi2;
    return 2.0 + 2.0 * std::cos(phase);
}

double nulling_phase(double phi1, const PlanarPoint& client, const ArrayGeometry& geom)
{
    return phi1 + kPi + geom.wavenumber * geom.range_difference(client);
}

double doppler_rate(const Vec2& velocity, const PlanarPoint& uav, const PlanarPoint& eavesdropper,
                    double wavenumber)
{
    const Vec2 los = eavesdropper - uav;
    const double range = norm(los);
    if (range == 0.0) {
        throw DegenerateGeometryError("UAV coincides with the eavesdropper");
    }
    return wavenumber * dot(velocity, los) / range;
}

double doppler_phase(std::span<const DopplerSample> samples, const PlanarPoint& eavesdropper,
                     double wavenumber)
{
    if (samples.empty()) {
        return 0.0;
    }
    double phase = 0.0;
    double prev_rate = doppler_rate(samples[0].velocity, samples[0].uav, eavesdropper, wavenumber);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double dt = samples[i].time - samples[i - 1].time;
        if (!(dt >= 0.0)) {
            throw InputError("Doppler samples must be time-ordered");
        }
        const double rate = doppler_rate(samples[i].velocity, samples[i].uav, eavesdropper, wavenumber);
        phase -= 0.5 * dt * (prev_rate + rate);
        prev_rate = rate;
    }
    return phase;
}

double far_field_beampattern(const FarFieldGeometry& ff, double theta_g, double kd)
{
    if (!(kd > 0.0)) {
        throw InputError("kD must be positive");
    }
    const double arg = 2.0 * kd * ff.mu * std::sin(ff.midline() - theta_g);
    return 2.0 - 2.0 * std::cos(arg);
}

bool below_full_gain_threshold(const FarFieldGeometry& ff, double kd)
{
    return std::abs(ff.mu) < kPi / (2.0 * kd);
}

std::pair<double, double> orientation_branches(const FarFieldGeometry& ff, double kd)
{
    if (!(kd > 0.0)) {
        throw InputError("kD must be positive");
    }
    double offset = 0.5 * kPi;
    if (!below_full_gain_threshold(ff, kd)) {
        offset = std::asin(std::min(1.0, kPi / (2.0 * kd * std::abs(ff.mu))));
    }
    const double mid = ff.midline();
    return {mid + offset, mid - offset};
}

double optimal_orientation(const FarFieldGeometry& ff, double kd, std::optional<double> previous_theta_g)
{
    const auto [plus, minus] = orientation_branches(ff, kd);
    if (!previous_theta_g) {
        return plus;
    }
    const double prev = *previous_theta_g;
    const double to_plus = wrap_angle(plus - prev);
    const double to_minus = wrap_angle(minus - prev);
    return prev + (std::abs(to_plus) <= std::abs(to_minus) ? to_plus : to_minus);
}

double optimal_beampattern(const FarFieldGeometry& ff, double kd)
{
    if (!(kd > 0.0)) {
        throw InputError("kD must be positive");
    }
    if (below_full_gain_threshold(ff, kd)) {
        return 2.0 - 2.0 * std::cos(2.0 * kd * ff.mu);
    }
    return 4.0;
}

} // namespace nullsteer
