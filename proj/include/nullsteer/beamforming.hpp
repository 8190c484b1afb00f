#pragma once

#include <optional>
#include <span>
#include <utility>

#include "nullsteer/vec2.hpp"

namespace nullsteer {

// Two omnidirectional antennas mounted symmetrically about the UAV.
struct ArrayGeometry {
    PlanarPoint center;       // array center (UAV position), m
    double orientation = 0.0; // angle of antenna 2 about the center, rad
    double separation = 0.0;  // antenna spacing D, m
    double wavenumber = 0.0;  // k = 2 pi / lambda, rad/m

    ArrayGeometry() = default;
    ArrayGeometry(PlanarPoint center, double orientation, double separation, double wavenumber);

    PlanarPoint antenna1() const;
    PlanarPoint antenna2() const;
    // d1(p) - d2(p), computed without cancellation between the two ranges.
    double range_difference(const PlanarPoint& p) const;
};

struct BeamControl {
    double phi1 = 0.0;
    double phi2 = 0.0;
    double theta_g = 0.0;

    // Copy with every angle wrapped to (-pi, pi].
    BeamControl wrapped() const;
};

// Far-field bearings from the UAV to the client and eavesdropper. theta_c is
// stored so that theta_c - theta_e lies in (-pi, pi]; mu is then well defined.
struct FarFieldGeometry {
    double theta_c = 0.0;
    double theta_e = 0.0;
    double mu = 0.0;

    static FarFieldGeometry from_bearings(double theta_c, double theta_e);
    static FarFieldGeometry from_positions(const PlanarPoint& uav, const PlanarPoint& client,
                                           const PlanarPoint& eavesdropper);

    double half_difference() const { return 0.5 * (theta_c - theta_e); }
    double midline() const { return 0.5 * (theta_c + theta_e); }
};

struct DopplerSample {
    double time = 0.0;
    Vec2 velocity;
    PlanarPoint uav;
};

/// Bearing of `to` as seen from `from`, in (-pi, pi].
/// Throws DegenerateGeometryError when the points coincide.
double bearing(const PlanarPoint& from, const PlanarPoint& to);

/// Exact two-element beampattern |e^{j(k d1 + phi1)} + e^{j(k d2 + phi2)}|^2 at p.
double beampattern(const PlanarPoint& p, const ArrayGeometry& geom, double phi1, double phi2);

/// Phase of antenna 2 that places an exact null on `client` for a given phi1.
double nulling_phase(double phi1, const PlanarPoint& client, const ArrayGeometry& geom);

/// Running Doppler offset for phi1: minus the trapezoidal integral of
/// k v^T (p_e - p_g) / |p_e - p_g| over the samples.
double doppler_phase(std::span<const DopplerSample> samples, const PlanarPoint& eavesdropper,
                     double wavenumber);

// Doppler integrand k v^T (p_e - p_g)/|p_e - p_g| for a single instant.
double doppler_rate(const Vec2& velocity, const PlanarPoint& uav, const PlanarPoint& eavesdropper,
                    double wavenumber);

/// Far-field beampattern toward the eavesdropper with the client null in place.
double far_field_beampattern(const FarFieldGeometry& ff, double theta_g, double kd);

/// Orientation maximizing far_field_beampattern. With a previous orientation the
/// branch nearest to it is returned (as a value continuous with it); otherwise
/// the "+" branch.
double optimal_orientation(const FarFieldGeometry& ff, double kd,
                           std::optional<double> previous_theta_g = std::nullopt);

/// Both candidate orientations, "+" branch first.
std::pair<double, double> orientation_branches(const FarFieldGeometry& ff, double kd);

/// Beampattern value reached at the optimal orientation.
double optimal_beampattern(const FarFieldGeometry& ff, double kd);

// |mu| < pi/(2kD): the peak gain of 4 cannot be steered onto the eavesdropper.
bool below_full_gain_threshold(const FarFieldGeometry& ff, double kd);

} // namespace nullsteer
