#pragma once

#include <limits>

#include "nullsteer/beamforming.hpp"

namespace nullsteer {

// Power of a perfect null. Compares below every finite dBm value.
inline constexpr double kNullPower = -std::numeric_limits<double>::infinity();

inline bool is_null_power(double dbm) { return dbm == kNullPower; }

struct RadioParams {
    double nominal_power_mw = 0.0; // P0, per antenna
    double wavenumber = 0.0;       // k, rad/m

    void validate() const;
};

// Service-denial activation: clamp to [lower, upper] dBm, or the identity.
struct ActivationSpec {
    double lower = -100.0;
    double upper = -70.0;
    bool identity = false;

    static ActivationSpec band(double lower, double upper);
    static ActivationSpec unclamped();
    void validate() const;
};

/// Free-space path loss 1/(4 k^2 d^2).
double fspl(double distance, double wavenumber);

/// 10log10(P0) + 10log10(gain) + 10log10(fspl). Zero gain maps to kNullPower.
double jamming_power_dbm(double gain, double distance, const RadioParams& radio);

/// Received power at the eavesdropper with the optimal beampattern applied.
double optimal_power_dbm(const PlanarPoint& eavesdropper, const PlanarPoint& uav, const FarFieldGeometry& ff,
                         const RadioParams& radio, double kd);

double sigma(double dbm, const ActivationSpec& spec);

// 1 strictly inside the band, 0 elsewhere (including the breakpoints).
double sigma_prime(double dbm, const ActivationSpec& spec);

} // namespace nullsteer
