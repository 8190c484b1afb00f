#include "nullsteer/propagation.hpp"

#include <cmath>

#include "nullsteer/errors.hpp"

namespace nullsteer {

void RadioParams::validate() const
{
    if (!(nominal_power_mw > 0.0) || !std::isfinite(nominal_power_mw)) {
        throw InputError("nominal power must be positive");
    }
    if (!(wavenumber > 0.0) || !std::isfinite(wavenumber)) {
        throw InputError("wavenumber must be positive");
    }
}

ActivationSpec ActivationSpec::band(double lower, double upper)
{
    ActivationSpec spec{lower, upper, false};
    spec.validate();
    return spec;
}

ActivationSpec ActivationSpec::unclamped() { return {-100.0, -70.0, true}; }

void ActivationSpec::validate() const
{
    if (identity) {
        return;
    }
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
        throw InputError("activation band requires finite lower < upper");
    }
}

double fspl(double distance, double wavenumber)
{
    if (!(distance > 0.0)) {
        throw DegenerateGeometryError("path loss needs a positive distance");
    }
    const double kd = wavenumber * distance;
    return 1.0 / (4.0 * kd * kd);
}

double jamming_power_dbm(double gain, double distance, const RadioParams& radio)
{
    if (gain < 0.0 || std::isnan(gain)) {
        throw InputError("beampattern gain must be non-negative");
    }
    const double loss = fspl(distance, radio.wavenumber);
    if (gain == 0.0) {
        return kNullPower;
    }
    return 10.0 * std::log10(radio.nominal_power_mw) + 10.0 * std::log10(gain) + 10.0 * std::log10(loss);
}

double optimal_power_dbm(const PlanarPoint& eavesdropper, const PlanarPoint& uav, const FarFieldGeometry& ff,
                         const RadioParams& radio, double kd)
{
    const double range = norm(eavesdropper - uav);
    if (range == 0.0) {
        throw DegenerateGeometryError("UAV coincides with the eavesdropper");
    }
    return jamming_power_dbm(optimal_beampattern(ff, kd), range, radio);
}

double sigma(double dbm, const ActivationSpec& spec)
{
    if (spec.identity) {
        return dbm;
    }
    if (dbm < spec.lower) {
        return spec.lower;
    }
    if (dbm > spec.upper) {
        return spec.upper;
    }
    return dbm;
}

double sigma_prime(double dbm, const ActivationSpec& spec)
{
    if (spec.identity) {
        return 1.0;
    }
    return (dbm > spec.lower && dbm < spec.upper) ? 1.0 : 0.0;
}

} // namespace nullsteer
