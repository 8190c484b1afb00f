#include "nullsteer/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "nullsteer/errors.hpp"

namespace nullsteer {

namespace {

const double kLn10 = std::log(10.0);

double quintic_accel(double c3, double c4, double c5, double tau)
{
    return 6.0 * c3 * tau + 12.0 * c4 * tau * tau + 20.0 * c5 * tau * tau * tau;
}

Vec2 beampattern_gradient(const PlanarPoint& uav, const PlanarPoint& eavesdropper, const PlanarPoint& client,
                          const FarFieldGeometry& ff, double kd)
{
    const Vec2 to_c = client - uav;
    const Vec2 to_e = eavesdropper - uav;
    const double rc2 = squared_norm(to_c);
    const double re2 = squared_norm(to_e);
    // gradient of theta_c - theta_e with respect to the UAV position
    const Vec2 dtheta{to_c.y / rc2 - to_e.y / re2, -to_c.x / rc2 + to_e.x / re2};
    const double factor = 2.0 * kd * std::sin(2.0 * kd * ff.mu) * std::cos(ff.half_difference());
    return factor * dtheta;
}

} // namespace

void CostWeights::validate() const
{
    if (!(r.x > 0.0) || !(r.y > 0.0)) {
        throw InputError("control penalty R must be positive definite");
    }
    if (!q_r.is_symmetric_psd() || !q_f.is_symmetric_psd()) {
        throw InputError("velocity penalties must be symmetric positive semidefinite");
    }
    if (!(a_r >= 0.0) || !(a_f >= 0.0)) {
        throw InputError("jamming weights must be non-negative");
    }
    if (!(u_bar > 0.0) || !std::isfinite(u_bar)) {
        throw InputError("actuation bound must be positive");
    }
    if (!(t_f > 0.0) || !std::isfinite(t_f)) {
        throw InputError("horizon must be positive");
    }
}

void Engagement::validate() const
{
    radio.validate();
    activation.validate();
    if (!(separation > 0.0) || !std::isfinite(separation)) {
        throw InputError("antenna separation must be positive");
    }
    if (client == eavesdropper) {
        throw DegenerateGeometryError("client and eavesdropper coincide");
    }
}

JammingState evaluate_jamming(const PlanarPoint& uav, const Engagement& eng)
{
    JammingState js;
    js.ff = FarFieldGeometry::from_positions(uav, eng.client, eng.eavesdropper);
    js.b_star = optimal_beampattern(js.ff, eng.kd());
    js.in_case_one = below_full_gain_threshold(js.ff, eng.kd());
    js.range = norm(eng.eavesdropper - uav);
    js.fspl = fspl(js.range, eng.radio.wavenumber);
    js.power_dbm = jamming_power_dbm(js.b_star, js.range, eng.radio);
    return js;
}

Vec2 control_from_costate(const Costate& costate, const CostWeights& weights)
{
    auto axis = [&](double xi, double r) {
        const double unconstrained = -xi / r;
        if (std::abs(unconstrained) <= weights.u_bar) {
            return unconstrained;
        }
        return xi > 0.0 ? -weights.u_bar : weights.u_bar;
    };
    return {axis(costate.xi_v.x, weights.r.x), axis(costate.xi_v.y, weights.r.y)};
}

Vec2 grad_fspl(const PlanarPoint& uav, const PlanarPoint& eavesdropper, double wavenumber)
{
    const Vec2 d = eavesdropper - uav;
    const double r2 = squared_norm(d);
    if (r2 == 0.0) {
        throw DegenerateGeometryError("UAV coincides with the eavesdropper");
    }
    return d / (2.0 * wavenumber * wavenumber * r2 * r2);
}

Vec2 grad_beampattern(const PlanarPoint& uav, const PlanarPoint& eavesdropper, const PlanarPoint& client,
                      double wavenumber, double separation)
{
    const auto ff = FarFieldGeometry::from_positions(uav, client, eavesdropper);
    return beampattern_gradient(uav, eavesdropper, client, ff, wavenumber * separation);
}

AdjointTerms adjoint_terms(const UavState& state, const Engagement& eng)
{
    const JammingState js = evaluate_jamming(state.position, eng);
    AdjointTerms terms;
    terms.gamma = 10.0 * sigma_prime(js.power_dbm, eng.activation) / kLn10;
    terms.in_case_one = js.in_case_one;
    terms.b_star = js.b_star;
    terms.fspl = js.fspl;
    terms.grad_L = grad_fspl(state.position, eng.eavesdropper, eng.radio.wavenumber);
    if (js.in_case_one) {
        terms.grad_B = beampattern_gradient(state.position, eng.eavesdropper, eng.client, js.ff, eng.kd());
    }
    return terms;
}

namespace {

// d P* / d p_g up to the 10/ln10 factor, with floored denominators.
Vec2 log_power_gradient(const AdjointTerms& terms, const Regularization& reg)
{
    Vec2 g = terms.grad_L / std::max(terms.fspl, reg.fspl_floor);
    if (terms.in_case_one) {
        g += terms.grad_B / std::max(terms.b_star, reg.b_star_floor);
    }
    return g;
}

} // namespace

CostateRate costate_flow(const UavState& state, const Costate& costate, const AdjointTerms& terms,
                         const CostWeights& weights, const Regularization& reg)
{
    CostateRate rate;
    if (weights.a_r != 0.0 && terms.gamma != 0.0) {
        rate.d_xi_p = (weights.a_r * terms.gamma) * log_power_gradient(terms, reg);
    }
    rate.d_xi_v = -costate.xi_p - weights.q_r * state.velocity;
    return rate;
}

Costate terminal_conditions(const UavState& state_tf, const Engagement& eng, const CostWeights& weights)
{
    Costate c;
    c.xi_v = weights.q_f * state_tf.velocity;
    const AdjointTerms terms = adjoint_terms(state_tf, eng);
    if (weights.a_f != 0.0 && terms.gamma != 0.0) {
        c.xi_p = (-weights.a_f * terms.gamma) * log_power_gradient(terms, eng.regularization);
    }
    return c;
}

double evaluate_cost(std::span<const double> mesh, std::span<const UavState> states, std::span<const Vec2> controls,
                     const Engagement& eng, const CostWeights& weights)
{
    if (mesh.size() < 2 || states.size() != mesh.size() || controls.size() != mesh.size()) {
        throw InputError("cost evaluation needs matching mesh, state and control arrays");
    }
    const double bound = weights.u_bar * (1.0 + 1e-12) + 1e-12;
    const double r_x = weights.r.x;
    const double r_y = weights.r.y;
    auto running = [&](std::size_t i) {
        const Vec2& u = controls[i];
        if (std::abs(u.x) > bound || std::abs(u.y) > bound) {
            throw InputError("control exceeds the actuation bound");
        }
        double l = 0.5 * (r_x * u.x * u.x + r_y * u.y * u.y) + 0.5 * weights.q_r.quadratic(states[i].velocity);
        if (weights.a_r != 0.0) {
            l -= weights.a_r * sigma(evaluate_jamming(states[i].position, eng).power_dbm, eng.activation);
        }
        return l;
    };
    double total = 0.0;
    double prev = running(0);
    for (std::size_t i = 1; i < mesh.size(); ++i) {
        const double h = mesh[i] - mesh[i - 1];
        if (!(h > 0.0)) {
            throw InputError("cost mesh must be strictly increasing");
        }
        const double cur = running(i);
        total += 0.5 * h * (prev + cur);
        prev = cur;
    }
    const UavState& last = states.back();
    total += 0.5 * weights.q_f.quadratic(last.velocity);
    if (weights.a_f != 0.0) {
        total -= weights.a_f * sigma(evaluate_jamming(last.position, eng).power_dbm, eng.activation);
    }
    return total;
}

std::vector<UavState> rollout(const UavState& initial, std::span<const double> mesh, std::span<const Vec2> controls)
{
    if (controls.size() != mesh.size()) {
        throw InputError("rollout needs one control per mesh node");
    }
    std::vector<UavState> out;
    out.reserve(mesh.size());
    if (mesh.empty()) {
        return out;
    }
    out.push_back(initial);
    for (std::size_t i = 1; i < mesh.size(); ++i) {
        const double h = mesh[i] - mesh[i - 1];
        const UavState& s = out.back();
        const Vec2 u0 = controls[i - 1];
        const Vec2 u1 = controls[i];
        const Vec2 um = 0.5 * (u0 + u1);
        // RK4 on p' = v, v' = u(t)
        const Vec2 k1p = s.velocity;
        const Vec2 k1v = u0;
        const Vec2 k2p = s.velocity + 0.5 * h * k1v;
        const Vec2 k2v = um;
        const Vec2 k3p = s.velocity + 0.5 * h * k2v;
        const Vec2 k3v = um;
        const Vec2 k4p = s.velocity + h * k3v;
        const Vec2 k4v = u1;
        UavState next;
        next.position = s.position + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        next.velocity = s.velocity + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        out.push_back(next);
    }
    return out;
}

InitialGuess default_initial_guess(const UavState& initial, const Engagement& eng, const CostWeights& weights,
                                   int nodes)
{
    if (nodes < 2) {
        throw InputError("initial guess needs at least two nodes");
    }
    const double T = weights.t_f;
    const PlanarPoint target = 0.5 * (eng.client + eng.eavesdropper);
    const Vec2 chord = target - initial.position;
    const double length = norm(chord);

    // Sideways bow, zero in position and velocity at both ends. The side is
    // chosen with a positive x component (negative y on a tie).
    Vec2 side;
    if (length > 0.0) {
        side = Vec2{chord.y, -chord.x} / length;
        if (side.x < 0.0 || (side.x == 0.0 && side.y > 0.0)) {
            side = -side;
        }
    }
    const double bow = 0.25 * length;

    // Quintic per axis: p(0)=p0, p'(0)=v0 T, p''(0)=0, p(1)=target, p'(1)=p''(1)=0.
    auto coefficients = [&](double p0, double v0, double p1) {
        const double a = p1 - p0 - v0 * T;
        const double b = -v0 * T;
        return std::array<double, 3>{10.0 * a - 4.0 * b, 7.0 * b - 15.0 * a, 6.0 * a - 3.0 * b};
    };
    const auto cx = coefficients(initial.position.x, initial.velocity.x, target.x);
    const auto cy = coefficients(initial.position.y, initial.velocity.y, target.y);

    InitialGuess guess;
    guess.mesh.resize(static_cast<std::size_t>(nodes));
    guess.controls.resize(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
        const double tau = static_cast<double>(i) / (nodes - 1);
        const double bow_accel = 16.0 * bow * (2.0 - 12.0 * tau + 12.0 * tau * tau);
        Vec2 u{quintic_accel(cx[0], cx[1], cx[2], tau), quintic_accel(cy[0], cy[1], cy[2], tau)};
        u += bow_accel * side;
        u = u / (T * T);
        u.x = std::clamp(u.x, -weights.u_bar, weights.u_bar);
        u.y = std::clamp(u.y, -weights.u_bar, weights.u_bar);
        guess.mesh[static_cast<std::size_t>(i)] = T * tau;
        guess.controls[static_cast<std::size_t>(i)] = u;
    }
    guess.mesh.back() = T;
    return guess;
}

Vec2 BvpSolution::control_at(double t) const
{
    if (mesh.empty()) {
        return {};
    }
    if (t <= mesh.front()) {
        return controls.front();
    }
    if (t >= mesh.back()) {
        return controls.back();
    }
    const auto it = std::upper_bound(mesh.begin(), mesh.end(), t);
    const auto i = static_cast<std::size_t>(it - mesh.begin());
    const double w = (t - mesh[i - 1]) / (mesh[i] - mesh[i - 1]);
    return (1.0 - w) * controls[i - 1] + w * controls[i];
}

InitialGuess shifted_guess(const BvpSolution& previous, double shift, double horizon, int nodes)
{
    if (nodes < 2 || !(horizon > 0.0)) {
        throw InputError("shifted guess needs a positive horizon and at least two nodes");
    }
    InitialGuess guess;
    guess.mesh.resize(static_cast<std::size_t>(nodes));
    guess.controls.resize(static_cast<std::size_t>(nodes));
    const double end = previous.mesh.empty() ? 0.0 : previous.mesh.back();
    for (int i = 0; i < nodes; ++i) {
        const double t = horizon * static_cast<double>(i) / (nodes - 1);
        guess.mesh[static_cast<std::size_t>(i)] = t;
        guess.controls[static_cast<std::size_t>(i)] = (t + shift <= end) ? previous.control_at(t + shift) : Vec2{};
    }
    guess.mesh.back() = horizon;
    return guess;
}

} // namespace nullsteer
