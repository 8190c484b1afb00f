#pragma once

#include <span>
#include <string>
#include <vector>

#include "nullsteer/beamforming.hpp"
#include "nullsteer/propagation.hpp"
#include "nullsteer/vec2.hpp"

namespace nullsteer {

// Double-integrator state of the array center.
struct UavState {
    PlanarPoint position;
    Vec2 velocity;
};

struct Costate {
    Vec2 xi_p; // position costate
    Vec2 xi_v; // velocity costate
};

struct CostWeights {
    Vec2 r{1.0, 1.0};   // diagonal control penalty
    Mat2 q_r;           // running velocity penalty
    Mat2 q_f;           // terminal velocity penalty
    double a_r = 0.0;   // running jamming weight
    double a_f = 0.0;   // terminal jamming weight
    double u_bar = 1.0; // per-axis acceleration bound, m/s^2
    double t_f = 1.0;   // horizon, s

    void validate() const;
};

// Floors applied to the B* and L denominators of the costate flow.
struct Regularization {
    double b_star_floor = 1e-9;
    double fspl_floor = 1e-300;
};

// Frozen planning geometry: target positions, radio and array parameters.
struct Engagement {
    PlanarPoint client;
    PlanarPoint eavesdropper;
    RadioParams radio;
    double separation = 0.0; // D, m
    ActivationSpec activation;
    Regularization regularization;

    double kd() const { return radio.wavenumber * separation; }
    void validate() const;
};

// Everything the optimal beam yields at one UAV position.
struct JammingState {
    FarFieldGeometry ff;
    double b_star = 0.0;
    double range = 0.0;
    double fspl = 0.0;
    double power_dbm = kNullPower;
    bool in_case_one = true;
};

JammingState evaluate_jamming(const PlanarPoint& uav, const Engagement& eng);

struct AdjointTerms {
    double gamma = 0.0; // 10 sigma'(P*) / ln 10
    Vec2 grad_L;        // gradient of the path loss in the UAV position
    Vec2 grad_B;        // gradient of B*, zero outside case one
    bool in_case_one = true;
    double b_star = 0.0;
    double fspl = 0.0;
};

struct CostateRate {
    Vec2 d_xi_p;
    Vec2 d_xi_v;
};

/// Saturated minimizer of the Hamiltonian in u, per axis.
Vec2 control_from_costate(const Costate& costate, const CostWeights& weights);

/// Gradient of fspl(|p_e - p_g|) with respect to p_g.
Vec2 grad_fspl(const PlanarPoint& uav, const PlanarPoint& eavesdropper, double wavenumber);

/// Gradient of the case-one optimal beampattern with respect to p_g.
Vec2 grad_beampattern(const PlanarPoint& uav, const PlanarPoint& eavesdropper, const PlanarPoint& client,
                      double wavenumber, double separation);

AdjointTerms adjoint_terms(const UavState& state, const Engagement& eng);

CostateRate costate_flow(const UavState& state, const Costate& costate, const AdjointTerms& terms,
                         const CostWeights& weights, const Regularization& reg = {});

/// Transversality conditions at the final time.
Costate terminal_conditions(const UavState& state_tf, const Engagement& eng, const CostWeights& weights);

/// Trapezoidal cost over a mesh of states and controls plus the terminal terms.
/// Throws InputError when a control exceeds u_bar.
double evaluate_cost(std::span<const double> mesh, std::span<const UavState> states, std::span<const Vec2> controls,
                     const Engagement& eng, const CostWeights& weights);

/// Forward RK4 rollout of the double integrator under controls given at the
/// mesh nodes and interpolated linearly in between. Returns one state per node.
std::vector<UavState> rollout(const UavState& initial, std::span<const double> mesh, std::span<const Vec2> controls);

struct SolverOptions {
    double tolerance = 1e-6;        // max scaled defect
    int max_iterations = 200;       // Newton iterations across all stages
    int mesh_nodes = 201;
    int nodes_per_segment = 10;     // mesh intervals per shooting segment
    int max_refinements = 3;
    int max_mesh_nodes = 1601;
    int descent_iterations = 400;   // projected-gradient warm-up, 0 disables
    double length_scale = 1e3;      // m
};

struct BvpSolution {
    std::vector<double> mesh;
    std::vector<UavState> states;
    std::vector<Costate> costates;
    std::vector<Vec2> controls;
    double cost = 0.0;
    double max_defect = 0.0;
    bool converged = false;
    int iterations = 0;
    int descent_iterations = 0;
    std::string status;

    // Linear interpolation of the stored controls, held constant past the ends.
    Vec2 control_at(double t) const;
};

// Control profile on a time mesh, used to seed the solver.
struct InitialGuess {
    std::vector<double> mesh;
    std::vector<Vec2> controls;
};

/// Minimum-jerk path from the initial state to the client-eavesdropper
/// midpoint, bowed sideways so it does not stay on the client-eavesdropper line.
InitialGuess default_initial_guess(const UavState& initial, const Engagement& eng, const CostWeights& weights,
                                   int nodes = 201);

/// Guess built from a previous plan advanced by `shift` seconds; the tail past
/// the old horizon coasts with zero control.
InitialGuess shifted_guess(const BvpSolution& previous, double shift, double horizon, int nodes);

BvpSolution solve_bvp(const UavState& initial, const Engagement& eng, const CostWeights& weights,
                      const InitialGuess& guess, const SolverOptions& options = {});

BvpSolution solve_bvp(const UavState& initial, const Engagement& eng, const CostWeights& weights,
                      const SolverOptions& options = {});

} // namespace nullsteer
