#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "nullsteer/errors.hpp"
#include "nullsteer/optimizer.hpp"

namespace nullsteer {

namespace {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

UavState state_of(const Vec8& y) { return {{y[0], y[1]}, {y[2], y[3]}}; }
Costate costate_of(const Vec8& y) { return {{y[4], y[5]}, {y[6], y[7]}}; }

Vec8 pack(const UavState& s, const Costate& c)
{
    Vec8 y;
    y << s.position.x, s.position.y, s.velocity.x, s.velocity.y, c.xi_p.x, c.xi_p.y, c.xi_v.x, c.xi_v.y;
    return y;
}

// 0.5 * (|z + 1| - |z - 1|) with the kinks rounded off by `delta`.
double smooth_unit_clip(double z, double delta)
{
    return 0.5 * (std::sqrt((z + 1.0) * (z + 1.0) + delta * delta) - std::sqrt((z - 1.0) * (z - 1.0) + delta * delta));
}

Vec2 smoothed_control(const Vec2& xi_v, const CostWeights& w, double delta)
{
    if (delta <= 0.0) {
        return control_from_costate({{}, xi_v}, w);
    }
    return {w.u_bar * smooth_unit_clip(-xi_v.x / (w.r.x * w.u_bar), delta),
            w.u_bar * smooth_unit_clip(-xi_v.y / (w.r.y * w.u_bar), delta)};
}

Vec2 clamp_control(const Vec2& u, double bound)
{
    return {std::clamp(u.x, -bound, bound), std::clamp(u.y, -bound, bound)};
}

std::vector<double> uniform_mesh(double t_f, int nodes)
{
    std::vector<double> mesh(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
        mesh[static_cast<std::size_t>(i)] = t_f * static_cast<double>(i) / (nodes - 1);
    }
    mesh.back() = t_f;
    return mesh;
}

Vec2 interpolate(std::span<const double> mesh, std::span<const Vec2> values, double t)
{
    if (t <= mesh.front()) {
        return values.front();
    }
    if (t >= mesh.back()) {
        return values.back();
    }
    const auto it = std::upper_bound(mesh.begin(), mesh.end(), t);
    const auto i = static_cast<std::size_t>(it - mesh.begin());
    const double w = (t - mesh[i - 1]) / (mesh[i] - mesh[i - 1]);
    return (1.0 - w) * values[i - 1] + w * values[i];
}

// Costates along a fixed control profile, integrated backward from the
// transversality conditions. The state between nodes is the exact cubic of the
// double integrator under linearly interpolated control.
std::vector<Costate> sweep_costates(std::span<const double> mesh, std::span<const UavState> states,
                                    std::span<const Vec2> controls, const Engagement& eng, const CostWeights& w)
{
    const std::size_t n = mesh.size();
    std::vector<Costate> out(n);
    out[n - 1] = terminal_conditions(states[n - 1], eng, w);
    auto flow = [&](const UavState& s, const AdjointTerms& terms, const Costate& c) {
        return costate_flow(s, c, terms, w, eng.regularization);
    };
    auto axpy = [](const Costate& c, double a, const CostateRate& r) {
        return Costate{c.xi_p + a * r.d_xi_p, c.xi_v + a * r.d_xi_v};
    };
    AdjointTerms terms_hi = adjoint_terms(states[n - 1], eng);
    for (std::size_t i = n - 1; i-- > 0;) {
        const double h = mesh[i + 1] - mesh[i];
        const double s = 0.5 * h;
        const UavState& a = states[i];
        const Vec2 du = controls[i + 1] - controls[i];
        UavState mid;
        mid.velocity = a.velocity + s * controls[i] + (s * s / (2.0 * h)) * du;
        mid.position = a.position + s * a.velocity + (0.5 * s * s) * controls[i] + (s * s * s / (6.0 * h)) * du;
        const AdjointTerms terms_mid = adjoint_terms(mid, eng);
        const AdjointTerms terms_lo = adjoint_terms(a, eng);

        const Costate& c = out[i + 1];
        const CostateRate k1 = flow(states[i + 1], terms_hi, c);
        const CostateRate k2 = flow(mid, terms_mid, axpy(c, -s, k1));
        const CostateRate k3 = flow(mid, terms_mid, axpy(c, -s, k2));
        const CostateRate k4 = flow(a, terms_lo, axpy(c, -h, k3));
        out[i].xi_p = c.xi_p - (h / 6.0) * (k1.d_xi_p + 2.0 * k2.d_xi_p + 2.0 * k3.d_xi_p + k4.d_xi_p);
        out[i].xi_v = c.xi_v - (h / 6.0) * (k1.d_xi_v + 2.0 * k2.d_xi_v + 2.0 * k3.d_xi_v + k4.d_xi_v);
        terms_hi = terms_lo;
    }
    return out;
}

struct Trajectory {
    std::vector<UavState> states;
    std::vector<Costate> costates;
    std::vector<Vec2> controls;
    double cost = 0.0;
    int iterations = 0;
};

// Projected gradient descent on the nodal controls. The adjoint sweep supplies
// the gradient R u + xi_v; steps are accepted on an Armijo decrease of the cost.
Trajectory descend(const UavState& initial, const Engagement& eng, const CostWeights& w,
                   std::span<const double> mesh, std::vector<Vec2> u, int max_iterations)
{
    const std::size_t n = mesh.size();
    for (auto& c : u) {
        c = clamp_control(c, w.u_bar);
    }
    std::vector<double> weight(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double h = mesh[i] - mesh[i - 1];
        weight[i - 1] += 0.5 * h;
        weight[i] += 0.5 * h;
    }

    Trajectory tr;
    tr.states = rollout(initial, mesh, u);
    tr.cost = evaluate_cost(mesh, tr.states, u, eng, w);
    tr.costates = sweep_costates(mesh, tr.states, u, eng, w);
    tr.controls = u;

    double step = 1.0;
    int stalls = 0;
    std::vector<Vec2> direction(n);
    std::vector<Vec2> trial(n);
    for (int k = 0; k < max_iterations; ++k) {
        double projected = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            direction[i] = tr.controls[i] + Vec2{tr.costates[i].xi_v.x / w.r.x, tr.costates[i].xi_v.y / w.r.y};
            projected = std::max(projected, inf_norm(clamp_control(tr.controls[i] - direction[i], w.u_bar) - tr.controls[i]));
        }
        if (projected <= 1e-10 * w.u_bar) {
            break;
        }
        bool accepted = false;
        double a = std::min(1.0, 2.0 * step);
        std::vector<UavState> trial_states;
        double trial_cost = 0.0;
        for (int ls = 0; ls < 30 && !accepted; ++ls, a *= 0.5) {
            double slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = clamp_control(tr.controls[i] - a * direction[i], w.u_bar);
                const Vec2 du = trial[i] - tr.controls[i];
                slope += weight[i] * (w.r.x * direction[i].x * du.x + w.r.y * direction[i].y * du.y);
            }
            try {
                trial_states = rollout(initial, mesh, trial);
                trial_cost = evaluate_cost(mesh, trial_states, trial, eng, w);
            } catch (const DegenerateGeometryError&) {
                continue;
            }
            if (std::isfinite(trial_cost) && trial_cost <= tr.cost + 1e-4 * slope) {
                accepted = true;
                step = a;
            }
        }
        if (!accepted) {
            break;
        }
        const double decrease = tr.cost - trial_cost;
        tr.controls = trial;
        tr.states = std::move(trial_states);
        tr.cost = trial_cost;
        tr.costates = sweep_costates(mesh, tr.states, tr.controls, eng, w);
        tr.iterations = k + 1;
        stalls = decrease <= 1e-12 * (1.0 + std::abs(tr.cost)) ? stalls + 1 : 0;
        if (stalls >= 3) {
            break;
        }
    }
    return tr;
}

// Multiple shooting on the state/costate system. Unknowns are the scaled
// node values at segment starts (only the costate at t = 0).
class Shooting {
public:
    Shooting(const UavState& initial, const Engagement& eng, const CostWeights& w, const SolverOptions& opt,
             std::vector<double> mesh)
        : initial_(initial), eng_(eng), w_(w), opt_(opt), mesh_(std::move(mesh))
    {
        const double ls = opt.length_scale;
        const double ts = w.t_f;
        const double cv_x = w.r.x * ls / (ts * ts);
        const double cv_y = w.r.y * ls / (ts * ts);
        scale_ << ls, ls, ls / ts, ls / ts, cv_x / ts, cv_y / ts, cv_x, cv_y;

        const int intervals = static_cast<int>(mesh_.size()) - 1;
        const int per = std::max(1, opt.nodes_per_segment);
        for (int i = 0; i < intervals; i += per) {
            segment_times_.push_back(mesh_[static_cast<std::size_t>(i)]);
        }
        segment_times_.push_back(mesh_.back());
        locate_segments();
    }

    std::size_t segments() const { return bounds_.size() - 1; }
    std::size_t unknowns() const { return 4 + 8 * (segments() - 1); }
    const std::vector<double>& mesh() const { return mesh_; }
    int iterations() const { return iterations_; }
    void set_smoothing(double delta) { delta_ = delta; }
    const VectorXd& z() const { return z_; }
    void set_z(const VectorXd& z) { z_ = z; }

    void initialize(std::span<const UavState> states, std::span<const Costate> costates)
    {
        z_.resize(static_cast<Eigen::Index>(unknowns()));
        const Vec8 y0 = pack(states[0], costates[0]);
        for (int c = 0; c < 4; ++c) {
            z_[c] = y0[4 + c] / scale_[4 + c];
        }
        for (std::size_t j = 1; j < segments(); ++j) {
            const Vec8 y = pack(states[bounds_[j]], costates[bounds_[j]]);
            z_.segment<8>(static_cast<Eigen::Index>(4 + 8 * (j - 1))) = y.cwiseQuotient(scale_);
        }
    }

    // Newton solve at the current smoothing level. Returns true when the scaled
    // residual drops to `tol`.
    bool newton(double tol, int max_steps)
    {
        VectorXd f;
        if (!residual(z_, f)) {
            return false;
        }
        for (int step = 0;; ++step) {
            if (f.lpNorm<Eigen::Infinity>() <= tol) {
                return true;
            }
            if (step >= max_steps || iterations_ >= opt_.max_iterations) {
                return false;
            }
            ++iterations_;
            const MatrixXd jac = jacobian(z_, f);
            VectorXd dz = jac.partialPivLu().solve(-f);
            if (!dz.allFinite()) {
                dz = jac.colPivHouseholderQr().solve(-f);
            }
            const double merit = 0.5 * f.squaredNorm();
            VectorXd trial_f;
            bool accepted = false;
            if (dz.allFinite()) {
                double alpha = 1.0;
                for (int ls = 0; ls < 12 && !accepted; ++ls, alpha *= 0.5) {
                    const VectorXd trial = z_ + alpha * dz;
                    if (residual(trial, trial_f) && 0.5 * trial_f.squaredNorm() <= (1.0 - 1e-4 * alpha) * merit) {
                        z_ = trial;
                        accepted = true;
                    }
                }
            }
            if (!accepted) {
                // Levenberg-Marquardt fallback when the Newton direction fails.
                const MatrixXd normal = jac.transpose() * jac;
                const VectorXd grad = jac.transpose() * f;
                double lambda = 1e-6 * std::max(1.0, normal.diagonal().maxCoeff());
                for (int k = 0; k < 12 && !accepted; ++k, lambda *= 10.0) {
                    MatrixXd damped = normal;
                    damped.diagonal().array() += lambda;
                    const VectorXd trial = z_ + damped.ldlt().solve(-grad);
                    if (trial.allFinite() && residual(trial, trial_f) && 0.5 * trial_f.squaredNorm() < merit) {
                        z_ = trial;
                        accepted = true;
                    }
                }
            }
            if (!accepted) {
                return false;
            }
            f = trial_f;
        }
    }

    double defect() const
    {
        VectorXd f;
        if (!residual(z_, f)) {
            return std::numeric_limits<double>::infinity();
        }
        return f.lpNorm<Eigen::Infinity>();
    }

    // Bisects intervals whose step-doubling error estimate exceeds `limit`.
    // Returns false when nothing needed refinement or the node budget is spent.
    bool refine(double limit)
    {
        std::vector<double> refined;
        refined.reserve(mesh_.size() * 2);
        bool changed = false;
        const auto ys = unpack(z_);
        for (std::size_t j = 0; j < segments(); ++j) {
            Vec8 y = ys[j];
            for (std::size_t i = bounds_[j]; i < bounds_[j + 1]; ++i) {
                const double h = mesh_[i + 1] - mesh_[i];
                const Vec8 full = step(y, h);
                const Vec8 half = step(step(y, 0.5 * h), 0.5 * h);
                const double err = (full - half).cwiseQuotient(scale_).lpNorm<Eigen::Infinity>() / 15.0;
                refined.push_back(mesh_[i]);
                if (err > limit) {
                    refined.push_back(mesh_[i] + 0.5 * h);
                    changed = true;
                }
                y = half;
            }
        }
        refined.push_back(mesh_.back());
        if (!changed || static_cast<int>(refined.size()) > opt_.max_mesh_nodes) {
            return false;
        }
        mesh_ = std::move(refined);
        locate_segments();
        return true;
    }

    void collect(std::vector<UavState>& states, std::vector<Costate>& costates) const
    {
        states.clear();
        costates.clear();
        const auto ys = unpack(z_);
        for (std::size_t j = 0; j < segments(); ++j) {
            Vec8 y = ys[j];
            for (std::size_t i = bounds_[j]; i < bounds_[j + 1]; ++i) {
                states.push_back(state_of(y));
                costates.push_back(costate_of(y));
                y = step(y, mesh_[i + 1] - mesh_[i]);
            }
            if (j + 1 == segments()) {
                states.push_back(state_of(y));
                costates.push_back(costate_of(y));
            }
        }
    }

private:
    void locate_segments()
    {
        bounds_.clear();
        std::size_t i = 0;
        for (double t : segment_times_) {
            while (mesh_[i] != t) {
                ++i;
            }
            bounds_.push_back(i);
        }
    }

    Vec8 rhs(const Vec8& y) const
    {
        const UavState s = state_of(y);
        const Costate c = costate_of(y);
        const Vec2 u = smoothed_control(c.xi_v, w_, delta_);
        const CostateRate r = costate_flow(s, c, adjoint_terms(s, eng_), w_, eng_.regularization);
        Vec8 dy;
        dy << s.velocity.x, s.velocity.y, u.x, u.y, r.d_xi_p.x, r.d_xi_p.y, r.d_xi_v.x, r.d_xi_v.y;
        return dy;
    }

    Vec8 step(const Vec8& y, double h) const
    {
        const Vec8 k1 = rhs(y);
        const Vec8 k2 = rhs(y + 0.5 * h * k1);
        const Vec8 k3 = rhs(y + 0.5 * h * k2);
        const Vec8 k4 = rhs(y + h * k3);
        return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    Vec8 propagate(Vec8 y, std::size_t segment) const
    {
        for (std::size_t i = bounds_[segment]; i < bounds_[segment + 1]; ++i) {
            y = step(y, mesh_[i + 1] - mesh_[i]);
        }
        return y;
    }

    std::vector<Vec8> unpack(const VectorXd& z) const
    {
        std::vector<Vec8> ys(segments());
        Costate c0{{z[0] * scale_[4], z[1] * scale_[5]}, {z[2] * scale_[6], z[3] * scale_[7]}};
        ys[0] = pack(initial_, c0);
        for (std::size_t j = 1; j < segments(); ++j) {
            ys[j] = z.segment<8>(static_cast<Eigen::Index>(4 + 8 * (j - 1))).cwiseProduct(scale_);
        }
        return ys;
    }

    Eigen::Vector4d terminal_residual(const Vec8& end) const
    {
        const Costate target = terminal_conditions(state_of(end), eng_, w_);
        Eigen::Vector4d r;
        r << (end[4] - target.xi_p.x) / scale_[4], (end[5] - target.xi_p.y) / scale_[5],
            (end[6] - target.xi_v.x) / scale_[6], (end[7] - target.xi_v.y) / scale_[7];
        return r;
    }

    bool residual(const VectorXd& z, VectorXd& f) const
    {
        try {
            f.resize(static_cast<Eigen::Index>(unknowns()));
            const auto ys = unpack(z);
            const std::size_t m = segments();
            for (std::size_t j = 0; j + 1 < m; ++j) {
                const Vec8 end = propagate(ys[j], j);
                f.segment<8>(static_cast<Eigen::Index>(8 * j)) = (end - ys[j + 1]).cwiseQuotient(scale_);
            }
            f.tail<4>() = terminal_residual(propagate(ys[m - 1], m - 1));
        } catch (const Error&) {
            return false;
        }
        return f.allFinite();
    }

    MatrixXd jacobian(const VectorXd& z, const VectorXd& f) const
    {
        const auto n = static_cast<Eigen::Index>(unknowns());
        MatrixXd jac = MatrixXd::Zero(n, n);
        const auto ys = unpack(z);
        const std::size_t m = segments();
        auto column_of = [](std::size_t j, int c) {
            return static_cast<Eigen::Index>(j == 0 ? c - 4 : 4 + 8 * (j - 1) + static_cast<std::size_t>(c));
        };
        for (std::size_t j = 0; j < m; ++j) {
            const bool last = j + 1 == m;
            const auto row = static_cast<Eigen::Index>(8 * j);
            for (int c = (j == 0 ? 4 : 0); c < 8; ++c) {
                const Eigen::Index col = column_of(j, c);
                const double hz = 1e-7 * std::max(1.0, std::abs(z[col]));
                Vec8 y = ys[j];
                y[c] += hz * scale_[c];
                const Vec8 end = propagate(y, j);
                if (last) {
                    jac.block<4, 1>(row, col) = (terminal_residual(end) - f.tail<4>()) / hz;
                } else {
                    const Vec8 fj = (end - ys[j + 1]).cwiseQuotient(scale_);
                    jac.block<8, 1>(row, col) = (fj - f.segment<8>(row)) / hz;
                }
            }
            if (!last) {
                for (int c = 0; c < 8; ++c) {
                    jac(row + c, column_of(j + 1, c)) = -1.0;
                }
            }
        }
        return jac;
    }

    UavState initial_;
    const Engagement& eng_;
    const CostWeights& w_;
    const SolverOptions& opt_;
    std::vector<double> mesh_;
    std::vector<double> segment_times_;
    std::vector<std::size_t> bounds_;
    Vec8 scale_;
    double delta_ = 0.0;
    VectorXd z_;
    int iterations_ = 0;
};

} // namespace

BvpSolution solve_bvp(const UavState& initial, const Engagement& eng, const CostWeights& weights,
                      const InitialGuess& guess, const SolverOptions& options)
{
    eng.validate();
    weights.validate();
    if (options.mesh_nodes < 3 || !(options.tolerance > 0.0)) {
        throw InputError("solver needs at least three mesh nodes and a positive tolerance");
    }
    if (guess.mesh.size() < 2 || guess.controls.size() != guess.mesh.size()) {
        throw InputError("initial guess must carry one control per mesh node");
    }
    // Throws on a degenerate starting geometry.
    evaluate_jamming(initial.position, eng);

    const std::vector<double> mesh = uniform_mesh(weights.t_f, options.mesh_nodes);
    std::vector<Vec2> controls(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        controls[i] = interpolate(guess.mesh, guess.controls, mesh[i]);
    }
    const Trajectory warm = descend(initial, eng, weights, mesh, std::move(controls), options.descent_iterations);

    Shooting shooting(initial, eng, weights, options, mesh);
    shooting.initialize(warm.states, warm.costates);
    const Eigen::VectorXd start = shooting.z();

    BvpSolution sol;
    bool ok = shooting.newton(options.tolerance, options.max_iterations);
    if (!ok) {
        // Continuation on a rounded saturation, tightened toward the exact law.
        shooting.set_z(start);
        for (double delta : {0.3, 0.1, 0.03, 0.01, 0.003, 0.001}) {
            shooting.set_smoothing(delta);
            shooting.newton(std::max(1e-4, options.tolerance), 25);
        }
        shooting.set_smoothing(0.0);
        ok = shooting.newton(options.tolerance, options.max_iterations);
    }
    for (int round = 0; ok && round < options.max_refinements; ++round) {
        if (!shooting.refine(10.0 * options.tolerance)) {
            break;
        }
        ok = shooting.newton(options.tolerance, options.max_iterations);
    }

    sol.mesh = shooting.mesh();
    shooting.collect(sol.states, sol.costates);
    sol.controls.reserve(sol.costates.size());
    for (const auto& c : sol.costates) {
        sol.controls.push_back(control_from_costate(c, weights));
    }
    sol.max_defect = shooting.defect();
    sol.iterations = shooting.iterations();
    sol.descent_iterations = warm.iterations;
    sol.converged = ok && sol.max_defect <= options.tolerance;
    sol.status = sol.converged ? "converged" : "not converged";
    try {
        sol.cost = evaluate_cost(sol.mesh, sol.states, sol.controls, eng, weights);
    } catch (const Error&) {
        sol.cost = std::numeric_limits<double>::quiet_NaN();
        sol.converged = false;
        sol.status = "degenerate trajectory";
    }
    return sol;
}

BvpSolution solve_bvp(const UavState& initial, const Engagement& eng, const CostWeights& weights,
                      const SolverOptions& options)
{
    return solve_bvp(initial, eng, weights, default_initial_guess(initial, eng, weights, options.mesh_nodes), options);
}

} // namespace nullsteer
