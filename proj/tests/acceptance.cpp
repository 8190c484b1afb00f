// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "nullsteer/report.hpp"

using namespace nullsteer;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double rel_err(Vec2 a, Vec2 b) { return norm(a - b) / std::max(norm(b), 1e-300); }

template <class F>
Vec2 central_gradient(F f, PlanarPoint p, double h)
{
    return {(f({p.x + h, p.y}) - f({p.x - h, p.y})) / (2 * h), (f({p.x, p.y + h}) - f({p.x, p.y - h})) / (2 * h)};
}

PlanarPoint at_bearing(PlanarPoint from, double angle, double range)
{
    return {from.x + range * std::cos(angle), from.y + range * std::sin(angle)};
}

Outcome null_depth()
{
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const double k = std::pow(10.0, 2 * (u(rng) + 1) / 2);
        const double lambda = 2 * pi / k;
        const ArrayGeometry g({1e4 * u(rng), 1e4 * u(rng)}, pi * u(rng), lambda * (0.2 + 0.9 * (u(rng) + 1)), k);
        const PlanarPoint client = at_bearing(g.center, pi * u(rng), std::pow(10.0, 4 * (u(rng) + 1) / 2));
        const double phi1 = 1e3 * u(rng);
        worst = std::max(worst, beampattern(client, g, phi1, nulling_phase(phi1, client, g)));
    }
    return {worst <= 1e-12, fmt("max client gain %.3g over 1e4 draws", worst)};
}

Outcome orientation_oracle()
{
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst_gap = 0, worst_branch = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto ff = FarFieldGeometry::from_bearings(pi * u(rng), pi * u(rng));
        const double kd = 0.1 + (4 * pi - 0.1) * (u(rng) + 1) / 2;
        double grid = 0;
        for (int j = 0; j < 3601; ++j) {
            grid = std::max(grid, far_field_beampattern(ff, -pi + 2 * pi * j / 3600.0, kd));
        }
        const double best = far_field_beampattern(ff, optimal_orientation(ff, kd), kd);
        worst_gap = std::max(worst_gap, grid - best);
        const auto [p, m] = orientation_branches(ff, kd);
        worst_branch = std::max(worst_branch, std::abs(far_field_beampattern(ff, p, kd) - far_field_beampattern(ff, m, kd)));
    }
    return {worst_gap <= 1e-6 && worst_branch <= 1e-12,
            fmt("grid excess %.3g, branch gap %.3g", worst_gap, worst_branch)};
}

Outcome gradient_fidelity()
{
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(-1, 1);
    const double k = fixtures::wavenumber();
    const double d = fixtures::half_wave();
    const double h = 1e-3;
    double e_l = 0, e_b = 0, e_h = 0;
    int n_l = 0, n_b = 0, n_h = 0;
    while (n_l < 1000 || n_b < 1000 || n_h < 1000) {
        const PlanarPoint client{8000 * u(rng), 8000 * u(rng)};
        const PlanarPoint eaves{8000 * u(rng), 8000 * u(rng)};
        const UavState s{{8000 * u(rng), 8000 * u(rng)}, {3 * u(rng), 3 * u(rng)}};
        if (norm(s.position - client) < 100 || norm(s.position - eaves) < 100) {
            continue;
        }
        if (n_l < 1000) {
            ++n_l;
            const Vec2 fd = central_gradient([&](PlanarPoint p) { return fspl(norm(eaves - p), k); }, s.position, h);
            e_l = std::max(e_l, rel_err(grad_fspl(s.position, eaves, k), fd));
        }
        const auto ff = FarFieldGeometry::from_positions(s.position, client, eaves);
        const double thr = pi / (2 * k * d);
        if (n_b < 1000 && std::abs(ff.mu) < 0.95 * thr) {
            ++n_b;
            const Vec2 fd = central_gradient(
                [&](PlanarPoint p) { return optimal_beampattern(FarFieldGeometry::from_positions(p, client, eaves), k * d); },
                s.position, h);
            e_b = std::max(e_b, rel_err(grad_beampattern(s.position, eaves, client, k, d), fd));
        }
        const Engagement eng = fixtures::engagement(client, eaves);
        const auto j = evaluate_jamming(s.position, eng);
        if (n_h < 1000 && j.power_dbm > -99.9 && j.power_dbm < -70.1 && std::abs(std::abs(ff.mu) - thr) > 1e-4 &&
            std::abs(ff.mu) > 1e-3) {
            ++n_h;
            const CostWeights w = fixtures::reference_weights(300);
            const Costate xi{{u(rng), u(rng)}, {u(rng), u(rng)}};
            const Vec2 uc{u(rng), u(rng)};
            auto ham = [&](PlanarPoint p, Vec2 v) {
                return 0.5 * (w.r.x * uc.x * uc.x + w.r.y * uc.y * uc.y) + 0.5 * w.q_r.quadratic(v) -
                       w.a_r * sigma(evaluate_jamming(p, eng).power_dbm, eng.activation) + dot(xi.xi_p, v) +
                       dot(xi.xi_v, uc);
            };
            const CostateRate r = costate_flow(s, xi, adjoint_terms(s, eng), w);
            const Vec2 hp = central_gradient([&](PlanarPoint p) { return ham(p, s.velocity); }, s.position, h);
            const Vec2 hv = central_gradient([&](PlanarPoint v) { return ham(s.position, v); }, s.velocity, h);
            e_h = std::max({e_h, rel_err(r.d_xi_p, -1.0 * hp), rel_err(r.d_xi_v, -1.0 * hv)});
        }
    }
    return {e_l <= 1e-5 && e_b <= 1e-5 && e_h <= 1e-5,
            fmt("path loss %.3g, beampattern %.3g, costate flow %.3g", e_l, e_b, e_h)};
}

const BvpSolution& static_plan()
{
    static const BvpSolution sol = [] {
        const auto m = fixtures::static_scenario();
        return solve_bvp(m.uav_initial, m.engagement_at(0), m.weights);
    }();
    return sol;
}

Outcome static_engagement()
{
    const auto m = fixtures::static_scenario();
    const BvpSolution& sol = static_plan();
    const TrajectoryLog log = execute_plan(m, sol, 0.1);
    const auto cross = first_crossing(log.samples, -90.0);
    double gmax = 0, umax = 0;
    for (const LogSample& s : log.samples) {
        gmax = std::max(gmax, s.gain_at_client);
        umax = std::max(umax, inf_norm(s.control));
    }
    for (const Vec2& u : sol.controls) {
        umax = std::max(umax, inf_norm(u));
    }
    const double final_power = log.samples.back().power_at_eavesdropper;
    const bool pass = sol.converged && cross && *cross < 300 && final_power >= -90 && gmax <= 1e-12 && umax <= 2.0;
    return {pass, fmt("converged %g, -90 dBm at %.2f s, final %.2f dBm, max |u| %.3f", sol.converged ? 1 : 0,
                      cross ? *cross : -1, final_power, umax) +
                      fmt(", client gain %.3g", gmax)};
}

Outcome local_optimality()
{
    const auto m = fixtures::static_scenario();
    const Engagement eng = m.engagement_at(0);
    const BvpSolution& sol = static_plan();
    const double t_f = sol.mesh.back();
    const double nominal = evaluate_cost(sol.mesh, rollout(m.uav_initial, sol.mesh, sol.controls), sol.controls, eng, m.weights);
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 1e300;
    for (int trial = 0; trial < 100; ++trial) {
        const double amp = std::pow(10.0, -3 + 2 * (u(rng) + 1) / 2); // 1e-3 .. 1e-1 m/s^2
        double a[2][3], ph[2][3];
        for (auto& row : a) for (double& x : row) x = amp * u(rng);
        for (auto& row : ph) for (double& x : row) x = pi * u(rng);
        std::vector<Vec2> controls = sol.controls;
        for (std::size_t i = 0; i < controls.size(); ++i) {
            const double s = sol.mesh[i] / t_f;
            double dx = 0, dy = 0;
            for (int k = 0; k < 3; ++k) {
                dx += a[0][k] * std::sin((k + 1) * pi * s + ph[0][k]);
                dy += a[1][k] * std::sin((k + 1) * pi * s + ph[1][k]);
            }
            controls[i].x = std::clamp(controls[i].x + dx, -m.weights.u_bar, m.weights.u_bar);
            controls[i].y = std::clamp(controls[i].y + dy, -m.weights.u_bar, m.weights.u_bar);
        }
        const double j = evaluate_cost(sol.mesh, rollout(m.uav_initial, sol.mesh, controls), controls, eng, m.weights);
        worst = std::min(worst, (j - nominal) / std::abs(nominal));
    }
    return {worst >= -1e-4, fmt("J* %.6f, smallest relative increase %.3g", nominal, worst)};
}

Outcome receding_engagement()
{
    const auto m = fixtures::moving_scenario();
    const TrajectoryLog log = receding_horizon(m, fixtures::moving_options());
    double gmax = 0, umax = 0, slowest = 0;
    int converged = 0;
    for (const LogSample& s : log.samples) {
        gmax = std::max(gmax, s.gain_at_client);
        umax = std::max(umax, inf_norm(s.control));
    }
    for (const ReplanRecord& r : log.replans) {
        slowest = std::max(slowest, r.solve_seconds);
        converged += r.converged ? 1 : 0;
    }
    const auto c100 = first_crossing(log.samples, -100);
    const auto c90 = first_crossing(log.samples, -90);
    const bool pass = log.replans.size() == 50 && gmax <= 1e-12 && umax <= 2.0 && c100 && c90 && *c100 < *c90 &&
                      *c100 >= 30 && *c90 <= 600 && slowest < 1.0;
    return {pass, fmt("%g replans (%g converged), -100 dBm at %.1f s, -90 dBm at %.1f s", double(log.replans.size()),
                      converged, c100 ? *c100 : -1, c90 ? *c90 : -1) +
                      fmt(", slowest solve %.3f s, client gain %.3g", slowest, gmax)};
}

Outcome far_field_validity()
{
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> u(-1, 1);
    const double k = fixtures::wavenumber();
    const double d = fixtures::half_wave();
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const PlanarPoint uav{1e4 * u(rng), 1e4 * u(rng)};
        const PlanarPoint client = at_bearing(uav, pi * u(rng), std::pow(10.0, 2 + 2 * (u(rng) + 1) / 2));
        const PlanarPoint eaves = at_bearing(uav, pi * u(rng), std::pow(10.0, 2 + 2 * (u(rng) + 1) / 2));
        const auto ff = FarFieldGeometry::from_positions(uav, client, eaves);
        const double tg = (i % 2) ? pi * u(rng) : optimal_orientation(ff, k * d);
        const ArrayGeometry g(uav, tg, d, k);
        const double exact = beampattern(eaves, g, 0.0, nulling_phase(0.0, client, g));
        const double approx = far_field_beampattern(ff, tg, k * d);
        worst = std::max(worst, std::abs(exact - approx) / exact);
    }
    return {worst <= 1e-3, fmt("worst relative error %.3g at ranges 100 m .. 10 km", worst)};
}

Outcome no_incentive()
{
    std::mt19937_64 rng(108);
    std::uniform_real_distribution<double> u(-1, 1);
    double umax = 0, jmax = 0;
    bool all = true;
    for (int i = 0; i < 5; ++i) {
        auto m = fixtures::static_scenario();
        if (i > 0) {
            m.client = TargetMotion::fixed({5000 * u(rng), 5000 * u(rng)});
            m.eavesdropper = TargetMotion::fixed({5000 * u(rng), 5000 * u(rng)});
            m.uav_initial.position = {3000 * u(rng), 3000 * u(rng)};
            m.weights = fixtures::reference_weights(50 + 250 * (u(rng) + 1));
        }
        m.weights.a_r = 0;
        m.weights.a_f = 0;
        const BvpSolution sol = solve_bvp(m.uav_initial, m.engagement_at(0), m.weights);
        all = all && sol.converged;
        for (const Vec2& c : sol.controls) {
            umax = std::max(umax, inf_norm(c));
        }
        jmax = std::max(jmax, std::abs(sol.cost));
    }
    return {all && umax <= 1e-6 && jmax <= 1e-6, fmt("max |u| %.3g, max |J*| %.3g", umax, jmax)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / "nullsteer_acceptance";
    fs::remove_all(root);
    ScenarioFile stat;
    stat.mission = fixtures::static_scenario();
    ScenarioFile mov;
    mov.mission = fixtures::moving_scenario();
    for (int rep = 0; rep < 2; ++rep) {
        run_plan(stat, root / ("plan" + std::to_string(rep)));
        run_simulate(mov, fixtures::moving_options(), root / ("sim" + std::to_string(rep)));
    }
    int files = 0;
    bool same = true;
    for (const char* run : {"plan", "sim"}) {
        for (const char* f : {"trajectory.csv", "snapshots.csv", "summary.json"}) {
            const std::string a = slurp(root / (std::string(run) + "0") / f);
            const std::string b = slurp(root / (std::string(run) + "1") / f);
            same = same && !a.empty() && a == b;
            ++files;
        }
    }
    fs::remove_all(root);
    return {same, fmt("%g file pairs compared", files)};
}

struct Criterion {
    int id;
    const char* name;
    double budget; // s
    std::function<Outcome()> run;
};

} // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "null depth at the client", 5, null_depth},
        {2, "closed-form orientation vs grid search", 30, orientation_oracle},
        {3, "analytic gradients vs finite differences", 10, gradient_fidelity},
        {4, "static engagement", 60, static_engagement},
        {5, "local optimality under perturbation", 60, local_optimality},
        {6, "receding-horizon engagement with moving targets", 300, receding_engagement},
        {7, "far-field approximation beyond 100 m", 60, far_field_validity},
        {8, "no jamming incentive", 60, no_incentive},
        {9, "byte-identical repeated runs", 600, determinism},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs < c.budget;
        failed += pass ? 0 : 1;
        std::printf("%s criterion %d: %s: %s (%.2f s, budget %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
