#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "nullsteer/errors.hpp"
#include "nullsteer/report.hpp"
#include "nullsteer/scenario.hpp"

using namespace nullsteer;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

const fs::path kSource = NULLSTEER_SOURCE_DIR;

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("nullsteer_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

const char* kMinimal = R"({
  "client": {"kind": "static", "position": [3000, 3000]},
  "eavesdropper": {"kind": "static", "position": [6000, 6000]},
  "uav_initial": {"position": [0, 0], "velocity": [0, 0]},
  "frequency": 1575420000,
  "antenna_separation": "half-wavelength",
  "nominal_power": 600,
  "weights": {"r": 1, "q_r": 0.001, "q_f": 0, "a_r": 0.01, "a_f": 0, "u_bar": 2, "t_f": 300},
  "activation": {"lower": -100, "upper": -70}
})";

ScenarioError::Kind kind_of(const std::string& text)
{
    try {
        parse_scenario(text);
    } catch (const ScenarioError& e) {
        return e.kind();
    }
    FAIL("scenario was accepted");
    return ScenarioError::Kind::Parse;
}

std::string with(const std::string& from, const std::string& to)
{
    std::string s = kMinimal;
    const auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    s.replace(at, from.size(), to);
    return s;
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(NULLSTEER_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_SUITE("scenario_io")
{
    TEST_CASE("static scenario file")
    {
        const ScenarioFile sc = load_scenario(kSource / "scenarios/static.json");
        const MissionScenario& m = sc.mission;
        CHECK(m.client.position_at(0) == PlanarPoint{3000, 3000});
        CHECK(m.eavesdropper.position_at(0) == PlanarPoint{6000, 6000});
        CHECK(*sc.frequency_hz == 1575.42e6);
        CHECK(m.radio.nominal_power_mw == 600);
        CHECK(m.weights.u_bar == 2);
        CHECK(sc.wavelength() == doctest::Approx(0.19029).epsilon(1e-5));
        CHECK(m.separation == doctest::Approx(0.09515).epsilon(1e-4));
        CHECK(m.separation * m.radio.wavenumber == doctest::Approx(pi).epsilon(1e-15));

        const MissionScenario ref = fixtures::static_scenario();
        CHECK(m.weights.r.x == doctest::Approx(ref.weights.r.x).epsilon(1e-15));
        CHECK(m.weights.q_r.xx == doctest::Approx(ref.weights.q_r.xx).epsilon(1e-15));
        CHECK(m.weights.a_r == doctest::Approx(ref.weights.a_r).epsilon(1e-15));
        CHECK(m.weights.t_f == ref.weights.t_f);
    }

    TEST_CASE("moving scenario file")
    {
        const ScenarioFile sc = load_scenario(kSource / "scenarios/moving.json");
        CHECK(sc.mission.client.position_at(100) == PlanarPoint{6000, 500});
        CHECK(sc.mission.eavesdropper.position_at(100) == PlanarPoint{10000, 500});
        CHECK(*sc.simulation.total == 1000);
        CHECK(*sc.simulation.horizon == 150);
    }

    TEST_CASE("each validation failure has its own kind")
    {
        using K = ScenarioError::Kind;
        CHECK_NOTHROW(parse_scenario(kMinimal));
        CHECK(kind_of("{ not json") == K::Parse);
        CHECK(kind_of(with("\"frequency\": 1575420000,", "\"frequency\": 1575420000, \"wavelength\": 0.19,")) ==
              K::ExclusiveFields);
        CHECK(kind_of(with("\"frequency\": 1575420000,", "")) == K::MissingField);
        CHECK(kind_of(with("\"nominal_power\": 600,", "")) == K::MissingField);
        CHECK(kind_of(with("\"nominal_power\": 600,", "\"nominal_power\": 600, \"colour\": 1,")) == K::UnknownKey);
        CHECK(kind_of(with("\"t_f\": 300", "\"t_f\": 300, \"extra\": 0")) == K::UnknownKey);
        CHECK(kind_of(with("\"nominal_power\": 600", "\"nominal_power\": 0")) == K::NonPositive);
        CHECK(kind_of(with("\"u_bar\": 2", "\"u_bar\": -2")) == K::NonPositive);
        CHECK(kind_of(with("\"frequency\": 1575420000", "\"frequency\": -5")) == K::NonPositive);
        CHECK(kind_of(with("\"kind\": \"static\"", "\"kind\": \"teleport\"")) == K::InvalidValue);
        CHECK(kind_of(with("\"lower\": -100", "\"lower\": -60")) == K::InvalidValue);

        try {
            parse_scenario(with("\"u_bar\": 2", "\"u_bar\": -2"));
        } catch (const ScenarioError& e) {
            CHECK(e.field() == "weights.u_bar");
            CHECK(std::string(e.what()).find("weights.u_bar") != std::string::npos);
        }
    }

    TEST_CASE("wavelength, identity activation and matrix weights")
    {
        const ScenarioFile a =
            parse_scenario(with("\"activation\": {\"lower\": -100, \"upper\": -70}", "\"activation\": \"identity\""));
        CHECK(a.mission.activation.identity);

        std::string t = kMinimal;
        t.replace(t.find("\"frequency\": 1575420000"), 23, "\"wavelength\": 0.2");
        t.replace(t.find("\"q_r\": 0.001"), 12, "\"q_r\": [[2, 1], [1, 3]]");
        t.replace(t.find("\"r\": 1"), 6, "\"r\": [1, 4]");
        const ScenarioFile b = parse_scenario(t);
        CHECK(b.wavelength() == 0.2);
        CHECK(b.mission.separation == 0.1);
        CHECK(b.mission.weights.q_r.xy == 1);
        CHECK(b.mission.weights.r.y == 4);

        std::string u = kMinimal;
        u.replace(u.find("\"q_r\": 0.001"), 12, "\"q_r\": [[1, 3], [3, 1]]");
        CHECK(kind_of(u) == ScenarioError::Kind::InvalidValue);
    }

    TEST_CASE("trajectory file format")
    {
        const fs::path dir = scratch_dir("traj");
        TrajectoryLog one;
        LogSample s;
        s.t = 0.1;
        s.state = {{1.0 / 3, -2e-300}, {5e300, 0}};
        s.control = {0.7, -0.2};
        s.beam = {7.0, -9.0, 4.0};
        s.gain_at_eavesdropper = 3.9999999999999996;
        s.power_at_eavesdropper = -81.17;
        one.samples.push_back(s);
        write_trajectory(one, dir / "one.csv");
        const std::string text = slurp(dir / "one.csv");
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
        CHECK(text.rfind("t,x_g,y_g,vx,vy,ux,uy,phi1,phi2,theta_g,gain_e,gain_c,power_e_dbm,power_c_dbm\n", 0) == 0);
        CHECK(text.find(",-inf\n") != std::string::npos);

        const TrajectoryTable back = read_trajectory(dir / "one.csv");
        REQUIRE(back.rows.size() == 1);
        CHECK(bits_equal(back.rows[0][1], 1.0 / 3));
        CHECK(bits_equal(back.rows[0][2], -2e-300));
        CHECK(bits_equal(back.rows[0][3], 5e300));
        CHECK(bits_equal(back.rows[0][7], wrap_angle(7.0)));
        CHECK(bits_equal(back.rows[0][8], wrap_angle(-9.0)));
        CHECK(back.rows[0][9] > -pi);
        CHECK(back.rows[0][9] <= pi);
        CHECK(std::isinf(back.rows[0][13]));

        CHECK_THROWS_AS(write_trajectory(TrajectoryLog{}, dir / "empty.csv"), InputError);
        CHECK_THROWS_AS(write_trajectory(one, dir / "missing" / "x.csv"), IoError);
        CHECK_FALSE(fs::exists(dir / "one.csv.tmp"));
    }

    TEST_CASE("plan run round-trips and keeps the client null")
    {
        const fs::path dir = scratch_dir("plan");
        const ScenarioFile sc = load_scenario(kSource / "scenarios/static.json");
        const RunResult r = run_plan(sc, dir);
        CHECK(r.summary.converged);
        REQUIRE(r.summary.first_crossing.count(-90.0));
        CHECK(r.summary.first_crossing.at(-90.0) < 300);
        CHECK(r.summary.client_null_pass);

        const TrajectoryTable t = read_trajectory(dir / "trajectory.csv");
        REQUIRE(t.rows.size() == r.log.samples.size());
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const LogSample& s = r.log.samples[i];
            CHECK(bits_equal(t.rows[i][0], s.t));
            CHECK(bits_equal(t.rows[i][1], s.state.position.x));
            CHECK(bits_equal(t.rows[i][6], s.control.y));
            CHECK(bits_equal(t.rows[i][12], s.power_at_eavesdropper));
            CHECK(is_null_power(t.rows[i][13]));
        }

        // summary crossing equals a brute-force scan of the file
        double prev_t = t.rows[0][0], prev_p = t.rows[0][12];
        for (std::size_t i = 1; i < t.rows.size(); ++i) {
            if (prev_p < -90 && t.rows[i][12] >= -90) {
                CHECK(r.summary.first_crossing.at(-90.0) >= prev_t);
                CHECK(r.summary.first_crossing.at(-90.0) <= t.rows[i][0]);
                break;
            }
            prev_t = t.rows[i][0];
            prev_p = t.rows[i][12];
        }
    }

    TEST_CASE("no incentive: the UAV stays put")
    {
        std::string s = with("\"a_r\": 0.01", "\"a_r\": 0");
        const ScenarioFile sc = parse_scenario(s);
        const RunResult r = run_plan(sc, scratch_dir("idle"));
        CHECK(r.summary.converged);
        CHECK(std::abs(r.summary.total_cost) <= 1e-6);
        CHECK(norm(r.log.samples.back().state.position) <= 1e-3);
    }

    TEST_CASE("beampattern snapshot")
    {
        const Engagement eng = fixtures::engagement({1000, 0}, {0, 1000});
        const double kd = eng.kd();
        CHECK(kd == doctest::Approx(pi));
        const UavState at{{0, 0}, {}};
        const auto ff = FarFieldGeometry::from_positions(at.position, eng.client, eng.eavesdropper);
        const BeamControl beam{0.0, 0.0, optimal_orientation(ff, kd)};
        const BeampatternSnapshot snap = emit_beampattern_snapshot(at, beam, eng, 72);
        REQUIRE(snap.samples.size() == 72);
        CHECK(snap.samples[18].angle == doctest::Approx(pi / 2));
        CHECK(snap.samples[18].gain == doctest::Approx(4.0).epsilon(1e-3));
        CHECK(snap.samples[0].gain == doctest::Approx(0.0).scale(1.0).epsilon(1e-3));
        CHECK(snap.gain_e == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(snap.gain_c == 0.0);
        for (const PolarSample& p : snap.samples) {
            CHECK(p.gain == far_field_beampattern(FarFieldGeometry::from_bearings(ff.theta_c, p.angle), beam.theta_g, kd));
            CHECK(p.angle >= 0.0);
            CHECK(p.angle < 2 * pi);
        }
        CHECK_THROWS_AS(emit_beampattern_snapshot(at, beam, eng, 7), InputError);
    }

    TEST_CASE("repeated runs write identical files")
    {
        const ScenarioFile sc = load_scenario(kSource / "scenarios/static.json");
        const fs::path a = scratch_dir("det_a");
        const fs::path b = scratch_dir("det_b");
        run_plan(sc, a);
        run_plan(sc, b);
        for (const char* f : {"trajectory.csv", "snapshots.csv", "summary.json"}) {
            CHECK(slurp(a / f) == slurp(b / f));
            CHECK_FALSE(slurp(a / f).empty());
        }
    }

    TEST_CASE("command line exit codes")
    {
        const fs::path dir = scratch_dir("cli");
        const std::string stat = (kSource / "scenarios/static.json").string();
        CHECK(run_cli("plan --scenario " + stat + " --out " + (dir / "plan").string()) == 0);
        CHECK(fs::exists(dir / "plan" / "trajectory.csv"));
        CHECK(run_cli("snapshot --scenario " + stat + " --resolution 16 --out " + (dir / "snap").string()) == 0);
        CHECK(fs::exists(dir / "snap" / "snapshots.csv"));
        CHECK_FALSE(fs::exists(dir / "snap" / "trajectory.csv"));
        CHECK(run_cli("check --scenario " + stat) == 0);
        CHECK(run_cli("") == 1);
        CHECK(run_cli("plan") == 1);
        CHECK(run_cli("plan --scenario " + stat + " --dt -1") == 1);
        CHECK(run_cli("plan --scenario " + stat + " --resolution 4") == 1);

        std::ofstream(dir / "both.json") << with("\"frequency\": 1575420000,", "\"frequency\": 1575420000, \"wavelength\": 0.19,");
        CHECK(run_cli("plan --scenario " + (dir / "both.json").string()) == 2);

        std::ofstream(dir / "blocker") << "x";
        CHECK(run_cli("plan --scenario " + stat + " --out " + (dir / "blocker" / "out").string()) == 4);

        // one Newton step cannot converge
        std::ofstream(dir / "tight.json") << with("\"activation\"", "\"solver\": {\"max_iterations\": 1, \"descent_iterations\": 0}, \"activation\"");
        CHECK(run_cli("plan --scenario " + (dir / "tight.json").string() + " --out " + (dir / "tight").string()) == 3);
        CHECK(slurp(dir / "tight" / "summary.json").find("\"converged\": false") != std::string::npos);
    }
}
