#include "nullsteer/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nullsteer {

using nlohmann::json;

namespace {

using Kind = ScenarioError::Kind;

// Strict view of one JSON object: every key must be consumed exactly once.
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            throw ScenarioError(Kind::InvalidValue, path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& get(const std::string& key)
    {
        if (!obj_.contains(key)) {
            throw ScenarioError(Kind::MissingField, at(key), "required field is missing");
        }
        used_.insert(key);
        return obj_.at(key);
    }

    const json* find(const std::string& key)
    {
        if (!obj_.contains(key)) {
            return nullptr;
        }
        used_.insert(key);
        return &obj_.at(key);
    }

    double number(const std::string& key) { return as_number(get(key), at(key)); }

    double positive(const std::string& key)
    {
        const double v = number(key);
        if (!(v > 0.0)) {
            throw ScenarioError(Kind::NonPositive, at(key), "must be positive");
        }
        return v;
    }

    double non_negative(const std::string& key)
    {
        const double v = number(key);
        if (!(v >= 0.0)) {
            throw ScenarioError(Kind::InvalidValue, at(key), "must be non-negative");
        }
        return v;
    }

    void finish() const
    {
        for (const auto& item : obj_.items()) {
            if (!used_.count(item.key())) {
                throw ScenarioError(Kind::UnknownKey, at(item.key()), "unknown key");
            }
        }
    }

    static double as_number(const json& v, const std::string& where)
    {
        if (!v.is_number()) {
            throw ScenarioError(Kind::InvalidValue, where, "expected a number");
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            throw ScenarioError(Kind::InvalidValue, where, "must be finite");
        }
        return d;
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> used_;
};

Vec2 read_pair(const json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 2) {
        throw ScenarioError(Kind::InvalidValue, where, "expected a two-element array");
    }
    return {Fields::as_number(v[0], where + "[0]"), Fields::as_number(v[1], where + "[1]")};
}

// Either a scalar s (meaning s * I) or a nested 2x2 array.
Mat2 read_matrix(const json& v, const std::string& where)
{
    if (v.is_number()) {
        return Mat2::identity(Fields::as_number(v, where));
    }
    if (!v.is_array() || v.size() != 2) {
        throw ScenarioError(Kind::InvalidValue, where, "expected a scalar or a 2x2 array");
    }
    const Vec2 r0 = read_pair(v[0], where + "[0]");
    const Vec2 r1 = read_pair(v[1], where + "[1]");
    return {r0.x, r0.y, r1.x, r1.y};
}

TargetMotion read_target(const json& v, const std::string& where)
{
    Fields f(v, where);
    const json& kind = f.get("kind");
    if (!kind.is_string()) {
        throw ScenarioError(Kind::InvalidValue, f.at("kind"), "expected a string");
    }
    const std::string k = kind.get<std::string>();
    const PlanarPoint p = read_pair(f.get("position"), f.at("position"));
    TargetMotion m;
    if (k == "static") {
        m = TargetMotion::fixed(p);
    } else if (k == "constant-velocity") {
        m = TargetMotion::constant_velocity(p, read_pair(f.get("velocity"), f.at("velocity")));
    } else if (k == "waypoint-sequence") {
        const json& list = f.get("waypoints");
        if (!list.is_array()) {
            throw ScenarioError(Kind::InvalidValue, f.at("waypoints"), "expected an array");
        }
        std::vector<Waypoint> wps;
        double last = 0.0;
        for (std::size_t i = 0; i < list.size(); ++i) {
            Fields w(list[i], f.at("waypoints") + "[" + std::to_string(i) + "]");
            Waypoint wp{w.number("t"), read_pair(w.get("position"), w.at("position"))};
            w.finish();
            if (!(wp.time > last)) {
                throw ScenarioError(Kind::InvalidValue, w.at("t"), "waypoint times must be positive and increasing");
            }
            last = wp.time;
            wps.push_back(wp);
        }
        m = TargetMotion::waypoint_sequence(p, std::move(wps));
    } else {
        throw ScenarioError(Kind::InvalidValue, f.at("kind"),
                            "expected static, constant-velocity or waypoint-sequence");
    }
    f.finish();
    return m;
}

CostWeights read_weights(const json& v)
{
    Fields f(v, "weights");
    CostWeights w;
    const json& r = f.get("r");
    if (r.is_number()) {
        const double s = Fields::as_number(r, f.at("r"));
        w.r = {s, s};
    } else {
        w.r = read_pair(r, f.at("r"));
    }
    if (!(w.r.x > 0.0) || !(w.r.y > 0.0)) {
        throw ScenarioError(Kind::NonPositive, f.at("r"), "control penalty must be positive");
    }
    w.q_r = read_matrix(f.get("q_r"), f.at("q_r"));
    w.q_f = read_matrix(f.get("q_f"), f.at("q_f"));
    if (!w.q_r.is_symmetric_psd()) {
        throw ScenarioError(Kind::InvalidValue, f.at("q_r"), "must be symmetric positive semidefinite");
    }
    if (!w.q_f.is_symmetric_psd()) {
        throw ScenarioError(Kind::InvalidValue, f.at("q_f"), "must be symmetric positive semidefinite");
    }
    w.a_r = f.non_negative("a_r");
    w.a_f = f.non_negative("a_f");
    w.u_bar = f.positive("u_bar");
    w.t_f = f.positive("t_f");
    f.finish();
    return w;
}

ActivationSpec read_activation(const json& v)
{
    if (v.is_string()) {
        if (v.get<std::string>() != "identity") {
            throw ScenarioError(Kind::InvalidValue, "activation", "expected \"identity\" or a band object");
        }
        return ActivationSpec::unclamped();
    }
    Fields f(v, "activation");
    const double lower = f.number("lower");
    const double upper = f.number("upper");
    f.finish();
    if (!(lower < upper)) {
        throw ScenarioError(Kind::InvalidValue, "activation", "lower must be below upper");
    }
    return ActivationSpec::band(lower, upper);
}

std::vector<double> read_number_list(const json& v, const std::string& where)
{
    if (!v.is_array()) {
        throw ScenarioError(Kind::InvalidValue, where, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(Fields::as_number(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

int read_count(Fields& f, const std::string& key, int minimum)
{
    const double v = f.number(key);
    if (v != std::floor(v) || v < minimum || v > 1e7) {
        throw ScenarioError(Kind::InvalidValue, f.at(key), "expected an integer >= " + std::to_string(minimum));
    }
    return static_cast<int>(v);
}

SolverOptions read_solver(const json& v)
{
    Fields f(v, "solver");
    SolverOptions o;
    if (f.has("tolerance")) o.tolerance = f.positive("tolerance");
    if (f.has("max_iterations")) o.max_iterations = read_count(f, "max_iterations", 1);
    if (f.has("mesh_nodes")) o.mesh_nodes = read_count(f, "mesh_nodes", 3);
    if (f.has("nodes_per_segment")) o.nodes_per_segment = read_count(f, "nodes_per_segment", 1);
    if (f.has("max_refinements")) o.max_refinements = read_count(f, "max_refinements", 0);
    if (f.has("max_mesh_nodes")) o.max_mesh_nodes = read_count(f, "max_mesh_nodes", 3);
    if (f.has("descent_iterations")) o.descent_iterations = read_count(f, "descent_iterations", 0);
    if (f.has("length_scale")) o.length_scale = f.positive("length_scale");
    f.finish();
    return o;
}

SimulationDefaults read_simulation(const json& v)
{
    Fields f(v, "simulation");
    SimulationDefaults s;
    if (f.has("dt")) s.dt = f.positive("dt");
    if (f.has("replan_interval")) s.replan_interval = f.positive("replan_interval");
    if (f.has("horizon")) s.horizon = f.positive("horizon");
    if (f.has("total")) s.total = f.positive("total");
    f.finish();
    return s;
}

} // namespace

ScenarioError::ScenarioError(Kind kind, std::string field, const std::string& detail)
    : Error(std::string(to_string(kind)) + ": " + field + ": " + detail), kind_(kind), field_(std::move(field))
{
}

const char* to_string(ScenarioError::Kind kind)
{
    switch (kind) {
    case Kind::Parse:
        return "parse error";
    case Kind::MissingField:
        return "missing field";
    case Kind::UnknownKey:
        return "unknown key";
    case Kind::ExclusiveFields:
        return "exclusive fields";
    case Kind::NonPositive:
        return "non-positive value";
    case Kind::InvalidValue:
        return "invalid value";
    }
    return "scenario error";
}

double ScenarioFile::wavelength() const
{
    if (wavelength_m) {
        return *wavelength_m;
    }
    return kSpeedOfLight / frequency_hz.value_or(0.0);
}

ScenarioFile parse_scenario(const std::string& text, const std::string& origin)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(Kind::Parse, origin, e.what());
    }

    Fields f(root, "");
    ScenarioFile sc;
    MissionScenario& m = sc.mission;

    m.client = read_target(f.get("client"), "client");
    m.eavesdropper = read_target(f.get("eavesdropper"), "eavesdropper");
    {
        Fields u(f.get("uav_initial"), "uav_initial");
        m.uav_initial.position = read_pair(u.get("position"), u.at("position"));
        m.uav_initial.velocity = read_pair(u.get("velocity"), u.at("velocity"));
        u.finish();
    }

    const bool has_f = f.has("frequency");
    const bool has_w = f.has("wavelength");
    if (has_f && has_w) {
        throw ScenarioError(Kind::ExclusiveFields, "frequency/wavelength", "give exactly one of the two");
    }
    if (!has_f && !has_w) {
        throw ScenarioError(Kind::MissingField, "frequency/wavelength", "one of the two is required");
    }
    if (has_f) {
        sc.frequency_hz = f.positive("frequency");
    } else {
        sc.wavelength_m = f.positive("wavelength");
    }
    const double lambda = sc.wavelength();
    m.radio.wavenumber = 2.0 * std::numbers::pi / lambda;
    m.radio.nominal_power_mw = f.positive("nominal_power");

    const json& sep = f.get("antenna_separation");
    if (sep.is_string()) {
        if (sep.get<std::string>() != "half-wavelength") {
            throw ScenarioError(Kind::InvalidValue, "antenna_separation", "expected meters or \"half-wavelength\"");
        }
        m.separation = 0.5 * lambda;
    } else {
        m.separation = f.positive("antenna_separation");
    }

    m.weights = read_weights(f.get("weights"));
    m.activation = read_activation(f.get("activation"));

    if (const json* v = f.find("regularization")) {
        Fields r(*v, "regularization");
        if (r.has("b_star_floor")) m.regularization.b_star_floor = r.positive("b_star_floor");
        if (r.has("fspl_floor")) m.regularization.fspl_floor = r.positive("fspl_floor");
        r.finish();
    }
    if (f.has("signal_power")) {
        sc.signal_power_dbm = f.number("signal_power");
    }
    if (const json* v = f.find("seed")) {
        if (!v->is_number_unsigned()) {
            throw ScenarioError(Kind::InvalidValue, "seed", "expected a non-negative integer");
        }
        sc.seed = v->get<std::uint64_t>();
    }
    if (const json* v = f.find("thresholds")) {
        sc.thresholds_dbm = read_number_list(*v, "thresholds");
    }
    if (const json* v = f.find("snapshot_times")) {
        sc.snapshot_times = read_number_list(*v, "snapshot_times");
        for (double t : sc.snapshot_times) {
            if (t < 0.0) {
                throw ScenarioError(Kind::InvalidValue, "snapshot_times", "times must be non-negative");
            }
        }
    }
    if (const json* v = f.find("simulation")) {
        sc.simulation = read_simulation(*v);
    }
    if (const json* v = f.find("solver")) {
        sc.solver = read_solver(*v);
    }
    f.finish();

    if (m.client.position_at(0.0) == m.eavesdropper.position_at(0.0)) {
        throw ScenarioError(Kind::InvalidValue, "client/eavesdropper", "targets start at the same position");
    }
    try {
        m.validate();
    } catch (const InputError& e) {
        throw ScenarioError(Kind::InvalidValue, origin, e.what());
    } catch (const DegenerateGeometryError& e) {
        throw ScenarioError(Kind::InvalidValue, origin, e.what());
    }
    return sc;
}

ScenarioFile load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scenario file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

} // namespace nullsteer
