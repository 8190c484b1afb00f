#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nullsteer/errors.hpp"
#include "nullsteer/mission.hpp"

namespace nullsteer {

inline constexpr double kSpeedOfLight = 299'792'458.0; // m/s

class ScenarioError : public Error {
public:
    enum class Kind { Parse, MissingField, UnknownKey, ExclusiveFields, NonPositive, InvalidValue };

    ScenarioError(Kind kind, std::string field, const std::string& detail);

    Kind kind() const { return kind_; }
    const std::string& field() const { return field_; }

private:
    Kind kind_;
    std::string field_;
};

const char* to_string(ScenarioError::Kind kind);

// Optional defaults for the `simulate` verb; CLI flags override them.
struct SimulationDefaults {
    double dt = 0.1;
    double replan_interval = 20.0;
    std::optional<double> horizon; // defaults to weights.t_f
    std::optional<double> total;   // defaults to weights.t_f
};

struct ScenarioFile {
    MissionScenario mission;
    std::optional<double> frequency_hz;
    std::optional<double> wavelength_m;
    double signal_power_dbm = -125.0; // metadata only
    std::uint64_t seed = 0;
    std::vector<double> thresholds_dbm{-100.0, -90.0};
    std::vector<double> snapshot_times; // empty: evenly spaced defaults
    SimulationDefaults simulation;
    SolverOptions solver;

    double wavelength() const;
};

/// Parses and validates a scenario from JSON text. `origin` prefixes messages.
ScenarioFile parse_scenario(const std::string& text, const std::string& origin = "<scenario>");

ScenarioFile load_scenario(const std::filesystem::path& path);

} // namespace nullsteer
