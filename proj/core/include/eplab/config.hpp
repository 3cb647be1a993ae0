#ifndef EPLAB_CONFIG_HPP
#define EPLAB_CONFIG_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eplab/characteristics.hpp"
#include "eplab/criteria.hpp"
#include "eplab/fields.hpp"
#include "eplab/solver.hpp"

namespace eplab {

/// Malformed or invalid experiment configuration; the message names the
/// offending key.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SystemKind { ep, ep_background, polytropic, characteristic, riccati };

std::string to_string(SystemKind s);

/// Initial-data family with numeric arguments, e.g. cosine(1.5, 1.2).
struct FieldPreset {
    std::string name;
    std::vector<double> args;

    bool operator==(const FieldPreset&) const = default;
};

struct SweepSpec {
    double rho0_min = 0.5, rho0_max = 4.0;
    int rho0_count = 20;
    double d0_min = -3.0, d0_max = 0.0;
    int d0_count = 20;
    bool integrate = false;
};

struct OutputSpec {
    std::string dir = "out";
    bool text = true;
    bool json = true;
    bool csv = true;
};

/// A fully validated experiment description. Parsed from an INI-style
/// key-value document with nested sections; unknown keys are rejected.
struct ExperimentConfig {
    SystemKind system = SystemKind::characteristic;
    PhysParams params;
    std::optional<Grid1D> grid;
    FieldPreset rho_preset;  // pde systems
    FieldPreset v_preset;
    FieldPreset s_preset{"constant", {0.0}};
    double rho0 = 0.0;    // characteristic systems
    double div_v0 = 0.0;
    double lambda0 = 0.0;  // riccati
    IntegratorConfig integrator;
    SolverConfig solver;
    std::vector<double> seeds;
    double t_end = 1.0;
    double tolerance = 1e-12;
    unsigned long rng_seed = 0;
    bool cross_validate = false;
    SweepSpec sweep;
    OutputSpec output;
};

/// Parses and validates a config document. Throws parse_error naming the
/// offending key on unknown keys, type mismatches or invariant violations.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config_file(const std::string& path);

/// Canonical re-emission of a config; parsing the echo reproduces the run.
std::string config_echo(const ExperimentConfig& cfg);

/// Built-in scenario presets (thm1_demo, thm2_demo, thm3_demo,
/// cosine_collapse) as config documents.
const std::vector<std::string>& scenario_preset_names();
std::string scenario_preset(const std::string& name);

/// Evaluates a field preset on a grid. `role` is "rho", "v" or "S".
ScalarField build_field(const FieldPreset& preset, const Grid1D& grid,
                        const std::string& role);

/// Initial Eulerian state for pde systems: preset fields plus one tracer per
/// seed.
FlowState build_initial_state(const ExperimentConfig& cfg);

}  // namespace eplab

#endif
