#ifndef EPLAB_SCENARIO_HPP
#define EPLAB_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include "eplab/config.hpp"

namespace eplab {

enum class RunMode { check, characteristic, pde, sweep };

struct RunOptions {
    int jobs = 1;
    bool timestamp = true;
    bool write_files = true;
};

/// Per-seed results: criterion verdict, detected vs. predicted blow-up
/// times, monitor violation count, cross-validation deviations.
struct SeedReport {
    double seed = 0.0;
    std::string criterion_set;  // "s1", "s2", "s3" or "-"
    CriterionReport criterion;
    std::optional<double> t_detect;
    std::optional<std::string> detect_method;
    std::optional<bool> bound_satisfied;
    std::size_t violations = 0;
    std::string terminated = "-";
    std::optional<double> cross_val_max_rel_rho;
    std::optional<double> cross_val_max_rel_d;

    bool operator==(const SeedReport&) const = default;
};

struct RunSummary {
    std::string system;
    std::string mode;
    std::string config;  // canonical echo, reparses to the same run
    std::vector<SeedReport> seeds;
    std::vector<std::string> files;
    std::optional<std::string> timestamp;
    std::optional<double> riccati_max_abs_err;  // riccati runs only

    bool operator==(const RunSummary&) const = default;
};

/// Executes the pipeline selected by mode: point extraction, criterion
/// checks, integration, blow-up detection, monitors and cross-validation,
/// writing every artifact into cfg.output.dir. Deterministic given the
/// config; --jobs only affects scheduling of independent seeds.
RunSummary run_scenario(const ExperimentConfig& cfg, RunMode mode,
                        const RunOptions& opts = {});

/// True when any seed certifies membership but detects blow-up after its
/// bound (the cli maps this to a dedicated exit code).
bool any_bound_violated(const RunSummary& summary);

}  // namespace eplab

#endif
