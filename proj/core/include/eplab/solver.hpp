#ifndef EPLAB_SOLVER_HPP
#define EPLAB_SOLVER_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "eplab/characteristics.hpp"
#include "eplab/criteria.hpp"
#include "eplab/fields.hpp"

namespace eplab {

enum class FlowSystem { ep, ep_background, polytropic };

/// A marker particle advected with the flow, labelled by its seed point.
struct Tracer {
    double seed = 0.0;
    double x = 0.0;
};

/// Eulerian state: density, velocity, optional entropy (polytropic), time
/// and tracer positions. Density is clipped to 0 where it dips below
/// -1e-14 after a step.
struct FlowState {
    ScalarField rho;
    ScalarField v;
    std::optional<ScalarField> S;
    double t = 0.0;
    std::vector<Tracer> tracers;
};

struct SolverConfig {
    double cfl = 0.4;
    double t_end = 1.0;
    double gradient_cap = 1e3;  // stop when max|v_x| exceeds this
    bool dealias = false;       // 2/3-rule filtering (polytropic spectral)
    int snapshot_every = 0;     // 0: initial and final snapshots only
    bool physical_momentum = false;  // polytropic: -grad(p)/rho instead of -grad(p)
    bool monitor = false;            // record tracer derivative series (polytropic)
    long max_steps = 10000000;

    void validate() const;
};

struct StepStats {
    double t = 0.0;
    double dt = 0.0;
    double total_mass = 0.0;
    double max_rho = 0.0;
    double max_abs_vx = 0.0;
    double max_hessian_p = 0.0;
};

struct StepOutcome {
    FlowState state;
    StepStats stats;
    ScalarField vx;  // derivative of the updated velocity
};

/// Values sampled at a tracer after one step.
struct TracerSample {
    double t = 0.0;
    double x = 0.0;
    double rho = 0.0;
    double vx = 0.0;
};

/// Derivative magnitudes at a tracer, input to the polytropic estimate
/// monitors.
struct MonitorSample {
    double t = 0.0;
    double rho = 0.0, drho = 0.0, d2rho = 0.0;
    double s = 0.0, ds = 0.0, d2s = 0.0;
    double dv = 0.0, d2v = 0.0, d3v = 0.0;
    double p_hess = 0.0;
};

struct Snapshot {
    double t = 0.0;
    ScalarField rho;
    ScalarField v;
    std::optional<ScalarField> S;
};

enum class RunTermination { reached_t_end, blow_up_detected, max_steps };

/// Everything a simulation produced: per-step stats, per-tracer series,
/// snapshots, the final state and (when the run blew up) a refined estimate
/// of the blow-up time.
struct RunRecord {
    FlowSystem system = FlowSystem::ep;
    RunTermination termination = RunTermination::reached_t_end;
    std::vector<StepStats> history;
    std::vector<std::vector<TracerSample>> tracer_series;
    std::vector<std::vector<MonitorSample>> monitor_series;
    std::vector<Snapshot> snapshots;
    FlowState final_state;
    std::optional<BlowupEstimate> estimate;
};

struct MonitorReport {
    std::vector<Violation> violations;
    std::size_t samples_checked = 0;
};

struct CrossValidationReport {
    double max_rel_rho = 0.0;
    double max_rel_d = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::size_t n_compared = 0;
};

/// One step of the pressureless Euler-Poisson system: conservative
/// local-Lax-Friedrichs mass flux, upwind convective velocity update with
/// force -k*grad_phi, tracers advanced by a two-stage midpoint rule.
/// dt = cfl*h/(max|v| + eps), capped by dt_cap. Periodic grids solve the
/// Poisson equation against the mean density (torus compatibility).
StepOutcome ep_step(const FlowState& state, const PhysParams& params,
                    const SolverConfig& cfg, double dt_cap = 1e300);

/// One classical RK4 step of the polytropic system by pseudospectral method
/// of lines (periodic grids only). The momentum equation uses -grad(p) as
/// written, or -grad(p)/max(rho, 1e-12) when cfg.physical_momentum.
StepOutcome polytropic_step(const FlowState& state, const PhysParams& params,
                            const SolverConfig& cfg, double dt_cap = 1e300);

/// Time loop: steps the chosen system, records stats/series/snapshots, stops
/// at t_end or on a blow-up signal (non-finite fields or max|v_x| beyond
/// gradient_cap) and then extrapolates the blow-up time from the tracer
/// density series (ep) or from -min(v_x) (polytropic).
RunRecord run_simulation(const FlowState& initial, const PhysParams& params,
                         const SolverConfig& cfg, FlowSystem system);

/// Checks the transport envelopes for (rho + |Drho| + |D2rho|) and
/// (|DS| + |D2S|) along the tracer against their initial values times
/// exp(2*int |D^j v|), and the pressure-Hessian bound with the explicit
/// constant derived in the implementation. Throws insufficient_data_error
/// when fewer than 2 monitor samples exist.
MonitorReport polytropic_estimate_monitor(const RunRecord& run,
                                          std::size_t tracer_index,
                                          double gamma);

/// Same check on a bare series (test hook).
MonitorReport check_polytropic_estimates(const std::vector<MonitorSample>& series,
                                         double gamma, int n_cells);

/// Max relative deviation of tracer-sampled (rho, v_x) from the
/// characteristic oracle (rho, d) over the common time range, excluding the
/// final 5% before a detected blow-up on either side.
CrossValidationReport cross_validate(const RunRecord& run,
                                     std::size_t tracer_index,
                                     const TrajectoryRecord& oracle);

}  // namespace eplab

#endif
