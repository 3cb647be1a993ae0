#ifndef EPLAB_CHARACTERISTICS_HPP
#define EPLAB_CHARACTERISTICS_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eplab/criteria.hpp"
#include "eplab/ode.hpp"

namespace eplab {

/// Evaluating a closed-form expression at or beyond its pole.
struct singularity_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// Blow-up time extrapolation could not produce a usable fit.
struct fit_rejected_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A monitor was asked to check a series too short to difference.
struct insufficient_data_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class CharSystem { pressureless, background };

/// Density and velocity divergence along a particle trajectory.
struct CharState {
    double rho = 0.0;
    double d = 0.0;
    double t = 0.0;
};

enum class Termination { reached_t_end, blow_up, step_underflow };

struct TrajectoryRecord {
    double seed = 0.0;
    std::vector<CharState> samples;
    Termination terminated = Termination::reached_t_end;
};

enum class FitMethod { threshold, inverse_sqrt_fit, inverse_fit };

struct BlowupEstimate {
    double t_detect = 0.0;
    FitMethod method = FitMethod::threshold;
    std::optional<double> t_star_bound;
    bool bound_satisfied = false;
};

/// Adaptive integration controls plus the density threshold at which a run
/// is declared blown up.
struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double dt_init = 1e-3;
    double dt_min = 1e-12;
    double rho_cap = 1e8;

    StepControl step_control() const {
        return StepControl{rel_tol, abs_tol, dt_init, dt_min};
    }
    void validate() const;
};

/// A proof inequality that failed at a sample: label identifies the
/// inequality, lhs/rhs its two sides at time t.
struct Violation {
    double t = 0.0;
    std::string label;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Right-hand side of the closed 1D pressureless trajectory system:
/// (drho/dt, dd/dt) = (-rho*d, -d^2 - k*rho).
std::pair<double, double> pressureless_rhs(const CharState& s,
                                           const PhysParams& params);

/// With background density: (-rho*d, -d^2 - k*(rho - rho_bar)).
std::pair<double, double> background_rhs(const CharState& s,
                                         const PhysParams& params);

/// Integrates the chosen system with the embedded Dormand-Prince stepper.
/// Terminates at t_end, at rho >= rho_cap (blow_up) or on step underflow;
/// the latter two produce a BlowupEstimate refined by inverse_sqrt_fit on
/// the trailing density samples (falling back to the threshold time).
std::pair<TrajectoryRecord, std::optional<BlowupEstimate>>
integrate_characteristic(CharSystem system, const CharState& init,
                         const PhysParams& params, const IntegratorConfig& cfg,
                         double t_end);

/// lambda0 / (1 + lambda0*t). Throws singularity_error within 1e-14 of the
/// pole.
double riccati_closed_form(double lambda0, double t);

/// rho0 / (1 - sqrt(k*rho0/12)*t)^2. Throws singularity_error at or beyond
/// the pole t* = sqrt(12/(k*rho0)).
double density_envelope(double rho0, double k, double t);

/// Same lower envelope with theta = rho - rho_bar/2 in place of rho.
double theta_envelope(double theta0, double k, double t);

enum class MonitorRegime { s1, s2 };

/// Checks the trajectory-wise proof inequalities at every sample:
/// s1: -rho*d >= 0, (rho*d)^2 >= (k/3)*rho^3, and the discrete second
/// difference of rho against k*rho^2.
/// s2: the same chain for theta = rho - rho_bar/2 (positivity only inside
/// the window -4*rho0*d0/(k*rho_bar^2)), the second difference against
/// k*theta^2 - k*rho_bar^2/4, and domination of the theta envelope.
/// Throws insufficient_data_error for records with fewer than 3 samples.
std::vector<Violation> monitor_inequalities(const TrajectoryRecord& traj,
                                            const PhysParams& params,
                                            MonitorRegime regime);

/// Least-squares extrapolation of the blow-up time from a trailing window
/// (up to 20 samples) of a monotone series: value^{-1/2} linear in t for
/// pole order 2, value^{-1} for order 1. Throws fit_rejected_error on
/// non-monotone or degenerate tails.
BlowupEstimate estimate_blowup_time(
    const std::vector<std::pair<double, double>>& samples, FitMethod mode);

/// Sets est.t_star_bound and bound_satisfied = (t_detect <= bound*(1+1e-6)).
void attach_bound(BlowupEstimate& est, double t_star_bound);

/// Samples (t, lambda) of dlambda/dt = -lambda^2 from the adaptive stepper.
std::vector<std::pair<double, double>> integrate_riccati(
    double lambda0, double t_end, const IntegratorConfig& cfg = {});

}  // namespace eplab

#endif
