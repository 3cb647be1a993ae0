#ifndef EPLAB_ODE_HPP
#define EPLAB_ODE_HPP

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace eplab {

/// Step-size control for the embedded Dormand-Prince 5(4) stepper.
/// A step is accepted when the componentwise error estimate satisfies
/// |err_i| <= abs_tol + rel_tol * max(|y_i|, |y_new_i|).
struct StepControl {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double dt_init = 1e-3;
    double dt_min = 1e-12;
};

enum class StopReason {
    reached_end,     // integrated up to t_end
    event,           // event predicate fired at an accepted step
    step_underflow,  // controller demanded dt < dt_min
};

using OdeRhs = std::function<void(double t, const std::vector<double>& y,
                                  std::vector<double>& dydt)>;

/// Called after every accepted step (including the initial state).
using OdeObserver = std::function<void(double t, const std::vector<double>& y)>;

/// Checked after every accepted step; returning true stops the integration.
using OdeEvent = std::function<bool(double t, const std::vector<double>& y)>;

/// Dormand-Prince 5(4) with PI-free standard step adjustment and FSAL.
/// `y` is advanced in place; the observer sees the initial state first.
StopReason integrate_dopri5(const OdeRhs& f, std::vector<double>& y, double t0,
                            double t_end, const StepControl& ctrl,
                            const OdeObserver& observe = {},
                            const OdeEvent& stop_event = {});

}  // namespace eplab

#endif
