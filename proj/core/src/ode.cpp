#include "eplab/ode.hpp"

#include <algorithm>
#include <cmath>

namespace eplab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
// 5th-order solution weights (also the a7* row: FSAL).
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Difference between the 5th- and 4th-order weights.
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                 e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                 e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

}  // namespace

StopReason integrate_dopri5(const OdeRhs& f, std::vector<double>& y, double t0,
                            double t_end, const StepControl& ctrl,
                            const OdeObserver& observe,
                            const OdeEvent& stop_event) {
    if (!(ctrl.rel_tol > 0) || !(ctrl.abs_tol > 0) || !(ctrl.dt_init > 0) ||
        !(ctrl.dt_min > 0) || ctrl.dt_min >= ctrl.dt_init)
        throw std::invalid_argument("integrate_dopri5: invalid step control");
    if (!(t_end > t0))
        throw std::invalid_argument("integrate_dopri5: t_end must exceed t0");

    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    std::vector<double> ytmp(n), ynew(n);

    double t = t0;
    double dt = std::min(ctrl.dt_init, t_end - t0);
    f(t, y, k1);
    if (observe) observe(t, y);

    while (t < t_end) {
        dt = std::min(dt, t_end - t);

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + dt * a21 * k1[i];
        f(t + c2 * dt, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + dt * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * dt, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + dt * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * dt, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + dt * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] +
                                   a54 * k4[i]);
        f(t + c5 * dt, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + dt * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                   a64 * k4[i] + a65 * k5[i]);
        f(t + dt, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + dt * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                                   b5 * k5[i] + b6 * k6[i]);
        f(t + dt, ynew, k7);

        // Scaled max-norm of the embedded error estimate.
        double err = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = dt * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                    e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale =
                ctrl.abs_tol +
                ctrl.rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            if (!std::isfinite(ei) || !std::isfinite(ynew[i])) finite = false;
            err = std::max(err, std::fabs(ei) / scale);
        }

        if (finite && err <= 1.0) {
            t += dt;
            y.swap(ynew);
            k1.swap(k7);  // FSAL
            if (observe) observe(t, y);
            if (stop_event && stop_event(t, y)) return StopReason::event;
            const double grow =
                err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            dt *= std::clamp(grow, 0.2, 5.0);
        } else {
            const double shrink =
                finite ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.1;
            dt *= shrink;
            if (dt < ctrl.dt_min) return StopReason::step_underflow;
        }
        if (t < t_end && dt < ctrl.dt_min) return StopReason::step_underflow;
    }
    return StopReason::reached_end;
}

}  // namespace eplab
