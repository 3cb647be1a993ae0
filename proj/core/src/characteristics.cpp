#include "eplab/characteristics.hpp"

#include <algorithm>
#include <cmath>

namespace eplab {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0))
        throw std::invalid_argument("integrator tolerances must be positive");
    if (!(dt_init > 0) || !(dt_min > 0) || !(dt_min < dt_init))
        throw std::invalid_argument("integrator requires 0 < dt_min < dt_init");
    if (!(rho_cap > 0))
        throw std::invalid_argument("rho_cap must be positive");
}

std::pair<double, double> pressureless_rhs(const CharState& s,
                                           const PhysParams& params) {
    return {-s.rho * s.d, -s.d * s.d - params.k * s.rho};
}

std::pair<double, double> background_rhs(const CharState& s,
                                         const PhysParams& params) {
    return {-s.rho * s.d, -s.d * s.d - params.k * (s.rho - params.rho_bar)};
}

std::pair<TrajectoryRecord, std::optional<BlowupEstimate>>
integrate_characteristic(CharSystem system, const CharState& init,
                         const PhysParams& params, const IntegratorConfig& cfg,
                         double t_end) {
    cfg.validate();
    params.validate();
    if (init.rho < 0 || !std::isfinite(init.rho) || !std::isfinite(init.d))
        throw std::invalid_argument("integrate_characteristic: invalid initial state");
    if (!(t_end > init.t))
        throw std::invalid_argument("integrate_characteristic: t_end must exceed init.t");

    TrajectoryRecord record;  // seed label is assigned by callers

    OdeRhs rhs = [&](double, const std::vector<double>& y,
                     std::vector<double>& dydt) {
        const CharState s{std::max(0.0, y[0]), y[1], 0.0};
        const auto [drho, dd] = system == CharSystem::pressureless
                                    ? pressureless_rhs(s, params)
                                    : background_rhs(s, params);
        dydt[0] = drho;
        dydt[1] = dd;
    };

    OdeObserver observe = [&](double t, const std::vector<double>& y) {
        record.samples.push_back(CharState{std::max(0.0, y[0]), y[1], t});
    };
    OdeEvent blown = [&](double, const std::vector<double>& y) {
        return y[0] >= cfg.rho_cap;
    };

    std::vector<double> y{init.rho, init.d};
    const StopReason r = integrate_dopri5(rhs, y, init.t, t_end,
                                          cfg.step_control(), observe, blown);

    std::optional<BlowupEstimate> estimate;
    switch (r) {
        case StopReason::reached_end:
            record.terminated = Termination::reached_t_end;
            break;
        case StopReason::event:
        case StopReason::step_underflow: {
            record.terminated = r == StopReason::event
                                    ? Termination::blow_up
                                    : Termination::step_underflow;
            std::vector<std::pair<double, double>> series;
            series.reserve(record.samples.size());
            for (const auto& s : record.samples) series.emplace_back(s.t, s.rho);
            try {
                estimate = estimate_blowup_time(series, FitMethod::inverse_sqrt_fit);
            } catch (const std::exception&) {
                BlowupEstimate fallback;
                fallback.method = FitMethod::threshold;
                fallback.t_detect = record.samples.back().t;
                estimate = fallback;
            }
            break;
        }
    }
    return {std::move(record), std::move(estimate)};
}

double riccati_closed_form(double lambda0, double t) {
    const double denom = 1.0 + lambda0 * t;
    if (std::fabs(denom) <= 1e-14)
        throw singularity_error("riccati_closed_form: at the pole 1 + lambda0*t = 0");
    return lambda0 / denom;
}

double density_envelope(double rho0, double k, double t) {
    if (!(rho0 > 0) || !(k > 0))
        throw std::invalid_argument("density_envelope: rho0 and k must be positive");
    const double base = 1.0 - std::sqrt(k * rho0 / 12.0) * t;
    if (base <= 0.0)
        throw singularity_error("density_envelope: t at or beyond the pole");
    return rho0 / (base * base);
}

double theta_envelope(double theta0, double k, double t) {
    if (!(theta0 > 0) || !(k > 0))
        throw std::invalid_argument("theta_envelope: theta0 and k must be positive");
    const double base = 1.0 - std::sqrt(k * theta0 / 12.0) * t;
    if (base <= 0.0)
        throw singularity_error("theta_envelope: t at or beyond the pole");
    return theta0 / (base * base);
}

namespace {

// Nonuniform 3-point second difference centered on sample i.
double second_difference(const std::vector<double>& t,
                         const std::vector<double>& f, std::size_t i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    return 2.0 * (f[i - 1] / (h1 * (h1 + h2)) - f[i] / (h1 * h2) +
                  f[i + 1] / (h2 * (h1 + h2)));
}

// Discretization allowance for the 3-point stencil at sample i, built from
// discrete estimates of the third and fourth time derivatives of the series.
double second_difference_tolerance(const std::vector<double>& t,
                                   const std::vector<double>& d2,
                                   std::size_t i) {
    const std::size_t lo = 1, hi = d2.size() - 2;  // d2 valid on [1, size-2]
    auto third = [&](std::size_t j) {
        const std::size_t a = std::max(lo, j - 1), b = std::min(hi, j + 1);
        if (a == b) return 0.0;
        return (d2[b] - d2[a]) / (t[b] - t[a]);
    };
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    const double f3 = std::fabs(third(i));
    const std::size_t a = std::max(lo, i - 1), b = std::min(hi, i + 1);
    const double f4 =
        a == b ? 0.0 : std::fabs(third(b) - third(a)) / (t[b] - t[a]);
    return std::fabs(h2 - h1) / 3.0 * f3 +
           (h1 + h2) * (h1 + h2) / 12.0 * f4 +
           // guard for series too short to estimate the fourth derivative
           (f4 == 0.0 ? (h1 + h2) * f3 : 0.0);
}

void check_lower_bound(std::vector<Violation>& out, double t,
                       const std::string& label, double lhs, double rhs,
                       double extra_tol = 0.0) {
    const double slack = 1e-6 * (std::fabs(lhs) + std::fabs(rhs)) +
                         1e-12 * (1.0 + std::fabs(rhs)) + extra_tol;
    if (lhs < rhs - slack) out.push_back(Violation{t, label, lhs, rhs});
}

}  // namespace

std::vector<Violation> monitor_inequalities(const TrajectoryRecord& traj,
                                            const PhysParams& params,
                                            MonitorRegime regime) {
    if (traj.samples.size() < 3)
        throw insufficient_data_error(
            "monitor_inequalities: need at least 3 samples");
    params.validate();
    if (regime == MonitorRegime::s2 && !(params.rho_bar > 0))
        throw std::invalid_argument("monitor_inequalities: s2 needs rho_bar > 0");

    const double k = params.k;
    const double rb = params.rho_bar;
    const double half_rb = 0.5 * rb;
    const std::size_t n = traj.samples.size();
    const double t0 = traj.samples.front().t;

    std::vector<double> t(n), rho(n), d(n), q(n);  // q: rho (s1) or theta (s2)
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = traj.samples[i].t;
        rho[i] = traj.samples[i].rho;
        d[i] = traj.samples[i].d;
        q[i] = regime == MonitorRegime::s1 ? rho[i] : rho[i] - half_rb;
    }

    std::vector<Violation> out;

    if (regime == MonitorRegime::s1) {
        for (std::size_t i = 0; i < n; ++i) {
            // D(rho)/Dt = -rho*d stays nonnegative.
            check_lower_bound(out, t[i], "drho-nonneg", -rho[i] * d[i], 0.0);
            // (D(rho)/Dt)^2 >= (k/3) rho^3.
            check_lower_bound(out, t[i], "drho-squared-chain",
                              rho[i] * rho[i] * d[i] * d[i],
                              k / 3.0 * rho[i] * rho[i] * rho[i]);
        }
    } else {
        const double theta0 = q[0];
        const double window = -4.0 * rho[0] * d[0] / (k * rb * rb);
        for (std::size_t i = 0; i < n; ++i) {
            const double elapsed = t[i] - t0;
            // D(theta)/Dt = -rho*d positive inside the window.
            if (elapsed > 0 && elapsed <= window)
                check_lower_bound(out, t[i], "dtheta-positive", -rho[i] * d[i],
                                  0.0);
            // (D(theta)/Dt)^2 >= (k/3) theta^3.
            check_lower_bound(out, t[i], "dtheta-squared-chain",
                              rho[i] * rho[i] * d[i] * d[i],
                              k / 3.0 * q[i] * q[i] * q[i]);
            // theta dominates its closed-form lower envelope.
            if (theta0 > 0) {
                const double pole = std::sqrt(12.0 / (k * theta0));
                if (elapsed < pole) {
                    const double env = theta_envelope(theta0, k, elapsed);
                    if (q[i] < env * (1.0 - 1e-6))
                        out.push_back(
                            Violation{t[i], "theta-envelope", q[i], env});
                }
            }
        }
    }

    // Discrete second differences of rho (s1) or theta (s2) against the
    // proved lower bound on the material second derivative.
    std::vector<double> d2(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) d2[i] = second_difference(t, q, i);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double rhs = regime == MonitorRegime::s1
                               ? k * rho[i] * rho[i]
                               : k * q[i] * q[i] - k * rb * rb / 4.0;
        const double tol = second_difference_tolerance(t, d2, i);
        const char* label = regime == MonitorRegime::s1 ? "d2rho-lower"
                                                        : "d2theta-lower";
        check_lower_bound(out, t[i], label, d2[i], rhs, tol);
    }
    return out;
}

BlowupEstimate estimate_blowup_time(
    const std::vector<std::pair<double, double>>& samples, FitMethod mode) {
    if (mode != FitMethod::inverse_sqrt_fit && mode != FitMethod::inverse_fit)
        throw std::invalid_argument("estimate_blowup_time: unsupported mode");
    if (samples.size() < 4)
        throw std::invalid_argument("estimate_blowup_time: need >= 4 samples");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i].first > samples[i - 1].first))
            throw std::invalid_argument(
                "estimate_blowup_time: times must strictly increase");

    const std::size_t win = std::min<std::size_t>(20, samples.size());
    const std::size_t begin = samples.size() - win;
    for (std::size_t i = begin + 1; i < samples.size(); ++i)
        if (!(samples[i].second > samples[i - 1].second))
            throw fit_rejected_error("estimate_blowup_time: non-monotone tail");
    if (!(samples[begin].second > 0))
        throw fit_rejected_error("estimate_blowup_time: tail not positive");

    // Least-squares line through the transformed tail.
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = begin; i < samples.size(); ++i) {
        const double ti = samples[i].first;
        const double v = samples[i].second;
        const double yi = mode == FitMethod::inverse_sqrt_fit
                              ? 1.0 / std::sqrt(v)
                              : 1.0 / v;
        st += ti;
        sy += yi;
        stt += ti * ti;
        sty += ti * yi;
    }
    const double m = static_cast<double>(win);
    const double denom = m * stt - st * st;
    if (denom == 0.0)
        throw fit_rejected_error("estimate_blowup_time: degenerate abscissae");
    const double slope = (m * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / m;
    if (!(slope < 0))
        throw fit_rejected_error("estimate_blowup_time: tail not approaching a pole");

    const double t_detect = -intercept / slope;
    if (!(t_detect > samples.back().first))
        throw fit_rejected_error(
            "estimate_blowup_time: extrapolated pole precedes the data");

    BlowupEstimate est;
    est.t_detect = t_detect;
    est.method = mode;
    return est;
}

void attach_bound(BlowupEstimate& est, double t_star_bound) {
    est.t_star_bound = t_star_bound;
    est.bound_satisfied = est.t_detect <= t_star_bound * (1.0 + 1e-6);
}

std::vector<std::pair<double, double>> integrate_riccati(
    double lambda0, double t_end, const IntegratorConfig& cfg) {
    cfg.validate();
    if (!(t_end > 0))
        throw std::invalid_argument("integrate_riccati: t_end must be positive");
    std::vector<std::pair<double, double>> samples;
    OdeRhs rhs = [](double, const std::vector<double>& y,
                    std::vector<double>& dydt) { dydt[0] = -y[0] * y[0]; };
    OdeObserver observe = [&](double t, const std::vector<double>& y) {
        samples.emplace_back(t, y[0]);
    };
    std::vector<double> y{lambda0};
    integrate_dopri5(rhs, y, 0.0, t_end, cfg.step_control(), observe);
    return samples;
}

}  // namespace eplab
