#include "eplab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eplab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double wrap_position(const Grid1D& g, double x) {
    if (g.periodic) {
        const double L = g.length();
        double s = std::fmod(x - g.x_min, L);
        if (s < 0) s += L;
        return g.x_min + s;
    }
    return std::clamp(x, g.x_min, g.x_min + (g.n_cells - 1) * g.h());
}

// Two-stage midpoint advance of the tracers in the (frozen) velocity field.
void advance_tracers(std::vector<Tracer>& tracers, const ScalarField& v,
                     double dt) {
    for (Tracer& tr : tracers) {
        const double x1 =
            wrap_position(v.grid, tr.x + 0.5 * dt * sample_field(v, tr.x));
        tr.x = wrap_position(v.grid, tr.x + dt * sample_field(v, x1));
    }
}

void clip_density(ScalarField& rho) {
    for (double& r : rho.values)
        if (r < 0.0) r = 0.0;
}

StepStats gather_stats(const FlowState& state, double dt,
                       const ScalarField& vx, double max_hessian_p) {
    StepStats st;
    st.t = state.t;
    st.dt = dt;
    st.total_mass = state.rho.integral();
    st.max_rho = *std::max_element(state.rho.values.begin(),
                                   state.rho.values.end());
    st.max_abs_vx = vx.max_abs();
    st.max_hessian_p = max_hessian_p;
    return st;
}

StepOutcome nonfinite_signal(const FlowState& state) {
    StepOutcome out;
    out.state = state;
    out.stats.t = state.t;
    out.stats.dt = std::numeric_limits<double>::quiet_NaN();
    out.stats.total_mass = std::numeric_limits<double>::quiet_NaN();
    out.stats.max_rho = std::numeric_limits<double>::quiet_NaN();
    out.stats.max_abs_vx = std::numeric_limits<double>::quiet_NaN();
    out.vx = ScalarField(state.v.grid);
    return out;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(cfl > 0.0) || cfl > 1.0)
        throw std::invalid_argument("cfl must lie in (0, 1]");
    if (!(gradient_cap > 0.0))
        throw std::invalid_argument("gradient_cap must be positive");
    if (snapshot_every < 0)
        throw std::invalid_argument("snapshot_every must be >= 0");
    if (max_steps <= 0)
        throw std::invalid_argument("max_steps must be positive");
}

StepOutcome ep_step(const FlowState& state, const PhysParams& params,
                    const SolverConfig& cfg, double dt_cap) {
    params.validate();
    cfg.validate();
    if (state.rho.grid != state.v.grid)
        throw std::invalid_argument("ep_step: rho and v on different grids");
    const Grid1D& g = state.rho.grid;
    g.validate();
    const int n = g.n_cells;
    const double h = g.h();
    const auto& rho = state.rho.values;
    const auto& v = state.v.values;

    double vmax = 0.0;
    for (double u : v) vmax = std::max(vmax, std::fabs(u));
    if (!std::isfinite(vmax)) return nonfinite_signal(state);
    const double dt = std::min(cfg.cfl * h / (vmax + 1e-12), dt_cap);

    // Force -k*grad(phi). On the torus the Poisson solve is only compatible
    // against the mean density, so the background shift drops out there.
    PoissonSolution poisson;
    if (g.periodic) {
        poisson = poisson_periodic(state.rho);
    } else {
        ScalarField source = state.rho;
        if (params.rho_bar > 0)
            for (double& s : source.values) s -= params.rho_bar;
        poisson = poisson_freespace(source);
    }

    FlowState next;
    next.rho = ScalarField(g);
    next.v = ScalarField(g);
    next.S = state.S;
    next.t = state.t + dt;
    next.tracers = state.tracers;

    // Conservative mass update with the local Lax-Friedrichs flux for rho*v.
    auto at = [&](long i) -> long {
        if (g.periodic) return (i % n + n) % n;
        return std::clamp(i, 0L, static_cast<long>(n) - 1);
    };
    auto edge_flux = [&](long i) {  // flux through edge i+1/2
        const long l = at(i), r = at(i + 1);
        const double alpha = std::max(std::fabs(v[static_cast<std::size_t>(l)]),
                                      std::fabs(v[static_cast<std::size_t>(r)]));
        const double fl = rho[static_cast<std::size_t>(l)] * v[static_cast<std::size_t>(l)];
        const double fr = rho[static_cast<std::size_t>(r)] * v[static_cast<std::size_t>(r)];
        return 0.5 * (fl + fr) -
               0.5 * alpha * (rho[static_cast<std::size_t>(r)] -
                              rho[static_cast<std::size_t>(l)]);
    };
    std::vector<double> flux(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i) flux[static_cast<std::size_t>(i)] = edge_flux(i - 1);
    for (long i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        next.rho.values[u] =
            rho[u] - dt / h * (flux[u + 1] - flux[u]);
    }
    clip_density(next.rho);

    // Convective velocity update, first-order upwind for v*v_x.
    for (long i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        const double vi = v[u];
        const double dv =
            vi > 0.0
                ? (vi - v[static_cast<std::size_t>(at(i - 1))]) / h
                : (v[static_cast<std::size_t>(at(i + 1))] - vi) / h;
        next.v.values[u] =
            vi - dt * (vi * dv + params.k * poisson.grad_phi.values[u]);
    }

    advance_tracers(next.tracers, state.v, dt);

    StepOutcome out;
    out.vx = spectral_derivative(next.v, 1);
    out.stats = gather_stats(next, dt, out.vx, 0.0);
    out.state = std::move(next);
    return out;
}

namespace {

struct PolyFields {
    std::vector<double> rho_t, v_t, s_t;
};

// Spectral right-hand side of the polytropic system in convective form.
PolyFields polytropic_rhs(const Grid1D& g, const std::vector<double>& rho,
                          const std::vector<double>& v,
                          const std::vector<double>& s,
                          const PhysParams& params, bool physical_momentum) {
    const std::size_t n = rho.size();
    ScalarField rv(g), p(g), vf(g, std::vector<double>(v)), sf(g, std::vector<double>(s));
    for (std::size_t i = 0; i < n; ++i) {
        rv.values[i] = rho[i] * v[i];
        p.values[i] = std::exp(s[i]) * std::pow(std::max(rho[i], 0.0), params.gamma);
    }
    const ScalarField drv = spectral_derivative(rv, 1);
    const ScalarField dp = spectral_derivative(p, 1);
    const ScalarField dv = spectral_derivative(vf, 1);
    const ScalarField ds = spectral_derivative(sf, 1);

    PolyFields out;
    out.rho_t.resize(n);
    out.v_t.resize(n);
    out.s_t.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.rho_t[i] = -drv.values[i];
        double force = dp.values[i];
        if (physical_momentum) force /= std::max(rho[i], 1e-12);
        out.v_t[i] = -v[i] * dv.values[i] - force;
        out.s_t[i] = -v[i] * ds.values[i];
    }
    return out;
}

}  // namespace

StepOutcome polytropic_step(const FlowState& state, const PhysParams& params,
                            const SolverConfig& cfg, double dt_cap) {
    params.validate();
    cfg.validate();
    if (!state.S)
        throw std::invalid_argument("polytropic_step: entropy field required");
    if (state.rho.grid != state.v.grid || state.rho.grid != state.S->grid)
        throw std::invalid_argument("polytropic_step: fields on different grids");
    const Grid1D& g = state.rho.grid;
    g.validate();
    if (!g.periodic)
        throw std::invalid_argument("polytropic_step: grid must be periodic");
    const std::size_t n = state.rho.size();
    const double h = g.h();

    // Wave speed |v| + sqrt(gamma*p) of the system as written
    // (sqrt(gamma*p/rho) for the physical momentum form).
    double speed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::exp(state.S->values[i]) *
                         std::pow(std::max(state.rho.values[i], 0.0), params.gamma);
        const double c2 = cfg.physical_momentum
                              ? params.gamma * p / std::max(state.rho.values[i], 1e-12)
                              : params.gamma * p;
        speed = std::max(speed, std::fabs(state.v.values[i]) + std::sqrt(std::max(c2, 0.0)));
    }
    if (!std::isfinite(speed)) return nonfinite_signal(state);
    const double dt = std::min(cfg.cfl * h / (speed + 1e-12), dt_cap);

    const auto& r0 = state.rho.values;
    const auto& v0 = state.v.values;
    const auto& s0 = state.S->values;

    auto stage = [&](const PolyFields& k, double w, std::vector<double>& r,
                     std::vector<double>& v, std::vector<double>& s) {
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = r0[i] + w * dt * k.rho_t[i];
            v[i] = v0[i] + w * dt * k.v_t[i];
            s[i] = s0[i] + w * dt * k.s_t[i];
        }
    };

    std::vector<double> r(n), v(n), s(n);
    const PolyFields k1 = polytropic_rhs(g, r0, v0, s0, params, cfg.physical_momentum);
    stage(k1, 0.5, r, v, s);
    const PolyFields k2 = polytropic_rhs(g, r, v, s, params, cfg.physical_momentum);
    stage(k2, 0.5, r, v, s);
    const PolyFields k3 = polytropic_rhs(g, r, v, s, params, cfg.physical_momentum);
    stage(k3, 1.0, r, v, s);
    const PolyFields k4 = polytropic_rhs(g, r, v, s, params, cfg.physical_momentum);

    FlowState next;
    next.rho = ScalarField(g);
    next.v = ScalarField(g);
    next.S = ScalarField(g);
    next.t = state.t + dt;
    next.tracers = state.tracers;
    for (std::size_t i = 0; i < n; ++i) {
        next.rho.values[i] = r0[i] + dt / 6.0 * (k1.rho_t[i] + 2.0 * k2.rho_t[i] +
                                                 2.0 * k3.rho_t[i] + k4.rho_t[i]);
        next.v.values[i] = v0[i] + dt / 6.0 * (k1.v_t[i] + 2.0 * k2.v_t[i] +
                                               2.0 * k3.v_t[i] + k4.v_t[i]);
        next.S->values[i] = s0[i] + dt / 6.0 * (k1.s_t[i] + 2.0 * k2.s_t[i] +
                                                2.0 * k3.s_t[i] + k4.s_t[i]);
    }
    if (cfg.dealias) {
        next.rho = dealias_23(next.rho);
        next.v = dealias_23(next.v);
        next.S = dealias_23(*next.S);
    }
    // Keep density nonnegative against spectral undershoot near vacuum.
    for (double& x : next.rho.values)
        if (x < 0.0 && x > -1e-14) x = 0.0;

    advance_tracers(next.tracers, state.v, dt);

    ScalarField p_new(g);
    for (std::size_t i = 0; i < n; ++i)
        p_new.values[i] = std::exp(next.S->values[i]) *
                          std::pow(std::max(next.rho.values[i], 0.0), params.gamma);
    const ScalarField p_xx = spectral_derivative(p_new, 2);

    StepOutcome out;
    out.vx = spectral_derivative(next.v, 1);
    out.stats = gather_stats(next, dt, out.vx, p_xx.max_abs());
    out.state = std::move(next);
    return out;
}

namespace {

Snapshot take_snapshot(const FlowState& state) {
    Snapshot s;
    s.t = state.t;
    s.rho = state.rho;
    s.v = state.v;
    s.S = state.S;
    return s;
}

MonitorSample sample_monitor(const FlowState& state, const ScalarField& vx,
                             const PhysParams& params, double x) {
    const ScalarField drho = spectral_derivative(state.rho, 1);
    const ScalarField d2rho = spectral_derivative(state.rho, 2);
    const ScalarField ds = spectral_derivative(*state.S, 1);
    const ScalarField d2s = spectral_derivative(*state.S, 2);
    const ScalarField d2v = spectral_derivative(state.v, 2);
    const ScalarField d3v = spectral_derivative(state.v, 3);
    ScalarField p(state.rho.grid);
    for (std::size_t i = 0; i < p.size(); ++i)
        p.values[i] = std::exp(state.S->values[i]) *
                      std::pow(std::max(state.rho.values[i], 0.0), params.gamma);
    const ScalarField p_xx = spectral_derivative(p, 2);

    MonitorSample m;
    m.t = state.t;
    m.rho = std::max(0.0, sample_field(state.rho, x));
    m.drho = std::fabs(sample_field(drho, x));
    m.d2rho = std::fabs(sample_field(d2rho, x));
    m.s = sample_field(*state.S, x);
    m.ds = std::fabs(sample_field(ds, x));
    m.d2s = std::fabs(sample_field(d2s, x));
    m.dv = std::fabs(sample_field(vx, x));
    m.d2v = std::fabs(sample_field(d2v, x));
    m.d3v = std::fabs(sample_field(d3v, x));
    m.p_hess = std::fabs(sample_field(p_xx, x));
    return m;
}

}  // namespace

RunRecord run_simulation(const FlowState& initial, const PhysParams& params,
                         const SolverConfig& cfg, FlowSystem system) {
    params.validate();
    cfg.validate();
    const bool polytropic = system == FlowSystem::polytropic;
    if (polytropic != initial.S.has_value())
        throw std::invalid_argument(
            "run_simulation: entropy field required iff system is polytropic");
    if (system == FlowSystem::ep_background && !(params.rho_bar > 0))
        throw std::invalid_argument(
            "run_simulation: ep_background requires rho_bar > 0");
    initial.rho.grid.validate();
    if (initial.rho.grid != initial.v.grid)
        throw std::invalid_argument("run_simulation: mismatched grids");
    for (double r : initial.rho.values)
        if (r < -1e-14 || !std::isfinite(r))
            throw std::invalid_argument("run_simulation: negative initial density");
    for (const Tracer& tr : initial.tracers)
        if (!initial.rho.grid.contains(tr.x))
            throw std::invalid_argument("run_simulation: tracer outside domain");

    FlowState state = initial;
    clip_density(state.rho);

    RunRecord rec;
    rec.system = system;
    rec.tracer_series.resize(state.tracers.size());
    if (polytropic && cfg.monitor)
        rec.monitor_series.resize(state.tracers.size());
    rec.snapshots.push_back(take_snapshot(state));

    // Initial tracer and monitor samples.
    {
        const ScalarField vx0 = spectral_derivative(state.v, 1);
        for (std::size_t j = 0; j < state.tracers.size(); ++j) {
            const double x = state.tracers[j].x;
            rec.tracer_series[j].push_back(
                TracerSample{state.t, x, sample_field(state.rho, x),
                             sample_field(vx0, x)});
            if (polytropic && cfg.monitor)
                rec.monitor_series[j].push_back(
                    sample_monitor(state, vx0, params, x));
        }
    }

    std::vector<std::pair<double, double>> observable;  // blow-up series
    const double t_slack = 1e-12 * std::max(1.0, std::fabs(cfg.t_end));
    long steps = 0;
    bool signalled = false;

    while (state.t < cfg.t_end - t_slack) {
        if (steps >= cfg.max_steps) {
            rec.termination = RunTermination::max_steps;
            break;
        }
        const double dt_cap = cfg.t_end - state.t;
        StepOutcome out = polytropic
                              ? polytropic_step(state, params, cfg, dt_cap)
                              : ep_step(state, params, cfg, dt_cap);
        ++steps;
        state = std::move(out.state);
        rec.history.push_back(out.stats);

        double tracer_rho_max = 0.0;
        for (std::size_t j = 0; j < state.tracers.size(); ++j) {
            const double x = state.tracers[j].x;
            TracerSample ts{state.t, x, sample_field(state.rho, x),
                            sample_field(out.vx, x)};
            tracer_rho_max = std::max(tracer_rho_max, ts.rho);
            rec.tracer_series[j].push_back(ts);
            if (polytropic && cfg.monitor)
                rec.monitor_series[j].push_back(
                    sample_monitor(state, out.vx, params, x));
        }

        if (polytropic) {
            double vx_min = 0.0;
            for (double u : out.vx.values) vx_min = std::min(vx_min, u);
            observable.emplace_back(state.t, -vx_min);
        } else {
            observable.emplace_back(state.t, state.tracers.empty()
                                                 ? out.stats.max_rho
                                                 : tracer_rho_max);
        }

        const StepStats& st = out.stats;
        if (!std::isfinite(st.total_mass) || !std::isfinite(st.max_rho) ||
            !std::isfinite(st.max_abs_vx) || st.max_abs_vx > cfg.gradient_cap) {
            rec.termination = RunTermination::blow_up_detected;
            signalled = true;
            break;
        }
        if (cfg.snapshot_every > 0 && steps % cfg.snapshot_every == 0)
            rec.snapshots.push_back(take_snapshot(state));
    }

    if (rec.snapshots.back().t != state.t)
        rec.snapshots.push_back(take_snapshot(state));
    rec.final_state = std::move(state);

    if (signalled) {
        const FitMethod mode = polytropic ? FitMethod::inverse_fit
                                          : FitMethod::inverse_sqrt_fit;
        try {
            rec.estimate = estimate_blowup_time(observable, mode);
        } catch (const std::exception&) {
            BlowupEstimate fallback;
            fallback.method = FitMethod::threshold;
            fallback.t_detect = observable.empty() ? rec.final_state.t
                                                   : observable.back().first;
            rec.estimate = fallback;
        }
    }
    return rec;
}

MonitorReport check_polytropic_estimates(const std::vector<MonitorSample>& series,
                                         double gamma, int n_cells) {
    if (series.size() < 2)
        throw insufficient_data_error(
            "check_polytropic_estimates: need at least 2 samples");
    if (!(gamma > 1.0))
        throw std::invalid_argument("check_polytropic_estimates: gamma must exceed 1");

    // Roundoff allowances for spectrally differentiated quantities sampled
    // at the tracer, scaled by the worst second-derivative amplification.
    double scale_g = 0.0, scale_h = 0.0, scale_p = 0.0;
    for (const MonitorSample& m : series) {
        scale_g = std::max(scale_g, m.rho + m.drho + m.d2rho);
        scale_h = std::max(scale_h, m.ds + m.d2s);
        scale_p = std::max(scale_p, m.p_hess +
                                        std::exp(m.s) * std::pow(m.rho, gamma));
    }
    const double amp = 256.0 * kEps * static_cast<double>(n_cells) *
                       static_cast<double>(n_cells);
    const double floor_g = amp * (1.0 + scale_g);
    const double floor_h = amp * (1.0 + scale_h);
    const double floor_p = amp * (1.0 + scale_p);

    const double g0 = series.front().rho + series.front().drho + series.front().d2rho;
    const double h0 = series.front().ds + series.front().d2s;

    MonitorReport rep;
    rep.samples_checked = series.size();
    double int3 = 0.0, int2 = 0.0;  // trapezoid-accumulated derivative norms
    for (std::size_t i = 0; i < series.size(); ++i) {
        const MonitorSample& m = series[i];
        if (i > 0) {
            const MonitorSample& pm = series[i - 1];
            const double dt = m.t - pm.t;
            int3 += 0.5 * dt * ((pm.dv + pm.d2v + pm.d3v) + (m.dv + m.d2v + m.d3v));
            int2 += 0.5 * dt * ((pm.dv + pm.d2v) + (m.dv + m.d2v));
        }
        const double g = m.rho + m.drho + m.d2rho;
        const double env_g = g0 * std::exp(2.0 * int3);
        if (g > env_g * (1.0 + 1e-6) + floor_g)
            rep.violations.push_back(
                Violation{m.t, "density-transport-envelope", g, env_g});

        const double hh = m.ds + m.d2s;
        const double env_h = h0 * std::exp(2.0 * int2);
        if (hh > env_h * (1.0 + 1e-6) + floor_h)
            rep.violations.push_back(
                Violation{m.t, "entropy-transport-envelope", hh, env_h});

        // Pressure Hessian bound with the explicit constant obtained from
        // p = e^S rho^gamma by the product rule: every term of D^2 p is
        // controlled by gamma^2 e^S (1 + |DS| + |D^2 S|)^2 (rho+|Drho|+|D^2 rho|)^gamma
        // for gamma >= 2.
        const double hs = 1.0 + m.ds + m.d2s;
        const double env_p = gamma * gamma * std::exp(m.s) * hs * hs *
                             std::pow(g, gamma);
        if (m.p_hess > env_p * (1.0 + 1e-6) + floor_p)
            rep.violations.push_back(
                Violation{m.t, "pressure-hessian-bound", m.p_hess, env_p});
    }
    return rep;
}

MonitorReport polytropic_estimate_monitor(const RunRecord& run,
                                          std::size_t tracer_index,
                                          double gamma) {
    if (tracer_index >= run.monitor_series.size())
        throw insufficient_data_error(
            "polytropic_estimate_monitor: no monitor series for tracer");
    return check_polytropic_estimates(run.monitor_series[tracer_index], gamma,
                                      run.final_state.rho.grid.n_cells);
}

CrossValidationReport cross_validate(const RunRecord& run,
                                     std::size_t tracer_index,
                                     const TrajectoryRecord& oracle) {
    if (tracer_index >= run.tracer_series.size())
        throw std::invalid_argument("cross_validate: tracer index out of range");
    const auto& series = run.tracer_series[tracer_index];
    if (series.size() < 2 || oracle.samples.size() < 2)
        throw std::invalid_argument("cross_validate: series too short");

    double t_lo = std::max(series.front().t, oracle.samples.front().t);
    double t_hi = std::min(series.back().t, oracle.samples.back().t);
    // Exclude the final 5% before a detected blow-up on either side.
    if (run.termination == RunTermination::blow_up_detected)
        t_hi = std::min(t_hi, t_lo + 0.95 * (series.back().t - t_lo));
    if (oracle.terminated != Termination::reached_t_end)
        t_hi = std::min(t_hi, t_lo + 0.95 * (oracle.samples.back().t - t_lo));
    if (!(t_hi > t_lo))
        throw std::out_of_range("cross_validate: non-overlapping time ranges");

    auto oracle_at = [&](double t) {
        const auto& s = oracle.samples;
        std::size_t lo = 0, hi = s.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (s[mid].t <= t ? lo : hi) = mid;
        }
        const double w = (t - s[lo].t) / (s[hi].t - s[lo].t);
        return std::pair<double, double>{
            (1.0 - w) * s[lo].rho + w * s[hi].rho,
            (1.0 - w) * s[lo].d + w * s[hi].d};
    };

    CrossValidationReport rep;
    rep.t_lo = t_lo;
    rep.t_hi = t_hi;
    for (const TracerSample& ts : series) {
        if (ts.t < t_lo || ts.t > t_hi) continue;
        const auto [orho, od] = oracle_at(ts.t);
        rep.max_rel_rho = std::max(
            rep.max_rel_rho, std::fabs(ts.rho - orho) / std::max(std::fabs(orho), 1e-12));
        rep.max_rel_d = std::max(
            rep.max_rel_d, std::fabs(ts.vx - od) / std::max(std::fabs(od), 1e-12));
        ++rep.n_compared;
    }
    return rep;
}

}  // namespace eplab
