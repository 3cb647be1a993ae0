#include "eplab/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "eplab/report.hpp"

namespace eplab {

namespace {

namespace fs = std::filesystem;

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& body) {
    const int workers =
        std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct ArtifactWriter {
    fs::path dir;
    bool enabled = true;
    std::vector<std::string>* manifest = nullptr;

    void write(const std::string& name, const std::string& content) const {
        if (!enabled) return;
        std::ofstream out(dir / name, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write output file " +
                                     (dir / name).string());
        out << content;
        if (manifest) manifest->push_back(name);
    }
};

std::string trajectory_csv(const TrajectoryRecord& traj, double rho_bar) {
    std::string out = "t,rho,d,theta\n";
    for (const CharState& s : traj.samples) {
        out += g17(s.t);
        out += ',';
        out += g17(s.rho);
        out += ',';
        out += g17(s.d);
        out += ',';
        if (rho_bar > 0) out += g17(s.rho - 0.5 * rho_bar);
        out += '\n';
    }
    return out;
}

std::string stats_csv(const std::vector<StepStats>& history) {
    std::string out = "t,dt,total_mass,max_rho,max_abs_vx,max_hessian_p\n";
    for (const StepStats& s : history) {
        out += g17(s.t);
        out += ',';
        out += g17(s.dt);
        out += ',';
        out += g17(s.total_mass);
        out += ',';
        out += g17(s.max_rho);
        out += ',';
        out += g17(s.max_abs_vx);
        out += ',';
        out += g17(s.max_hessian_p);
        out += '\n';
    }
    return out;
}

std::string snapshot_csv(const Snapshot& snap) {
    std::string out = "# t=" + g17(snap.t) + "\n";
    out += snap.S ? "x,rho,v,S\n" : "x,rho,v\n";
    const Grid1D& g = snap.rho.grid;
    for (int i = 0; i < g.n_cells; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        out += g17(g.node(i));
        out += ',';
        out += g17(snap.rho.values[u]);
        out += ',';
        out += g17(snap.v.values[u]);
        if (snap.S) {
            out += ',';
            out += g17(snap.S->values[u]);
        }
        out += '\n';
    }
    return out;
}

std::string tracer_csv(const std::vector<TracerSample>& series) {
    std::string out = "t,x,rho,vx\n";
    for (const TracerSample& s : series) {
        out += g17(s.t);
        out += ',';
        out += g17(s.x);
        out += ',';
        out += g17(s.rho);
        out += ',';
        out += g17(s.vx);
        out += '\n';
    }
    return out;
}

std::string fit_method_name(FitMethod m) {
    switch (m) {
        case FitMethod::threshold: return "threshold";
        case FitMethod::inverse_sqrt_fit: return "inverse_sqrt_fit";
        case FitMethod::inverse_fit: return "inverse_fit";
    }
    return "?";
}

std::string termination_name(Termination t) {
    switch (t) {
        case Termination::reached_t_end: return "reached_t_end";
        case Termination::blow_up: return "blow_up";
        case Termination::step_underflow: return "step_underflow";
    }
    return "?";
}

std::string run_termination_name(RunTermination t) {
    switch (t) {
        case RunTermination::reached_t_end: return "reached_t_end";
        case RunTermination::blow_up_detected: return "blow_up_detected";
        case RunTermination::max_steps: return "max_steps";
    }
    return "?";
}

// Periodic runs of the plain system are executed against the mean density;
// the criterion and the characteristic oracle must use the same background.
double effective_rho_bar(const ExperimentConfig& cfg, const FlowState& state) {
    if (cfg.grid && cfg.grid->periodic &&
        (cfg.system == SystemKind::ep ||
         cfg.system == SystemKind::ep_background)) {
        const double mean = state.rho.mean();
        if (cfg.system == SystemKind::ep_background &&
            std::fabs(cfg.params.rho_bar - mean) >
                1e-8 * std::max(1.0, cfg.params.rho_bar))
            throw std::invalid_argument(
                "periodic ep_background run requires rho_bar = mean(rho0); got "
                "rho_bar=" + g17(cfg.params.rho_bar) + ", mean=" + g17(mean));
        return mean;
    }
    return cfg.params.rho_bar;
}

CriterionReport run_criterion(const PointData& pd, const PhysParams& params,
                              SystemKind system, double tol,
                              std::string& set_name) {
    if (system == SystemKind::polytropic) {
        set_name = "s3";
        return s3_check(pd, params, tol);
    }
    if (params.rho_bar > 0) {
        set_name = "s2";
        return s2_check(pd, params, tol);
    }
    set_name = "s1";
    return s1_check(pd, params, tol);
}

std::string flat_criteria_csv_header(const std::vector<SeedReport>& seeds) {
    std::string out = "seed,set,member,t_star,window";
    if (!seeds.empty())
        for (const auto& [label, slack] : seeds.front().criterion.margins)
            out += ",margin_" + label;
    out += ",t_detect\n";
    return out;
}

std::string flat_criteria_csv_row(const SeedReport& s) {
    std::string out = g17(s.seed) + "," + s.criterion_set + "," +
                      (s.criterion.member ? "1" : "0") + ",";
    if (s.criterion.t_star) out += g17(*s.criterion.t_star);
    out += ',';
    if (s.criterion.window) out += g17(*s.criterion.window);
    for (const auto& [label, slack] : s.criterion.margins)
        out += "," + g17(slack);
    out += ',';
    if (s.t_detect) out += g17(*s.t_detect);
    out += '\n';
    return out;
}

PointData point_data_for_seed(const ExperimentConfig& cfg,
                              const FlowState* state0, double a) {
    if (state0) return extract_point_data(*state0, state0->rho.grid, a);
    PointData pd;
    pd.rho0 = cfg.rho0;
    pd.div_v0 = cfg.div_v0;
    pd.lambda_min = cfg.div_v0;
    return pd;
}

FlowSystem to_flow_system(SystemKind s) {
    switch (s) {
        case SystemKind::ep: return FlowSystem::ep;
        case SystemKind::ep_background: return FlowSystem::ep_background;
        case SystemKind::polytropic: return FlowSystem::polytropic;
        default:
            throw std::invalid_argument("not an Eulerian system");
    }
}

std::string mode_name(RunMode m) {
    switch (m) {
        case RunMode::check: return "check";
        case RunMode::characteristic: return "char";
        case RunMode::pde: return "pde";
        case RunMode::sweep: return "sweep";
    }
    return "?";
}

void finish_summary(RunSummary& summary, const ExperimentConfig& cfg,
                    const ArtifactWriter& writer) {
    // manifest the summary files before emitting so they list themselves
    if (cfg.output.json) summary.files.push_back("summary.json");
    if (cfg.output.text) summary.files.push_back("summary.txt");
    ArtifactWriter plain = writer;
    plain.manifest = nullptr;
    if (cfg.output.json)
        plain.write("summary.json", emit_report(summary, ReportFormat::json));
    if (cfg.output.text)
        plain.write("summary.txt", emit_report(summary, ReportFormat::text));
}

}  // namespace

bool any_bound_violated(const RunSummary& summary) {
    for (const SeedReport& s : summary.seeds)
        if (s.bound_satisfied && !*s.bound_satisfied) return true;
    return false;
}

RunSummary run_scenario(const ExperimentConfig& cfg, RunMode mode,
                        const RunOptions& opts) {
    RunSummary summary;
    summary.system = to_string(cfg.system);
    summary.mode = mode_name(mode);
    summary.config = config_echo(cfg);
    if (opts.timestamp) summary.timestamp = iso_timestamp();

    ArtifactWriter writer;
    writer.enabled = opts.write_files;
    writer.dir = cfg.output.dir;
    writer.manifest = &summary.files;
    if (writer.enabled) fs::create_directories(writer.dir);
    writer.write("config.echo.cfg", summary.config);

    const bool is_pde = cfg.system == SystemKind::ep ||
                        cfg.system == SystemKind::ep_background ||
                        cfg.system == SystemKind::polytropic;

    switch (mode) {
        case RunMode::check: {
            if (cfg.system == SystemKind::riccati)
                throw std::invalid_argument("check mode does not apply to riccati runs");
            std::optional<FlowState> state0;
            PhysParams params = cfg.params;
            if (is_pde) {
                state0 = build_initial_state(cfg);
                params.rho_bar = effective_rho_bar(cfg, *state0);
            }
            summary.seeds.resize(cfg.seeds.size());
            for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
                SeedReport rep;
                rep.seed = cfg.seeds[i];
                const PointData pd = point_data_for_seed(
                    cfg, state0 ? &*state0 : nullptr, cfg.seeds[i]);
                rep.criterion = run_criterion(pd, params, cfg.system,
                                              cfg.tolerance, rep.criterion_set);
                summary.seeds[i] = std::move(rep);
            }
            if (cfg.output.csv && !summary.seeds.empty()) {
                std::string csv = flat_criteria_csv_header(summary.seeds);
                for (const SeedReport& s : summary.seeds)
                    csv += flat_criteria_csv_row(s);
                writer.write("criteria.csv", csv);
            }
            break;
        }

        case RunMode::characteristic: {
            if (cfg.system == SystemKind::polytropic)
                throw std::invalid_argument(
                    "characteristic runs are not defined for the polytropic system");
            if (cfg.system == SystemKind::riccati) {
                const auto samples =
                    integrate_riccati(cfg.lambda0, cfg.t_end, cfg.integrator);
                double max_err = 0.0;
                std::string csv = "t,lambda,exact,abs_err\n";
                for (const auto& [t, lam] : samples) {
                    double exact = lam, err = 0.0;
                    if (std::fabs(1.0 + cfg.lambda0 * t) > 1e-14) {
                        exact = riccati_closed_form(cfg.lambda0, t);
                        err = std::fabs(lam - exact);
                        max_err = std::max(max_err, err);
                    }
                    csv += g17(t) + "," + g17(lam) + "," + g17(exact) + "," +
                           g17(err) + "\n";
                }
                summary.riccati_max_abs_err = max_err;
                SeedReport rep;
                rep.seed = cfg.lambda0;
                rep.criterion_set = "-";
                rep.terminated = samples.back().first >= cfg.t_end * (1 - 1e-9)
                                     ? "reached_t_end"
                                     : "step_underflow";
                if (cfg.lambda0 < 0) {
                    rep.criterion.t_star = -1.0 / cfg.lambda0;
                    if (rep.terminated == "step_underflow") {
                        std::vector<std::pair<double, double>> series;
                        for (const auto& [t, lam] : samples)
                            if (lam < 0) series.emplace_back(t, -lam);
                        try {
                            BlowupEstimate est = estimate_blowup_time(
                                series, FitMethod::inverse_fit);
                            attach_bound(est, *rep.criterion.t_star);
                            rep.t_detect = est.t_detect;
                            rep.detect_method = fit_method_name(est.method);
                            rep.bound_satisfied = est.bound_satisfied;
                        } catch (const std::exception&) {
                        }
                    }
                }
                summary.seeds.push_back(std::move(rep));
                if (cfg.output.csv) writer.write("riccati.csv", csv);
                break;
            }

            std::optional<FlowState> state0;
            PhysParams params = cfg.params;
            if (is_pde) {
                state0 = build_initial_state(cfg);
                params.rho_bar = effective_rho_bar(cfg, *state0);
            }
            const CharSystem char_system = params.rho_bar > 0
                                               ? CharSystem::background
                                               : CharSystem::pressureless;
            summary.seeds.resize(cfg.seeds.size());
            std::vector<TrajectoryRecord> trajectories(cfg.seeds.size());
            parallel_for(cfg.seeds.size(), opts.jobs, [&](std::size_t i) {
                SeedReport rep;
                rep.seed = cfg.seeds[i];
                const PointData pd = point_data_for_seed(
                    cfg, state0 ? &*state0 : nullptr, cfg.seeds[i]);
                rep.criterion = run_criterion(pd, params, cfg.system,
                                              cfg.tolerance, rep.criterion_set);
                auto [traj, estimate] = integrate_characteristic(
                    char_system, CharState{pd.rho0, pd.div_v0, 0.0}, params,
                    cfg.integrator, cfg.t_end);
                traj.seed = cfg.seeds[i];
                rep.terminated = termination_name(traj.terminated);
                if (estimate) {
                    if (rep.criterion.member && rep.criterion.t_star) {
                        attach_bound(*estimate, *rep.criterion.t_star);
                        rep.bound_satisfied = estimate->bound_satisfied;
                    }
                    rep.t_detect = estimate->t_detect;
                    rep.detect_method = fit_method_name(estimate->method);
                }
                if (rep.criterion.member)
                    rep.violations = monitor_inequalities(
                                         traj, params,
                                         char_system == CharSystem::background
                                             ? MonitorRegime::s2
                                             : MonitorRegime::s1)
                                         .size();
                trajectories[i] = std::move(traj);
                summary.seeds[i] = std::move(rep);
            });
            if (cfg.output.csv)
                for (std::size_t i = 0; i < trajectories.size(); ++i)
                    writer.write("traj_seed" + std::to_string(i) + ".csv",
                                 trajectory_csv(trajectories[i], params.rho_bar));
            break;
        }

        case RunMode::pde: {
            if (!is_pde)
                throw std::invalid_argument("pde mode requires an Eulerian system");
            FlowState state0 = build_initial_state(cfg);
            PhysParams params = cfg.params;
            params.rho_bar = effective_rho_bar(cfg, state0);

            summary.seeds.resize(cfg.seeds.size());
            std::vector<PointData> pds(cfg.seeds.size());
            for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
                SeedReport rep;
                rep.seed = cfg.seeds[i];
                pds[i] = extract_point_data(state0, state0.rho.grid, cfg.seeds[i]);
                rep.criterion = run_criterion(pds[i], params, cfg.system,
                                              cfg.tolerance, rep.criterion_set);
                summary.seeds[i] = std::move(rep);
            }

            const RunRecord run =
                run_simulation(state0, cfg.params, cfg.solver,
                               to_flow_system(cfg.system));
            for (std::size_t i = 0; i < summary.seeds.size(); ++i) {
                SeedReport& rep = summary.seeds[i];
                rep.terminated = run_termination_name(run.termination);
                if (run.estimate) {
                    BlowupEstimate est = *run.estimate;
                    // s1/s2 give strict upper bounds on the blow-up time; the
                    // s3 value -1/lambda_min is the exact pole of the reduced
                    // eigenvalue dynamics, so a measured detection may land a
                    // fraction beyond it and carries no pass/fail verdict.
                    if (rep.criterion.member && rep.criterion.t_star &&
                        cfg.system != SystemKind::polytropic) {
                        attach_bound(est, *rep.criterion.t_star);
                        rep.bound_satisfied = est.bound_satisfied;
                    }
                    rep.t_detect = est.t_detect;
                    rep.detect_method = fit_method_name(est.method);
                }
                if (cfg.system == SystemKind::polytropic && cfg.solver.monitor &&
                    rep.criterion.member)
                    rep.violations =
                        polytropic_estimate_monitor(run, i, cfg.params.gamma)
                            .violations.size();
            }

            // Cross-validation against the characteristic oracle seeded with
            // the extracted point data.
            if (cfg.cross_validate && cfg.system != SystemKind::polytropic) {
                const CharSystem char_system = params.rho_bar > 0
                                                   ? CharSystem::background
                                                   : CharSystem::pressureless;
                for (std::size_t i = 0; i < summary.seeds.size(); ++i) {
                    auto [oracle, oracle_est] = integrate_characteristic(
                        char_system,
                        CharState{pds[i].rho0, pds[i].div_v0, 0.0}, params,
                        cfg.integrator, cfg.t_end);
                    oracle.seed = cfg.seeds[i];
                    const CrossValidationReport cv =
                        cross_validate(run, i, oracle);
                    summary.seeds[i].cross_val_max_rel_rho = cv.max_rel_rho;
                    summary.seeds[i].cross_val_max_rel_d = cv.max_rel_d;
                    if (cfg.output.csv)
                        writer.write("oracle_seed" + std::to_string(i) + ".csv",
                                     trajectory_csv(oracle, params.rho_bar));
                }
            }

            if (cfg.output.csv) {
                writer.write("stats.csv", stats_csv(run.history));
                for (std::size_t i = 0; i < run.tracer_series.size(); ++i)
                    writer.write("tracer_" + std::to_string(i) + ".csv",
                                 tracer_csv(run.tracer_series[i]));
                for (std::size_t s = 0; s < run.snapshots.size(); ++s) {
                    char name[32];
                    std::snprintf(name, sizeof(name), "snap_%03zu.csv", s);
                    writer.write(name, snapshot_csv(run.snapshots[s]));
                }
            }
            break;
        }

        case RunMode::sweep: {
            if (cfg.system != SystemKind::characteristic)
                throw std::invalid_argument(
                    "sweep mode requires system = characteristic");
            const SweepSpec& sw = cfg.sweep;
            if (sw.rho0_count < 1 || sw.d0_count < 1)
                throw std::invalid_argument("sweep counts must be >= 1");
            const std::size_t total = static_cast<std::size_t>(sw.rho0_count) *
                                      static_cast<std::size_t>(sw.d0_count);
            const CharSystem char_system = cfg.params.rho_bar > 0
                                               ? CharSystem::background
                                               : CharSystem::pressureless;
            std::vector<SeedReport> points(total);
            parallel_for(total, opts.jobs, [&](std::size_t idx) {
                const int ir = static_cast<int>(idx) / sw.d0_count;
                const int id = static_cast<int>(idx) % sw.d0_count;
                PointData pd;
                pd.rho0 = sw.rho0_count == 1
                              ? sw.rho0_min
                              : sw.rho0_min + (sw.rho0_max - sw.rho0_min) * ir /
                                                  (sw.rho0_count - 1);
                pd.div_v0 = sw.d0_count == 1
                                ? sw.d0_min
                                : sw.d0_min + (sw.d0_max - sw.d0_min) * id /
                                                  (sw.d0_count - 1);
                pd.lambda_min = pd.div_v0;
                SeedReport rep;
                rep.seed = pd.rho0;
                rep.criterion = run_criterion(pd, cfg.params, cfg.system,
                                              cfg.tolerance, rep.criterion_set);
                if (sw.integrate) {
                    auto [traj, estimate] = integrate_characteristic(
                        char_system, CharState{pd.rho0, pd.div_v0, 0.0},
                        cfg.params, cfg.integrator, cfg.t_end);
                    rep.terminated = termination_name(traj.terminated);
                    if (estimate) {
                        rep.t_detect = estimate->t_detect;
                        rep.detect_method = fit_method_name(estimate->method);
                        if (rep.criterion.member && rep.criterion.t_star) {
                            attach_bound(*estimate, *rep.criterion.t_star);
                            rep.bound_satisfied = estimate->bound_satisfied;
                        }
                    }
                }
                points[idx] = std::move(rep);
            });

            if (cfg.output.csv && !points.empty()) {
                std::string csv = "rho0,d0,member,t_star,window";
                for (const auto& [label, slack] : points.front().criterion.margins)
                    csv += ",margin_" + label;
                csv += ",t_detect\n";
                for (std::size_t idx = 0; idx < total; ++idx) {
                    const int ir = static_cast<int>(idx) / sw.d0_count;
                    const int id = static_cast<int>(idx) % sw.d0_count;
                    const double rho0 =
                        sw.rho0_count == 1
                            ? sw.rho0_min
                            : sw.rho0_min + (sw.rho0_max - sw.rho0_min) * ir /
                                                (sw.rho0_count - 1);
                    const double d0 =
                        sw.d0_count == 1
                            ? sw.d0_min
                            : sw.d0_min + (sw.d0_max - sw.d0_min) * id /
                                              (sw.d0_count - 1);
                    const SeedReport& s = points[idx];
                    csv += g17(rho0) + "," + g17(d0) + "," +
                           (s.criterion.member ? "1" : "0") + ",";
                    if (s.criterion.t_star) csv += g17(*s.criterion.t_star);
                    csv += ',';
                    if (s.criterion.window) csv += g17(*s.criterion.window);
                    for (const auto& [label, slack] : s.criterion.margins)
                        csv += "," + g17(slack);
                    csv += ',';
                    if (s.t_detect) csv += g17(*s.t_detect);
                    csv += '\n';
                }
                writer.write("sweep.csv", csv);
            }
            // the phase map lives in the CSV; the summary carries no per-seed rows
            break;
        }
    }

    finish_summary(summary, cfg, writer);
    return summary;
}

}  // namespace eplab
