// eplab: criterion checks, characteristic ODE runs, 1D Eulerian runs and
// parameter sweeps for the attractive Euler-Poisson and polytropic Euler
// systems.

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "eplab/config.hpp"
#include "eplab/report.hpp"
#include "eplab/scenario.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    int jobs = 1;
    bool no_timestamp = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file");
    cmd->add_option("--preset", args.preset,
                    "built-in scenario preset (thm1_demo, thm2_demo, "
                    "thm3_demo, cosine_collapse)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--jobs", args.jobs, "parallel workers for independent seeds")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--no-timestamp", args.no_timestamp,
                  "suppress the timestamp line in reports");
}

eplab::ExperimentConfig load(const CommonArgs& args) {
    if (args.config_path.empty() == args.preset.empty())
        throw eplab::parse_error("provide exactly one of --config or --preset");
    eplab::ExperimentConfig cfg =
        args.config_path.empty()
            ? eplab::parse_config(eplab::scenario_preset(args.preset))
            : eplab::load_config_file(args.config_path);
    if (!args.out_dir.empty()) cfg.output.dir = args.out_dir;
    return cfg;
}

int execute(const CommonArgs& args, eplab::RunMode mode) {
    try {
        const eplab::ExperimentConfig cfg = load(args);
        eplab::RunOptions opts;
        opts.jobs = args.jobs;
        opts.timestamp = !args.no_timestamp;
        const eplab::RunSummary summary = eplab::run_scenario(cfg, mode, opts);
        std::cout << eplab::emit_report(summary, eplab::ReportFormat::text);
        return eplab::any_bound_violated(summary) ? 4 : 0;
    } catch (const eplab::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int render_report(const std::string& path, const std::string& format) {
    try {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "parse error: cannot open " << path << "\n";
            return 2;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        const eplab::RunSummary summary = eplab::parse_summary_json(buf.str());
        std::cout << eplab::emit_report(summary,
                                        format == "json"
                                            ? eplab::ReportFormat::json
                                            : eplab::ReportFormat::text);
        return 0;
    } catch (const eplab::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-time blow-up laboratory for Euler-Poisson and "
                 "polytropic Euler flows"};
    app.require_subcommand(1);

    CommonArgs check_args, char_args, pde_args, sweep_args;
    CLI::App* check = app.add_subcommand("check", "criterion checks only");
    add_common(check, check_args);
    CLI::App* charc = app.add_subcommand(
        "char", "characteristic ODE run with monitors and blow-up detection");
    add_common(charc, char_args);
    CLI::App* pde =
        app.add_subcommand("pde", "Eulerian 1D run with tracers and monitors");
    add_common(pde, pde_args);
    CLI::App* sweep = app.add_subcommand(
        "sweep", "criterion phase map over (rho0, d0) as CSV");
    add_common(sweep, sweep_args);

    std::string report_path, report_format = "text";
    CLI::App* report =
        app.add_subcommand("report", "re-render a stored summary.json");
    report->add_option("summary", report_path, "path to summary.json")
        ->required();
    report->add_option("--format", report_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));

    CLI11_PARSE(app, argc, argv);

    if (check->parsed()) return execute(check_args, eplab::RunMode::check);
    if (charc->parsed())
        return execute(char_args, eplab::RunMode::characteristic);
    if (pde->parsed()) return execute(pde_args, eplab::RunMode::pde);
    if (sweep->parsed()) return execute(sweep_args, eplab::RunMode::sweep);
    if (report->parsed()) return render_report(report_path, report_format);
    return 0;
}
