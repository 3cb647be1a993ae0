#include "eplab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace eplab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw parse_error("key '" + key + "': expected a number, got '" + val + "'");
    }
}

long parse_int(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw parse_error("key '" + key + "': expected an integer, got '" + val + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& val) {
    if (val == "true") return true;
    if (val == "false") return false;
    throw parse_error("key '" + key + "': expected true or false, got '" + val + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& val) {
    std::vector<double> out;
    for (const std::string& item : split(val, ','))
        out.push_back(parse_double(key, item));
    return out;
}

FieldPreset parse_preset(const std::string& key, const std::string& val) {
    const auto open = val.find('(');
    if (open == std::string::npos || val.back() != ')')
        throw parse_error("key '" + key + "': expected name(args...), got '" + val + "'");
    FieldPreset p;
    p.name = trim(val.substr(0, open));
    const std::string inner = val.substr(open + 1, val.size() - open - 2);
    if (!trim(inner).empty())
        for (const std::string& item : split(inner, ','))
            p.args.push_back(parse_double(key, item));
    return p;
}

struct PresetSignature {
    std::size_t arity;
    std::set<std::string> roles;
};

const std::map<std::string, PresetSignature>& preset_signatures() {
    static const std::map<std::string, PresetSignature> sig{
        {"gauss_bump", {3, {"rho"}}},
        {"cosine", {2, {"rho"}}},
        {"vacuum_quartic", {1, {"rho"}}},
        {"neg_sine", {1, {"v"}}},
        {"linear_well", {1, {"v"}}},
        {"constant", {1, {"rho", "v", "S"}}},
    };
    return sig;
}

void validate_preset(const std::string& key, const FieldPreset& p,
                     const std::string& role) {
    const auto& sigs = preset_signatures();
    const auto it = sigs.find(p.name);
    if (it == sigs.end())
        throw parse_error("key '" + key + "': unknown preset '" + p.name + "'");
    if (p.args.size() != it->second.arity)
        throw parse_error("key '" + key + "': preset " + p.name + " takes " +
                          std::to_string(it->second.arity) + " argument(s)");
    if (!it->second.roles.count(role))
        throw parse_error("key '" + key + "': preset " + p.name +
                          " is not valid for field " + role);
}

}  // namespace

std::string to_string(SystemKind s) {
    switch (s) {
        case SystemKind::ep: return "ep";
        case SystemKind::ep_background: return "ep_background";
        case SystemKind::polytropic: return "polytropic";
        case SystemKind::characteristic: return "characteristic";
        case SystemKind::riccati: return "riccati";
    }
    return "?";
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    bool have_system = false, have_grid = false;
    bool have_rho_preset = false, have_v_preset = false, have_s_preset = false;
    bool have_rho0 = false, have_div_v0 = false, have_lambda0 = false;

    static const std::set<std::string> known_sections{
        "params", "grid", "initial", "integrator", "solver", "sweep", "output"};

    std::string section;  // empty = top level
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw parse_error("line " + std::to_string(lineno) +
                                  ": malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(section))
                throw parse_error("unknown section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error("line " + std::to_string(lineno) +
                              ": expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string qualified = section.empty() ? key : section + "." + key;
        if (!seen.insert(qualified).second)
            throw parse_error("duplicate key '" + qualified + "'");

        if (section.empty()) {
            if (key == "system") {
                have_system = true;
                if (val == "ep") cfg.system = SystemKind::ep;
                else if (val == "ep_background") cfg.system = SystemKind::ep_background;
                else if (val == "polytropic") cfg.system = SystemKind::polytropic;
                else if (val == "characteristic") cfg.system = SystemKind::characteristic;
                else if (val == "riccati") cfg.system = SystemKind::riccati;
                else
                    throw parse_error("key 'system': unknown system '" + val + "'");
            } else if (key == "seeds") {
                cfg.seeds = parse_list(key, val);
            } else if (key == "t_end") {
                cfg.t_end = parse_double(key, val);
            } else if (key == "tolerance") {
                cfg.tolerance = parse_double(key, val);
            } else if (key == "rng_seed") {
                cfg.rng_seed = static_cast<unsigned long>(parse_int(key, val));
            } else {
                throw parse_error("unknown key '" + key + "'");
            }
        } else if (section == "params") {
            if (key == "k") cfg.params.k = parse_double(key, val);
            else if (key == "rho_bar") cfg.params.rho_bar = parse_double(key, val);
            else if (key == "gamma") cfg.params.gamma = parse_double(key, val);
            else throw parse_error("unknown key 'params." + key + "'");
        } else if (section == "grid") {
            have_grid = true;
            if (!cfg.grid) cfg.grid = Grid1D{};
            if (key == "x_min") cfg.grid->x_min = parse_double(key, val);
            else if (key == "x_max") cfg.grid->x_max = parse_double(key, val);
            else if (key == "n_cells") cfg.grid->n_cells = static_cast<int>(parse_int(key, val));
            else if (key == "periodic") cfg.grid->periodic = parse_bool(key, val);
            else throw parse_error("unknown key 'grid." + key + "'");
        } else if (section == "initial") {
            if (key == "rho") {
                cfg.rho_preset = parse_preset(key, val);
                have_rho_preset = true;
            } else if (key == "v") {
                cfg.v_preset = parse_preset(key, val);
                have_v_preset = true;
            } else if (key == "S") {
                cfg.s_preset = parse_preset(key, val);
                have_s_preset = true;
            } else if (key == "rho0") {
                cfg.rho0 = parse_double(key, val);
                have_rho0 = true;
            } else if (key == "div_v0") {
                cfg.div_v0 = parse_double(key, val);
                have_div_v0 = true;
            } else if (key == "lambda0") {
                cfg.lambda0 = parse_double(key, val);
                have_lambda0 = true;
            } else {
                throw parse_error("unknown key 'initial." + key + "'");
            }
        } else if (section == "integrator") {
            if (key == "rel_tol") cfg.integrator.rel_tol = parse_double(key, val);
            else if (key == "abs_tol") cfg.integrator.abs_tol = parse_double(key, val);
            else if (key == "dt_init") cfg.integrator.dt_init = parse_double(key, val);
            else if (key == "dt_min") cfg.integrator.dt_min = parse_double(key, val);
            else if (key == "rho_cap") cfg.integrator.rho_cap = parse_double(key, val);
            else throw parse_error("unknown key 'integrator." + key + "'");
        } else if (section == "solver") {
            if (key == "cfl") cfg.solver.cfl = parse_double(key, val);
            else if (key == "gradient_cap") cfg.solver.gradient_cap = parse_double(key, val);
            else if (key == "dealias") cfg.solver.dealias = parse_bool(key, val);
            else if (key == "snapshot_every") cfg.solver.snapshot_every = static_cast<int>(parse_int(key, val));
            else if (key == "physical_momentum") cfg.solver.physical_momentum = parse_bool(key, val);
            else if (key == "monitor") cfg.solver.monitor = parse_bool(key, val);
            else if (key == "max_steps") cfg.solver.max_steps = parse_int(key, val);
            else if (key == "cross_validate") cfg.cross_validate = parse_bool(key, val);
            else throw parse_error("unknown key 'solver." + key + "'");
        } else if (section == "sweep") {
            if (key == "rho0_min") cfg.sweep.rho0_min = parse_double(key, val);
            else if (key == "rho0_max") cfg.sweep.rho0_max = parse_double(key, val);
            else if (key == "rho0_count") cfg.sweep.rho0_count = static_cast<int>(parse_int(key, val));
            else if (key == "d0_min") cfg.sweep.d0_min = parse_double(key, val);
            else if (key == "d0_max") cfg.sweep.d0_max = parse_double(key, val);
            else if (key == "d0_count") cfg.sweep.d0_count = static_cast<int>(parse_int(key, val));
            else if (key == "integrate") cfg.sweep.integrate = parse_bool(key, val);
            else throw parse_error("unknown key 'sweep." + key + "'");
        } else if (section == "output") {
            if (key == "dir") cfg.output.dir = val;
            else if (key == "formats") {
                cfg.output.text = cfg.output.json = cfg.output.csv = false;
                for (const std::string& f : split(val, ',')) {
                    if (f == "text") cfg.output.text = true;
                    else if (f == "json") cfg.output.json = true;
                    else if (f == "csv") cfg.output.csv = true;
                    else throw parse_error("key 'output.formats': unknown format '" + f + "'");
                }
            } else {
                throw parse_error("unknown key 'output." + key + "'");
            }
        }
    }

    if (!have_system) throw parse_error("missing required key 'system'");

    try {
        cfg.params.validate();
    } catch (const std::exception& e) {
        throw parse_error(e.what());
    }
    if (cfg.grid) {
        try {
            cfg.grid->validate();
        } catch (const std::exception& e) {
            throw parse_error(std::string("section [grid]: ") + e.what());
        }
    }
    try {
        cfg.integrator.validate();
        cfg.solver.t_end = cfg.t_end;
        cfg.solver.validate();
    } catch (const std::exception& e) {
        throw parse_error(e.what());
    }
    if (!(cfg.t_end > 0)) throw parse_error("key 't_end': must be positive");
    if (cfg.tolerance < 0) throw parse_error("key 'tolerance': must be >= 0");

    const bool is_pde = cfg.system == SystemKind::ep ||
                        cfg.system == SystemKind::ep_background ||
                        cfg.system == SystemKind::polytropic;
    if (is_pde) {
        if (!have_grid) throw parse_error("section [grid] required for pde systems");
        if (!have_rho_preset || !have_v_preset)
            throw parse_error("keys 'initial.rho' and 'initial.v' required for pde systems");
        validate_preset("initial.rho", cfg.rho_preset, "rho");
        validate_preset("initial.v", cfg.v_preset, "v");
        if (cfg.system == SystemKind::polytropic) {
            if (!have_s_preset)
                throw parse_error("key 'initial.S' required for polytropic runs");
            validate_preset("initial.S", cfg.s_preset, "S");
            if (!cfg.grid->periodic)
                throw parse_error("polytropic runs require a periodic grid");
        } else if (have_s_preset) {
            throw parse_error("key 'initial.S' is only valid for polytropic runs");
        }
        if (cfg.system == SystemKind::ep_background && !(cfg.params.rho_bar > 0))
            throw parse_error("key 'params.rho_bar': ep_background requires rho_bar > 0");
        if (cfg.system == SystemKind::ep && cfg.params.rho_bar != 0)
            throw parse_error(
                "key 'params.rho_bar': must be 0 for system ep (use ep_background)");
        for (double a : cfg.seeds)
            if (!cfg.grid->contains(a))
                throw parse_error("key 'seeds': seed " + fmt(a) +
                                  " outside the grid domain");
    } else if (cfg.system == SystemKind::characteristic) {
        if (!have_rho0 || !have_div_v0)
            throw parse_error(
                "keys 'initial.rho0' and 'initial.div_v0' required for characteristic runs");
        if (cfg.rho0 < 0) throw parse_error("key 'initial.rho0': must be >= 0");
        if (have_lambda0)
            throw parse_error("key 'initial.lambda0' is only valid for riccati runs");
    } else if (cfg.system == SystemKind::riccati) {
        if (!have_lambda0)
            throw parse_error("key 'initial.lambda0' required for riccati runs");
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_echo(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "system = " << to_string(cfg.system) << "\n";
    if (!cfg.seeds.empty()) {
        out << "seeds = ";
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
            out << (i ? ", " : "") << fmt(cfg.seeds[i]);
        out << "\n";
    }
    out << "t_end = " << fmt(cfg.t_end) << "\n";
    out << "tolerance = " << fmt(cfg.tolerance) << "\n";
    out << "rng_seed = " << cfg.rng_seed << "\n";

    out << "\n[params]\n";
    out << "k = " << fmt(cfg.params.k) << "\n";
    out << "rho_bar = " << fmt(cfg.params.rho_bar) << "\n";
    out << "gamma = " << fmt(cfg.params.gamma) << "\n";

    if (cfg.grid) {
        out << "\n[grid]\n";
        out << "x_min = " << fmt(cfg.grid->x_min) << "\n";
        out << "x_max = " << fmt(cfg.grid->x_max) << "\n";
        out << "n_cells = " << cfg.grid->n_cells << "\n";
        out << "periodic = " << (cfg.grid->periodic ? "true" : "false") << "\n";
    }

    auto emit_preset = [&](const char* key, const FieldPreset& p) {
        out << key << " = " << p.name << "(";
        for (std::size_t i = 0; i < p.args.size(); ++i)
            out << (i ? ", " : "") << fmt(p.args[i]);
        out << ")\n";
    };
    out << "\n[initial]\n";
    const bool is_pde = cfg.system == SystemKind::ep ||
                        cfg.system == SystemKind::ep_background ||
                        cfg.system == SystemKind::polytropic;
    if (is_pde) {
        emit_preset("rho", cfg.rho_preset);
        emit_preset("v", cfg.v_preset);
        if (cfg.system == SystemKind::polytropic) emit_preset("S", cfg.s_preset);
    } else if (cfg.system == SystemKind::characteristic) {
        out << "rho0 = " << fmt(cfg.rho0) << "\n";
        out << "div_v0 = " << fmt(cfg.div_v0) << "\n";
    } else {
        out << "lambda0 = " << fmt(cfg.lambda0) << "\n";
    }

    out << "\n[integrator]\n";
    out << "rel_tol = " << fmt(cfg.integrator.rel_tol) << "\n";
    out << "abs_tol = " << fmt(cfg.integrator.abs_tol) << "\n";
    out << "dt_init = " << fmt(cfg.integrator.dt_init) << "\n";
    out << "dt_min = " << fmt(cfg.integrator.dt_min) << "\n";
    out << "rho_cap = " << fmt(cfg.integrator.rho_cap) << "\n";

    out << "\n[solver]\n";
    out << "cfl = " << fmt(cfg.solver.cfl) << "\n";
    out << "gradient_cap = " << fmt(cfg.solver.gradient_cap) << "\n";
    out << "dealias = " << (cfg.solver.dealias ? "true" : "false") << "\n";
    out << "snapshot_every = " << cfg.solver.snapshot_every << "\n";
    out << "physical_momentum = " << (cfg.solver.physical_momentum ? "true" : "false") << "\n";
    out << "monitor = " << (cfg.solver.monitor ? "true" : "false") << "\n";
    out << "max_steps = " << cfg.solver.max_steps << "\n";
    out << "cross_validate = " << (cfg.cross_validate ? "true" : "false") << "\n";

    out << "\n[sweep]\n";
    out << "rho0_min = " << fmt(cfg.sweep.rho0_min) << "\n";
    out << "rho0_max = " << fmt(cfg.sweep.rho0_max) << "\n";
    out << "rho0_count = " << cfg.sweep.rho0_count << "\n";
    out << "d0_min = " << fmt(cfg.sweep.d0_min) << "\n";
    out << "d0_max = " << fmt(cfg.sweep.d0_max) << "\n";
    out << "d0_count = " << cfg.sweep.d0_count << "\n";
    out << "integrate = " << (cfg.sweep.integrate ? "true" : "false") << "\n";

    out << "\n[output]\n";
    out << "dir = " << cfg.output.dir << "\n";
    out << "formats = ";
    bool first = true;
    for (const auto& [flag, name] :
         {std::pair<bool, const char*>{cfg.output.text, "text"},
          {cfg.output.json, "json"},
          {cfg.output.csv, "csv"}}) {
        if (flag) {
            out << (first ? "" : ",") << name;
            first = false;
        }
    }
    out << "\n";
    return out.str();
}

namespace {

const std::map<std::string, std::string>& preset_map() {
    static const std::map<std::string, std::string> presets{
        {"thm1_demo", R"(# pressureless characteristic run, s1 member
system = characteristic
seeds = 0.0
t_end = 3.0

[params]
k = 1.0

[initial]
rho0 = 3.0
div_v0 = -2.0
)"},
        {"thm2_demo", R"(# background-density characteristic run, s2 member
system = characteristic
seeds = 0.0
t_end = 4.0

[params]
k = 1.0
rho_bar = 1.0

[initial]
rho0 = 2.0
div_v0 = -1.0
)"},
        {"thm3_demo", R"(# polytropic vacuum collapse, s3 member at the seed
system = polytropic
seeds = 0.0
t_end = 2.0
tolerance = 1e-8

[params]
k = 1.0
gamma = 2.0

[grid]
x_min = 0.0
x_max = 6.283185307179586
n_cells = 2048
periodic = true

[initial]
rho = vacuum_quartic(0.1)
v = neg_sine(1.0)
S = constant(0.0)

[solver]
cfl = 0.3
gradient_cap = 50.0
dealias = true
monitor = true
)"},
        {"cosine_collapse", R"(# periodic pressureless collapse with tracer cross-validation
system = ep
seeds = 0.0
t_end = 3.0
tolerance = 1e-8

[params]
k = 1.0

[grid]
x_min = 0.0
x_max = 6.283185307179586
n_cells = 4096
periodic = true

[initial]
rho = cosine(1.5, 1.2)
v = neg_sine(1.0)

[solver]
cfl = 0.4
gradient_cap = 50.0
cross_validate = true
)"},
    };
    return presets;
}

}  // namespace

const std::vector<std::string>& scenario_preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, text] : preset_map()) out.push_back(name);
        return out;
    }();
    return names;
}

std::string scenario_preset(const std::string& name) {
    const auto it = preset_map().find(name);
    if (it == preset_map().end())
        throw parse_error("unknown scenario preset '" + name + "'");
    return it->second;
}

ScalarField build_field(const FieldPreset& preset, const Grid1D& grid,
                        const std::string& role) {
    validate_preset("initial." + role, preset, role);
    const double L = grid.length();
    const double k1 = 2.0 * std::numbers::pi / L;
    const double center = 0.5 * (grid.x_min + grid.x_max);
    ScalarField f(grid);
    for (int i = 0; i < grid.n_cells; ++i) {
        const double x = grid.node(i);
        const double xi = x - grid.x_min;
        double v = 0.0;
        if (preset.name == "constant") {
            v = preset.args[0];
        } else if (preset.name == "cosine") {
            v = preset.args[0] + preset.args[1] * std::cos(k1 * xi);
        } else if (preset.name == "gauss_bump") {
            const double z = (x - preset.args[2]) / preset.args[1];
            v = preset.args[0] * std::exp(-0.5 * z * z);
        } else if (preset.name == "vacuum_quartic") {
            const double c = 1.0 - std::cos(k1 * xi);
            v = preset.args[0] * c * c;
        } else if (preset.name == "neg_sine") {
            v = -preset.args[0] * std::sin(k1 * xi);
        } else if (preset.name == "linear_well") {
            v = preset.args[0] * (x - center);
        }
        f.values[static_cast<std::size_t>(i)] = v;
    }
    return f;
}

FlowState build_initial_state(const ExperimentConfig& cfg) {
    if (!cfg.grid) throw parse_error("pde systems require a [grid] section");
    FlowState state;
    state.rho = build_field(cfg.rho_preset, *cfg.grid, "rho");
    state.v = build_field(cfg.v_preset, *cfg.grid, "v");
    if (cfg.system == SystemKind::polytropic)
        state.S = build_field(cfg.s_preset, *cfg.grid, "S");
    state.t = 0.0;
    for (double a : cfg.seeds) state.tracers.push_back(Tracer{a, a});
    return state;
}

}  // namespace eplab
