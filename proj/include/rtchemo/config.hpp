#pragma once

// Run configuration: JSON with one object per section. Missing keys take the
// biophysical defaults; unknown keys are rejected.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtchemo/agents.hpp"
#include "rtchemo/diagnostics.hpp"
#include "rtchemo/errors.hpp"
#include "rtchemo/grid.hpp"
#include "rtchemo/pathway.hpp"
#include "rtchemo/signal.hpp"
#include "rtchemo/solver_full.hpp"
#include "rtchemo/solver_limit.hpp"

namespace rtchemo {

using Json = nlohmann::ordered_json;

struct GridSection {
    std::size_t nx = 200;
    std::size_t ny = 128;
    double y_halfwidth = 3.0;
    double y_stretch = 8.0;
    double v0 = 20.0;  // um/s

    bool operator==(const GridSection&) const = default;
};

struct SolverSection {
    double dt = 0.0;  // s; 0 = largest CFL-stable step
    double t_end = 400.0;
    double snapshot_every = 0.0;  // s; 0 = final state only
    double cfl = 0.9;
    YScheme y_scheme = YScheme::Implicit;
    std::size_t tumble_substeps = 2;
    std::optional<KernelMode> kernel_mode;  // unset follows noise_enabled
    int quadrature_order = kDefaultNoiseOrder;
    QuadratureRule quadrature_rule = QuadratureRule::Trapezoid;
    double boundary_mass_tol = 1e-6;
    InitSpec::YProfile init_y_profile = InitSpec::YProfile::Gaussian;
    double init_y_variance = 0.0;  // <= 0 selects 1/G(0)
    bool dump_q = false;

    bool operator==(const SolverSection&) const = default;
};

struct AgentSection {
    std::size_t n_cells = 20000;
    std::uint64_t seed = 1;
    double dt_agent = 1.0;  // s between synchronisation points
    double snapshot_every = 0.0;
    double max_substep = 0.05;
    double max_hazard = kMaxHazardPerSubstep;
    std::size_t nbins = 50;
    double init_y_variance = -1.0;  // < 0 selects 1/G(0)
    double average_window = 0.0;    // s; co-moving average before t_end
    bool dump_agents = false;

    bool operator==(const AgentSection&) const = default;
};

struct StudySection {
    std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};

    bool operator==(const StudySection&) const = default;
};

struct RunConfig {
    SignalSpec signal;
    LogSensingParams sensing;
    PathwayParams pathway;
    GridSection grid;
    SolverSection solver;
    AgentSection agents;
    StudySection study;
    std::string output_dir = "out";

    bool operator==(const RunConfig&) const = default;

    KernelMode effective_kernel_mode() const {
        if (solver.kernel_mode) return *solver.kernel_mode;
        return pathway.noise_enabled ? KernelMode::Noise : KernelMode::Deterministic;
    }
};

namespace detail {

inline void check_keys(const Json& obj, const std::string& section, const std::vector<std::string>& valid) {
    if (!obj.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
    const std::set<std::string> ok(valid.begin(), valid.end());
    for (const auto& [key, _] : obj.items()) {
        if (ok.count(key)) continue;
        std::string list;
        for (const auto& v : valid) list += (list.empty() ? "" : ", ") + v;
        throw ConfigError("config: unknown key '" + key + "' in section '" + section + "' (valid keys: " + list +
                          ")");
    }
}

template <class T>
void read(const Json& obj, const char* key, T& out, const std::string& section) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value for '" + section + "." + key + "': " + e.what());
    }
}

inline std::string y_profile_name(InitSpec::YProfile p) {
    switch (p) {
        case InitSpec::YProfile::Gaussian: return "gaussian";
        case InitSpec::YProfile::Dirac: return "dirac";
        case InitSpec::YProfile::Tabulated: return "tabulated";
    }
    return "?";
}

inline InitSpec::YProfile y_profile_from_name(const std::string& s) {
    if (s == "gaussian") return InitSpec::YProfile::Gaussian;
    if (s == "dirac") return InitSpec::YProfile::Dirac;
    throw ConfigError("config: solver.init_y_profile must be gaussian or dirac");
}

}  // namespace detail

inline RunConfig config_from_json(const Json& j) {
    using detail::check_keys;
    using detail::read;
    RunConfig c;
    if (j.is_null()) return c;
    check_keys(j, "<root>", {"signal", "pathway", "grid", "solver", "agents", "study", "output_dir"});
    read(j, "output_dir", c.output_dir, "<root>");

    bool domain_given = false;
    if (j.contains("signal")) {
        const auto& s = j.at("signal");
        check_keys(s, "signal",
                   {"kind", "S0_uM", "SA_uM", "ell_um", "u_um_per_s", "domain_length_um", "ramp_rate_per_s",
                    "ramp_window_s", "m0", "K_I_uM", "K_A_uM", "table"});
        std::string kind = std::string(to_string(c.signal.kind));
        read(s, "kind", kind, "signal");
        c.signal.kind = signal_kind_from_string(kind);
        read(s, "S0_uM", c.signal.S0, "signal");
        read(s, "SA_uM", c.signal.SA, "signal");
        read(s, "ell_um", c.signal.wavelength, "signal");
        read(s, "u_um_per_s", c.signal.wave_speed, "signal");
        domain_given = s.contains("domain_length_um");
        read(s, "domain_length_um", c.signal.domain_length, "signal");
        read(s, "ramp_rate_per_s", c.signal.ramp_rate, "signal");
        read(s, "ramp_window_s", c.signal.ramp_window, "signal");
        read(s, "m0", c.sensing.m0, "signal");
        read(s, "K_I_uM", c.sensing.K_I, "signal");
        read(s, "K_A_uM", c.sensing.K_A, "signal");
        if (s.contains("table")) {
            const auto& t = s.at("table");
            check_keys(t, "signal.table", {"x0_um", "dx_um", "values_uM"});
            read(t, "x0_um", c.signal.table.x0, "signal.table");
            read(t, "dx_um", c.signal.table.dx, "signal.table");
            read(t, "values_uM", c.signal.table.values, "signal.table");
        }
    }
    if (!domain_given) c.signal.domain_length = c.signal.wavelength;

    if (j.contains("pathway")) {
        const auto& p = j.at("pathway");
        check_keys(p, "pathway",
                   {"N", "alpha", "a0", "z0_per_s", "tau_s", "H", "sigma", "epsilon", "noise_enabled"});
        read(p, "N", c.pathway.N, "pathway");
        read(p, "alpha", c.pathway.alpha, "pathway");
        read(p, "a0", c.pathway.a0, "pathway");
        read(p, "z0_per_s", c.pathway.z0, "pathway");
        read(p, "tau_s", c.pathway.tau, "pathway");
        read(p, "H", c.pathway.H, "pathway");
        read(p, "sigma", c.pathway.sigma, "pathway");
        read(p, "epsilon", c.pathway.epsilon, "pathway");
        read(p, "noise_enabled", c.pathway.noise_enabled, "pathway");
    }
    c.sensing.alpha = c.pathway.alpha;

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, "grid", {"nx", "ny", "y_halfwidth", "y_stretch", "v0_um_per_s"});
        read(g, "nx", c.grid.nx, "grid");
        read(g, "ny", c.grid.ny, "grid");
        read(g, "y_halfwidth", c.grid.y_halfwidth, "grid");
        read(g, "y_stretch", c.grid.y_stretch, "grid");
        read(g, "v0_um_per_s", c.grid.v0, "grid");
    }

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        check_keys(s, "solver",
                   {"dt_s", "t_end_s", "snapshot_every_s", "cfl", "y_scheme", "tumble_substeps", "kernel_mode",
                    "quadrature_order", "quadrature_rule", "boundary_mass_tol", "init_y_profile", "init_y_variance",
                    "dump_q"});
        read(s, "dt_s", c.solver.dt, "solver");
        read(s, "t_end_s", c.solver.t_end, "solver");
        read(s, "snapshot_every_s", c.solver.snapshot_every, "solver");
        read(s, "cfl", c.solver.cfl, "solver");
        if (s.contains("y_scheme")) c.solver.y_scheme = y_scheme_from_string(s.at("y_scheme").get<std::string>());
        read(s, "tumble_substeps", c.solver.tumble_substeps, "solver");
        if (s.contains("kernel_mode")) {
            const auto m = s.at("kernel_mode").get<std::string>();
            if (m == "auto")
                c.solver.kernel_mode.reset();
            else
                c.solver.kernel_mode = kernel_mode_from_string(m);
        }
        read(s, "quadrature_order", c.solver.quadrature_order, "solver");
        if (s.contains("quadrature_rule"))
            c.solver.quadrature_rule = quadrature_rule_from_string(s.at("quadrature_rule").get<std::string>());
        read(s, "boundary_mass_tol", c.solver.boundary_mass_tol, "solver");
        if (s.contains("init_y_profile"))
            c.solver.init_y_profile = detail::y_profile_from_name(s.at("init_y_profile").get<std::string>());
        read(s, "init_y_variance", c.solver.init_y_variance, "solver");
        read(s, "dump_q", c.solver.dump_q, "solver");
    }

    if (j.contains("agents")) {
        const auto& a = j.at("agents");
        check_keys(a, "agents",
                   {"n_cells", "seed", "dt_agent_s", "snapshot_every_s", "max_substep_s", "max_hazard", "nbins",
                    "init_y_variance", "average_window_s", "dump_agents"});
        read(a, "n_cells", c.agents.n_cells, "agents");
        read(a, "seed", c.agents.seed, "agents");
        read(a, "dt_agent_s", c.agents.dt_agent, "agents");
        read(a, "snapshot_every_s", c.agents.snapshot_every, "agents");
        read(a, "max_substep_s", c.agents.max_substep, "agents");
        read(a, "max_hazard", c.agents.max_hazard, "agents");
        read(a, "nbins", c.agents.nbins, "agents");
        read(a, "init_y_variance", c.agents.init_y_variance, "agents");
        read(a, "average_window_s", c.agents.average_window, "agents");
        read(a, "dump_agents", c.agents.dump_agents, "agents");
    }

    if (j.contains("study")) {
        const auto& s = j.at("study");
        check_keys(s, "study", {"eps_list"});
        read(s, "eps_list", c.study.eps_list, "study");
    }
    return c;
}

inline Json config_to_json(const RunConfig& c) {
    Json j;
    Json s;
    s["kind"] = std::string(to_string(c.signal.kind));
    s["S0_uM"] = c.signal.S0;
    s["SA_uM"] = c.signal.SA;
    s["ell_um"] = c.signal.wavelength;
    s["u_um_per_s"] = c.signal.wave_speed;
    s["domain_length_um"] = c.signal.domain_length;
    s["ramp_rate_per_s"] = c.signal.ramp_rate;
    s["ramp_window_s"] = c.signal.ramp_window;
    s["m0"] = c.sensing.m0;
    s["K_I_uM"] = c.sensing.K_I;
    s["K_A_uM"] = c.sensing.K_A;
    if (c.signal.kind == SignalKind::Tabulated || !c.signal.table.values.empty())
        s["table"] = Json{{"x0_um", c.signal.table.x0},
                          {"dx_um", c.signal.table.dx},
                          {"values_uM", c.signal.table.values}};
    j["signal"] = s;

    j["pathway"] = Json{{"N", c.pathway.N},
                        {"alpha", c.pathway.alpha},
                        {"a0", c.pathway.a0},
                        {"z0_per_s", c.pathway.z0},
                        {"tau_s", c.pathway.tau},
                        {"H", c.pathway.H},
                        {"sigma", c.pathway.sigma},
                        {"epsilon", c.pathway.epsilon},
                        {"noise_enabled", c.pathway.noise_enabled}};
    j["grid"] = Json{{"nx", c.grid.nx},
                     {"ny", c.grid.ny},
                     {"y_halfwidth", c.grid.y_halfwidth},
                     {"y_stretch", c.grid.y_stretch},
                     {"v0_um_per_s", c.grid.v0}};
    j["solver"] = Json{{"dt_s", c.solver.dt},
                       {"t_end_s", c.solver.t_end},
                       {"snapshot_every_s", c.solver.snapshot_every},
                       {"cfl", c.solver.cfl},
                       {"y_scheme", std::string(to_string(c.solver.y_scheme))},
                       {"tumble_substeps", c.solver.tumble_substeps},
                       {"kernel_mode", c.solver.kernel_mode ? std::string(to_string(*c.solver.kernel_mode)) : "auto"},
                       {"quadrature_order", c.solver.quadrature_order},
                       {"quadrature_rule", std::string(to_string(c.solver.quadrature_rule))},
                       {"boundary_mass_tol", c.solver.boundary_mass_tol},
                       {"init_y_profile", detail::y_profile_name(c.solver.init_y_profile)},
                       {"init_y_variance", c.solver.init_y_variance},
                       {"dump_q", c.solver.dump_q}};
    j["agents"] = Json{{"n_cells", c.agents.n_cells},
                       {"seed", c.agents.seed},
                       {"dt_agent_s", c.agents.dt_agent},
                       {"snapshot_every_s", c.agents.snapshot_every},
                       {"max_substep_s", c.agents.max_substep},
                       {"max_hazard", c.agents.max_hazard},
                       {"nbins", c.agents.nbins},
                       {"init_y_variance", c.agents.init_y_variance},
                       {"average_window_s", c.agents.average_window},
                       {"dump_agents", c.agents.dump_agents}};
    j["study"] = Json{{"eps_list", c.study.eps_list}};
    j["output_dir"] = c.output_dir;
    return j;
}

inline RunConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = text.find_first_not_of(" \t\r\n") == std::string::npos ? Json() : Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    // Run metadata written by the CLI carries the full config under "config".
    if (j.is_object() && j.contains("run") && j.contains("config")) return config_from_json(j.at("config"));
    return config_from_json(j);
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ----------------------------------------------------------------- builders

inline Signal make_signal(const RunConfig& c) {
    LogSensingParams s = c.sensing;
    s.alpha = c.pathway.alpha;
    return Signal(c.signal, s);
}

inline Pathway make_pathway(const RunConfig& c) { return Pathway(c.pathway); }

inline VelocitySet make_velocities(const RunConfig& c) { return VelocitySet::two_velocity(c.grid.v0); }

inline XGrid make_x_grid(const RunConfig& c) { return XGrid{c.grid.nx, c.signal.domain_length}; }

inline YGrid make_y_grid(const RunConfig& c) {
    return YGrid::stretched(c.grid.y_halfwidth, c.grid.ny, c.grid.y_stretch);
}

inline FullSolverOptions make_full_options(const RunConfig& c, int threads) {
    FullSolverOptions o;
    o.y_scheme = c.solver.y_scheme;
    o.cfl = c.solver.cfl;
    o.boundary_mass_tol = c.solver.boundary_mass_tol;
    o.tumble_substeps = c.solver.tumble_substeps;
    o.threads = threads;
    return o;
}

inline LimitSolverOptions make_limit_options(const RunConfig& c, int threads) {
    LimitSolverOptions o;
    o.kernel_mode = c.effective_kernel_mode();
    o.quadrature_order = c.solver.quadrature_order;
    o.quadrature_rule = c.solver.quadrature_rule;
    o.cfl = c.solver.cfl;
    o.threads = threads;
    return o;
}

inline AgentOptions make_agent_options(const RunConfig& c, int threads) {
    AgentOptions o;
    o.max_hazard = c.agents.max_hazard;
    o.max_substep = c.agents.max_substep;
    o.threads = threads;
    return o;
}

inline InitSpec make_init(const RunConfig& c) {
    InitSpec ini;
    ini.y_profile = c.solver.init_y_profile;
    ini.y_variance = c.solver.init_y_variance;
    return ini;
}

inline AgentInit make_agent_init(const RunConfig& c) {
    AgentInit a;
    a.n_cells = c.agents.n_cells;
    a.seed = c.agents.seed;
    a.y_variance = c.agents.init_y_variance < 0.0 ? 1.0 / make_pathway(c).G0() : c.agents.init_y_variance;
    return a;
}

inline FullSolver make_full_solver(const RunConfig& c, int threads) {
    return FullSolver(FullGrid{make_x_grid(c), make_velocities(c), make_y_grid(c)}, make_signal(c),
                      make_pathway(c), make_full_options(c, threads));
}

inline LimitSolver make_limit_solver(const RunConfig& c, int threads) {
    return LimitSolver(make_x_grid(c), make_velocities(c), make_signal(c), make_pathway(c),
                       make_limit_options(c, threads));
}

inline AgentSimulator make_agent_simulator(const RunConfig& c, int threads) {
    return AgentSimulator(make_signal(c), make_pathway(c), make_velocities(c), make_agent_options(c, threads));
}

inline ConvergenceSetup make_convergence_setup(const RunConfig& c, int threads) {
    ConvergenceSetup s;
    s.signal = c.signal;
    s.sensing = c.sensing;
    s.sensing.alpha = c.pathway.alpha;
    s.pathway = c.pathway;
    s.x = make_x_grid(c);
    s.velocities = make_velocities(c);
    s.y = YGridSpec{c.grid.y_halfwidth, c.grid.ny, c.grid.y_stretch};
    s.full = make_full_options(c, 1);
    s.limit = make_limit_options(c, 1);
    s.init = make_init(c);
    s.t_end = c.solver.t_end;
    s.dt = c.solver.dt;
    s.workers = threads;
    return s;
}

// Step actually used by the PDE solvers.
inline double effective_dt(const RunConfig& c) {
    const double dt_max = c.solver.cfl * make_x_grid(c).dx() / c.grid.v0;
    return c.solver.dt > 0.0 ? c.solver.dt : dt_max;
}

// Cross-field checks, run before anything is simulated.
inline void validate(const RunConfig& c) {
    auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    try {
        const Signal signal = make_signal(c);
        const Pathway pathway = make_pathway(c);
        if (!(c.grid.v0 > 0.0)) fail("grid.v0_um_per_s must be > 0");
        if (c.grid.nx < 1) fail("grid.nx must be >= 1");
        FullGrid{make_x_grid(c), make_velocities(c), make_y_grid(c)}.validate(signal, pathway);
        if (!(c.solver.cfl > 0.0 && c.solver.cfl <= 1.0)) fail("solver.cfl must be in (0, 1]");
        if (c.solver.dt < 0.0) fail("solver.dt_s must be >= 0");
        const double dt_max = c.solver.cfl * make_x_grid(c).dx() / c.grid.v0;
        if (c.solver.dt > dt_max * (1.0 + 1e-12))
            fail("solver.dt_s = " + std::to_string(c.solver.dt) + " violates the CFL limit dt <= cfl*dx/v0 = " +
                 std::to_string(dt_max));
        if (!(c.solver.t_end > 0.0)) fail("solver.t_end_s must be > 0");
        if (c.solver.snapshot_every < 0.0) fail("solver.snapshot_every_s must be >= 0");
        if (c.solver.tumble_substeps < 1) fail("solver.tumble_substeps must be >= 1");
        if (c.signal.kind == SignalKind::UniformRamp && c.solver.t_end > c.signal.ramp_window)
            fail("solver.t_end_s exceeds signal.ramp_window_s");
        gaussian_rule(c.solver.quadrature_rule, c.solver.quadrature_order);
        if (c.agents.n_cells < 1) fail("agents.n_cells must be >= 1");
        if (!(c.agents.dt_agent > 0.0)) fail("agents.dt_agent_s must be > 0");
        if (!(c.agents.max_substep > 0.0)) fail("agents.max_substep_s must be > 0");
        if (!(c.agents.max_hazard > 0.0 && c.agents.max_hazard <= kMaxHazardPerSubstep))
            fail("agents.max_hazard must be in (0, 0.2] (tumble thinning bound)");
        if (c.agents.nbins < 1) fail("agents.nbins must be >= 1");
        if (c.agents.snapshot_every < 0.0) fail("agents.snapshot_every_s must be >= 0");
        if (c.agents.average_window < 0.0) fail("agents.average_window_s must be >= 0");
        if (c.agents.average_window > c.solver.t_end) fail("agents.average_window_s exceeds solver.t_end_s");
        if (c.study.eps_list.empty()) fail("study.eps_list must not be empty");
        for (std::size_t i = 0; i < c.study.eps_list.size(); ++i) {
            const double e = c.study.eps_list[i];
            if (!(e > 0.0 && e <= 1.0)) fail("study.eps_list entries must lie in (0, 1]");
            if (i > 0 && !(e < c.study.eps_list[i - 1])) fail("study.eps_list must be strictly decreasing");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

}  // namespace rtchemo
