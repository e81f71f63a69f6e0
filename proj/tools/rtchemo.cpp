// rtchemo: run the agent, full kinetic and limit kinetic chemotaxis models.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rtchemo/config.hpp"
#include "rtchemo/diagnostics.hpp"
#include "rtchemo/io.hpp"
#include "rtchemo/parallel.hpp"

using namespace rtchemo;

namespace {

struct Overrides {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> u;
    std::optional<double> epsilon;
    std::string noise;
};

RunConfig load(const Overrides& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : parse_config(o.config_path);
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.seed) c.agents.seed = *o.seed;
    if (o.u) c.signal.wave_speed = *o.u;
    if (o.epsilon) c.pathway.epsilon = *o.epsilon;
    if (o.noise == "on") c.pathway.noise_enabled = true;
    if (o.noise == "off") c.pathway.noise_enabled = false;
    validate(c);
    return c;
}

Json metadata(const std::string& subcommand, const RunConfig& c, Json summary) {
    Json j;
    j["run"] = Json{{"subcommand", subcommand}, {"summary", std::move(summary)}};
    j["config"] = config_to_json(c);
    return j;
}

// Snapshot times k*every up to t_end (t_end always included).
std::vector<double> snapshot_times(double t_end, double every) {
    std::vector<double> ts;
    if (every > 0.0)
        for (std::size_t k = 1; static_cast<double>(k) * every < t_end * (1.0 - 1e-12); ++k)
            ts.push_back(static_cast<double>(k) * every);
    ts.push_back(t_end);
    return ts;
}

int simulate_full(const RunConfig& c, int threads) {
    OutputTracker out(c.output_dir);
    const auto solver = make_full_solver(c, threads);
    auto s = solver.initialize(make_init(c));
    const double dt = effective_dt(c);
    BoundsMonitor mon(solver, s);
    std::vector<ProfileRecord> snaps{density_flux(solver, s)};
    std::vector<ConcentrationRecord> conc{concentration(solver, s)};
    for (double t : snapshot_times(c.solver.t_end, c.solver.snapshot_every)) {
        solver.advance(s, t, dt, [&](const FullKineticState& st) { mon.observe(st); });
        snaps.push_back(density_flux(solver, s));
        conc.push_back(concentration(solver, s));
    }
    write_text(out.file("profiles.csv"), profiles_csv(snaps));
    write_text(out.file("concentration.csv"), concentration_csv(conc));
    write_text(out.file("y_profile.csv"), y_profile_csv(solver, s));
    if (c.solver.dump_q) {
        std::string q = "x,v,y,q\n";
        const auto& g = solver.grid();
        for (std::size_t i = 0; i < s.nx; ++i)
            for (std::size_t k = 0; k < s.nv; ++k)
                for (std::size_t j = 0; j < s.ny; ++j)
                    q += fmt(g.x.center(i)) + ',' + fmt(g.velocities.speeds[k]) + ',' + fmt(g.y.center(j)) + ',' +
                         fmt(s.at(i, k, j)) + '\n';
        write_text(out.file("q.csv"), q);
    }
    const auto ps = phase_shift(snaps.back(), solver.signal(), s.t);
    write_json(out.file("metadata.json"),
               metadata("simulate-full", c,
                        {{"t_final", s.t},
                         {"dt", dt},
                         {"steps", s.steps},
                         {"mass_drift_per_1000_steps", mon.drift_per_1000_steps()},
                         {"second_moment_max", mon.second_moment_max()},
                         {"linf_growth_rate", mon.linf_growth_rate()},
                         {"phase_shift_um", ps.shift},
                         {"phase_shift_degenerate", ps.degenerate}}));
    out.commit();
    std::printf("simulate-full: %zu steps to t = %.6g, mass drift %.3g, phase shift %.4g um\n", s.steps, s.t,
                mon.max_relative_drift(), ps.shift);
    return 0;
}

int simulate_limit(const RunConfig& c, int threads) {
    OutputTracker out(c.output_dir);
    const auto solver = make_limit_solver(c, threads);
    auto s = solver.initialize();
    const double dt = effective_dt(c);
    std::vector<ProfileRecord> snaps{density_flux(solver, s)};
    for (double t : snapshot_times(c.solver.t_end, c.solver.snapshot_every)) {
        solver.advance(s, t, dt);
        snaps.push_back(density_flux(solver, s));
    }
    write_text(out.file("profiles.csv"), profiles_csv(snaps));
    const auto ps = phase_shift(snaps.back(), solver.signal(), s.t);
    write_json(out.file("metadata.json"),
               metadata("simulate-limit", c,
                        {{"t_final", s.t},
                         {"dt", dt},
                         {"steps", s.steps},
                         {"kernel_mode", std::string(to_string(c.effective_kernel_mode()))},
                         {"mass_relative_drift", std::abs(solver.mass(s) - s.total_mass_initial) / s.total_mass_initial},
                         {"phase_shift_um", ps.shift},
                         {"phase_shift_degenerate", ps.degenerate}}));
    out.commit();
    std::printf("simulate-limit: %zu steps to t = %.6g, phase shift %.4g um\n", s.steps, s.t, ps.shift);
    return 0;
}

int simulate_agents(const RunConfig& c, int threads) {
    OutputTracker out(c.output_dir);
    const auto sim = make_agent_simulator(c, threads);
    auto pop = sim.initialize(make_agent_init(c));
    const std::size_t nb = c.agents.nbins;
    std::vector<ProfileRecord> snaps{sim.bin(pop, nb)};
    ComovingAverage avg(sim, nb, c.solver.t_end, c.agents.average_window);
    for (double t : snapshot_times(c.solver.t_end, c.agents.snapshot_every)) {
        sim.advance(pop, t, c.agents.dt_agent, [&](const AgentPopulation& p) {
            if (c.agents.average_window > 0.0) avg.observe(p);
        });
        snaps.push_back(sim.bin(pop, nb));
    }
    write_text(out.file("profiles.csv"), profiles_csv(snaps));
    Json summary{{"t_final", pop.t}, {"n_cells", pop.count()}, {"tumbles", pop.tumbles}};
    const auto ps = phase_shift(snaps.back(), sim.signal(), pop.t);
    summary["phase_shift_um"] = ps.shift;
    if (c.agents.average_window > 0.0) {
        const auto a = avg.result();
        write_text(out.file("profile_avg.csv"), profiles_csv({a}));
        const auto pa = phase_shift(a, sim.signal(), a.t);
        summary["average_samples"] = avg.samples();
        summary["phase_shift_avg_um"] = pa.shift;
    }
    const auto ys = sample_moments(sim.y_values(pop));
    summary["y_mean"] = ys.mean;
    summary["y_variance"] = ys.variance;
    if (c.agents.dump_agents) write_text(out.file("agents.csv"), agents_csv(sim, pop));
    write_json(out.file("metadata.json"), metadata("simulate-agents", c, summary));
    out.commit();
    std::printf("simulate-agents: %zu cells to t = %.6g, %zu tumbles, phase shift %.4g um\n", pop.count(), pop.t,
                pop.tumbles, ps.shift);
    return 0;
}

int kernel_table(const RunConfig& c, std::size_t points, double u_max) {
    OutputTracker out(c.output_dir);
    const Pathway pw = make_pathway(c);
    const NoiseKernel noise(pw, c.solver.quadrature_order, c.solver.quadrature_rule);
    if (!(u_max > 0.0)) u_max = make_signal(c).max_abs_pathwise_derivative(c.grid.v0);
    if (!(u_max > 0.0)) u_max = 1.0;
    const std::size_t half = std::max<std::size_t>(points / 2, 1);
    std::string csv = "u,T_deterministic,T_noise\n";
    for (std::size_t i = 0; i <= 2 * half; ++i) {
        const double u = u_max * (static_cast<double>(i) - static_cast<double>(half)) / static_cast<double>(half);
        csv += fmt(u) + ',' + fmt(pw.limit_kernel_deterministic(u)) + ',' + fmt(noise(u)) + '\n';
    }
    write_text(out.file("kernel.csv"), csv);
    write_json(out.file("metadata.json"),
               metadata("kernel", c, {{"u_max", u_max}, {"rows", 2 * half + 1}, {"G0", pw.G0()},
                                      {"T0_deterministic", pw.limit_kernel_deterministic(0.0)}}));
    out.commit();
    std::printf("kernel: T(0) = %.12g, G(0) = %.12g\n", pw.limit_kernel_deterministic(0.0), pw.G0());
    return 0;
}

int convergence(const RunConfig& c, int threads) {
    OutputTracker out(c.output_dir);
    const auto r = convergence_study(make_convergence_setup(c, threads), c.study.eps_list);
    write_text(out.file("convergence.csv"), convergence_csv(r));
    write_text(out.file("limit_profile.csv"), profiles_csv({r.limit_profile}));
    for (const auto& row : r.rows) {
        char name[64];
        std::snprintf(name, sizeof name, "full_profile_eps_%g.csv", row.epsilon);
        write_text(out.file(name), profiles_csv({row.profile}));
    }
    auto verdict = convergence_verdict(r);
    write_json(out.file("verdict.json"), verdict);
    write_json(out.file("metadata.json"), metadata("convergence", c, verdict));
    out.commit();
    for (const auto& row : r.rows) std::printf("eps %-6g l1_rho %.6g\n", row.epsilon, row.l1_rho);
    std::printf("verdict: %s\n", r.pass() ? "PASS" : "FAIL");
    return 0;
}

ProfileRecord load_profile(const fs::path& dir, RunConfig& cfg) {
    cfg = parse_config((dir / "metadata.json").string());
    const auto meta = Json::parse(std::ifstream(dir / "metadata.json"));
    const std::string sub = meta.at("run").at("subcommand").get<std::string>();
    ProfileSource src = sub == "simulate-agents" ? ProfileSource::Agents
                        : sub == "simulate-full" ? ProfileSource::Full
                                                 : ProfileSource::Limit;
    const fs::path avg = dir / "profile_avg.csv";
    return read_profile_csv(fs::exists(avg) ? avg : dir / "profiles.csv", src);
}

int compare(const std::string& a_dir, const std::string& b_dir, const std::string& out_dir) {
    RunConfig ca, cb;
    auto a = load_profile(a_dir, ca);
    auto b = load_profile(b_dir, cb);
    if (a.size() != b.size()) {
        if (a.size() > b.size() && a.size() % b.size() == 0)
            a = coarsen(a, a.size() / b.size());
        else if (b.size() > a.size() && b.size() % a.size() == 0)
            b = coarsen(b, b.size() / a.size());
        else
            throw DomainError("compare: profile grids are incompatible (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + " cells)");
    }
    const auto d = l1_distance(a, b);
    const Signal sig = make_signal(ca);
    const auto pa = phase_shift(a, sig, a.t);
    const auto pb = phase_shift(b, make_signal(cb), b.t);
    const double diff = circular_difference(pb.shift, pa.shift, sig.domain_length());
    Json report{{"a", a_dir},
                {"b", b_dir},
                {"cells", a.size()},
                {"l1_rho", d.rho},
                {"l1_J", d.J},
                {"phase_shift_a_um", pa.shift},
                {"phase_shift_b_um", pb.shift},
                {"phase_shift_difference_um", diff},
                {"phase_degenerate", pa.degenerate || pb.degenerate}};
    const std::string text = report.dump(2) + "\n";
    if (!out_dir.empty()) {
        OutputTracker out(out_dir);
        write_text(out.file("compare.json"), text);
        out.commit();
    }
    std::cout << text;
    return 0;
}

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config_path, "JSON config file (or a run's metadata.json)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "agent RNG seed");
    sub->add_option("--u", o.u, "wave speed in um/s");
    sub->add_option("--epsilon", o.epsilon, "adaptation time scale epsilon");
    sub->add_option("--noise", o.noise, "methylation noise")->check(CLI::IsMember({"on", "off"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Run-and-tumble chemotaxis: agent, full kinetic and limit kinetic models"};
    app.require_subcommand(1);
    Overrides o;
    auto* full = app.add_subcommand("simulate-full", "full kinetic model in (x, v, y)");
    auto* limit = app.add_subcommand("simulate-limit", "limit kinetic model in (x, v)");
    auto* agents = app.add_subcommand("simulate-agents", "individual-based model");
    auto* kernel = app.add_subcommand("kernel", "tabulate the limit tumbling kernel");
    auto* conv = app.add_subcommand("convergence", "epsilon sweep of full against limit");
    for (auto* s : {full, limit, agents, kernel, conv}) add_common(s, o);
    std::size_t points = 400;
    double u_max = 0.0;
    kernel->add_option("--points", points, "number of intervals in the u table");
    kernel->add_option("--u-max", u_max, "table half-range (default: max |D_t M| of the signal)");
    auto* cmp = app.add_subcommand("compare", "L1 distance and phase shifts between two run directories");
    std::string dir_a, dir_b, cmp_out;
    cmp->add_option("a", dir_a, "first run directory")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("b", dir_b, "second run directory")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("--out", cmp_out, "directory for compare.json");

    CLI11_PARSE(app, argc, argv);
    try {
        const int threads = worker_count_from_env();
        if (*cmp) return compare(dir_a, dir_b, cmp_out);
        const RunConfig c = load(o);
        if (*full) return simulate_full(c, threads);
        if (*limit) return simulate_limit(c, threads);
        if (*agents) return simulate_agents(c, threads);
        if (*kernel) return kernel_table(c, points, u_max);
        if (*conv) return convergence(c, threads);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rtchemo: error: %s\n", e.what());
        return 1;
    }
    return 1;
}
