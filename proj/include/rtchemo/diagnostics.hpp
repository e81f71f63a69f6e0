#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rtchemo/agents.hpp"
#include "rtchemo/errors.hpp"
#include "rtchemo/grid.hpp"
#include "rtchemo/parallel.hpp"
#include "rtchemo/profile.hpp"
#include "rtchemo/solver_full.hpp"
#include "rtchemo/solver_limit.hpp"

namespace rtchemo {

inline constexpr double kDegenerateResultant = 1e-6;

// ---------------------------------------------------------------- profiles

inline ProfileRecord density_flux(const FullSolver& solver, const FullKineticState& s) {
    const auto qbar = solver.marginal(s);
    const auto& vs = solver.grid().velocities;
    ProfileRecord r;
    r.t = s.t;
    r.dx = solver.grid().x.dx();
    r.source = ProfileSource::Full;
    r.rho.assign(s.nx, 0.0);
    r.J.assign(s.nx, 0.0);
    for (std::size_t i = 0; i < s.nx; ++i)
        for (std::size_t k = 0; k < s.nv; ++k) {
            const double w = vs.weights[k] * qbar[i * s.nv + k];
            r.rho[i] += w;
            r.J[i] += vs.speeds[k] * w;
        }
    for (double v : r.rho) r.mass += v * r.dx;
    return r;
}

inline ProfileRecord density_flux(const LimitSolver& solver, const LimitKineticState& s) {
    const auto& vs = solver.velocities();
    ProfileRecord r;
    r.t = s.t;
    r.dx = solver.x_grid().dx();
    r.source = ProfileSource::Limit;
    r.rho.assign(s.nx, 0.0);
    r.J.assign(s.nx, 0.0);
    for (std::size_t i = 0; i < s.nx; ++i)
        for (std::size_t k = 0; k < s.nv; ++k) {
            const double w = vs.weights[k] * s.at(i, k);
            r.rho[i] += w;
            r.J[i] += vs.speeds[k] * w;
        }
    for (double v : r.rho) r.mass += v * r.dx;
    return r;
}

inline ProfileRecord density_flux(const AgentSimulator& sim, const AgentPopulation& pop, std::size_t nbins) {
    return sim.bin(pop, nbins);
}

// Merge groups of `factor` adjacent cells (cell averages are preserved).
inline ProfileRecord coarsen(const ProfileRecord& p, std::size_t factor) {
    if (factor == 0 || p.size() % factor != 0) throw DomainError("coarsen: factor must divide the cell count");
    ProfileRecord r = p;
    const std::size_t n = p.size() / factor;
    r.dx = p.dx * static_cast<double>(factor);
    r.rho.assign(n, 0.0);
    r.J.assign(n, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        r.rho[i / factor] += p.rho[i] / static_cast<double>(factor);
        r.J[i / factor] += p.J[i] / static_cast<double>(factor);
    }
    return r;
}

// Periodic translation: result(x) = p(x + offset), linear between cell centers.
inline ProfileRecord translate(const ProfileRecord& p, double offset) {
    ProfileRecord r = p;
    const std::size_t n = p.size();
    if (n == 0) return r;
    const double L = p.length();
    for (std::size_t i = 0; i < n; ++i) {
        const double s = wrap_periodic(p.x_center(i) + offset - 0.5 * p.dx, L) / p.dx;
        const auto i0 = std::min(static_cast<std::size_t>(s), n - 1);
        const double w = s - static_cast<double>(i0);
        const std::size_t i1 = (i0 + 1) % n;
        r.rho[i] = (1.0 - w) * p.rho[i0] + w * p.rho[i1];
        r.J[i] = (1.0 - w) * p.J[i0] + w * p.J[i1];
    }
    return r;
}

// Binomial standard error of each agent-histogram cell, in density units.
inline std::vector<double> binomial_standard_error(const ProfileRecord& agents, std::size_t n_cells) {
    std::vector<double> se(agents.size());
    const auto N = static_cast<double>(n_cells);
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const double p = agents.rho[i] * agents.dx;
        se[i] = std::sqrt(std::max(p * (1.0 - p), 0.0) / N) / agents.dx;
    }
    return se;
}

// ---------------------------------------------------------- centers, shifts

struct MassCenter {
    double position = 0.0;
    double resultant = 0.0;  // |sum rho exp(i k x)| dx / mass
    bool degenerate = false;
};

// Circular first moment on [0, n*dx).
inline MassCenter mass_center(const std::vector<double>& rho, double dx) {
    const double L = dx * static_cast<double>(rho.size());
    const double k = 2.0 * std::numbers::pi / L;
    std::complex<double> acc{0.0, 0.0};
    double mass = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] < 0.0) throw DegenerateInput("mass_center: negative density");
        const double x = (static_cast<double>(i) + 0.5) * dx;
        acc += rho[i] * std::polar(1.0, k * x);
        mass += rho[i];
    }
    if (!(mass > 0.0)) throw DegenerateInput("mass_center: zero mass");
    MassCenter c;
    c.resultant = std::abs(acc) / mass;
    c.degenerate = c.resultant < kDegenerateResultant;
    c.position = c.degenerate ? 0.0 : wrap_periodic(std::arg(acc) / k, L);
    return c;
}

inline MassCenter mass_center(const ProfileRecord& p) { return mass_center(p.rho, p.dx); }

// Signed circular difference b - a mapped to (-L/2, L/2].
inline double circular_difference(double a, double b, double L) {
    double d = wrap_periodic(b - a, L);
    if (d > 0.5 * L) d -= L;
    return d;
}

struct PhaseShift {
    double shift = 0.0;  // rho center minus ligand center
    bool degenerate = false;
};

// Offset of the density center from the ligand center at time t. Both are
// taken at the same instant, so the value is the co-moving-frame offset.
inline PhaseShift phase_shift(const ProfileRecord& p, const Signal& signal, double t) {
    if (signal.kind() == SignalKind::UniformRamp) throw DomainError("phase_shift: needs a ligand profile");
    if (std::abs(p.length() - signal.domain_length()) > 1e-9 * signal.domain_length())
        throw DomainError("phase_shift: profile does not span the signal domain");
    std::vector<double> S(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) S[i] = signal.ligand(p.x_center(i), t);
    const auto cs = mass_center(S, p.dx);
    const auto cr = mass_center(p);
    PhaseShift out;
    out.degenerate = cs.degenerate || cr.degenerate;
    if (!out.degenerate) out.shift = circular_difference(cs.position, cr.position, p.length());
    return out;
}

// --------------------------------------------------------------- distances

struct L1Distance {
    double rho = 0.0;
    double J = 0.0;
};

// sum |a - b| dx / sum |a| dx for rho and J separately.
inline L1Distance l1_distance(const ProfileRecord& a, const ProfileRecord& b) {
    if (a.size() != b.size() || std::abs(a.dx - b.dx) > 1e-12 * a.dx)
        throw DomainError("l1_distance: profiles are on different grids");
    double dr = 0.0, nr = 0.0, dj = 0.0, nj = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dr += std::abs(a.rho[i] - b.rho[i]);
        nr += std::abs(a.rho[i]);
        dj += std::abs(a.J[i] - b.J[i]);
        nj += std::abs(a.J[i]);
    }
    L1Distance d;
    d.rho = nr > 0.0 ? dr / nr : (dr > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    d.J = nj > 0.0 ? dj / nj : dj * a.dx;
    return d;
}

// ---------------------------------------------------------- concentration

struct ConcentrationRecord {
    double t = 0.0;
    double y_mean = 0.0;
    double y_variance = 0.0;
    double second_moment = 0.0;  // int int sum_v w_v y^2 q
    double linf_marginal = 0.0;  // max q-bar
};

inline ConcentrationRecord concentration(const FullSolver& solver, const FullKineticState& s) {
    const auto& g = solver.grid();
    const auto& c = g.y.centers();
    const auto& h = g.y.widths();
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < s.nx; ++i)
        for (std::size_t k = 0; k < s.nv; ++k) {
            const double w = g.velocities.weights[k];
            for (std::size_t j = 0; j < s.ny; ++j) {
                const double mass = w * s.at(i, k, j) * h[j];
                m0 += mass;
                m1 += mass * c[j];
                m2 += mass * c[j] * c[j];
            }
        }
    const double dx = g.x.dx();
    ConcentrationRecord r;
    r.t = s.t;
    r.second_moment = m2 * dx;
    if (m0 > 0.0) {
        r.y_mean = m1 / m0;
        r.y_variance = std::max(m2 / m0 - r.y_mean * r.y_mean, 0.0);
    }
    const auto qbar = solver.marginal(s);
    r.linf_marginal = *std::max_element(qbar.begin(), qbar.end());
    return r;
}

// Mass per y-cell summed over x and v.
inline std::vector<double> y_mass_profile(const FullSolver& solver, const FullKineticState& s) {
    const auto& g = solver.grid();
    std::vector<double> out(s.ny, 0.0);
    for (std::size_t i = 0; i < s.nx; ++i)
        for (std::size_t k = 0; k < s.nv; ++k)
            for (std::size_t j = 0; j < s.ny; ++j)
                out[j] += g.velocities.weights[k] * s.at(i, k, j) * g.y.width(j) * g.x.dx();
    return out;
}

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
};

inline SampleMoments sample_moments(const std::vector<double>& xs) {
    SampleMoments m;
    if (xs.size() < 2) throw DegenerateInput("sample_moments: need at least 2 samples");
    double s = 0.0;
    for (double x : xs) s += x;
    m.mean = s / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.variance = ss / static_cast<double>(xs.size() - 1);
    return m;
}

// Tracks conservation and growth over a run of the full solver.
class BoundsMonitor {
public:
    BoundsMonitor(const FullSolver& solver, const FullKineticState& s)
        : solver_(solver), mass0_(s.total_mass_initial), t0_(s.t) {
        const auto c = concentration(solver, s);
        linf0_ = c.linf_marginal;
        second_moment_max_ = c.second_moment;
        second_moment_initial_ = c.second_moment;
    }

    void observe(const FullKineticState& s) {
        const double drift = std::abs(solver_.mass(s) - mass0_) / mass0_;
        max_drift_ = std::max(max_drift_, drift);
        steps_ = s.steps;
        const auto c = concentration(solver_, s);
        second_moment_max_ = std::max(second_moment_max_, c.second_moment);
        if (s.t > t0_ && c.linf_marginal > 0.0)
            growth_rate_ = std::max(growth_rate_, std::log(c.linf_marginal / linf0_) / (s.t - t0_));
    }

    double max_relative_drift() const { return max_drift_; }
    double drift_per_1000_steps() const {
        return max_drift_ / std::max(1.0, static_cast<double>(steps_) / 1000.0);
    }
    double second_moment_max() const { return second_moment_max_; }
    double second_moment_initial() const { return second_moment_initial_; }
    double linf_growth_rate() const { return growth_rate_; }

private:
    const FullSolver& solver_;
    double mass0_ = 0.0;
    double t0_ = 0.0;
    double linf0_ = 0.0;
    double max_drift_ = 0.0;
    std::size_t steps_ = 0;
    double second_moment_max_ = 0.0;
    double second_moment_initial_ = 0.0;
    double growth_rate_ = -std::numeric_limits<double>::infinity();
};

// Time average of agent histograms in the frame moving with the pattern,
// expressed at the reference time t_ref (usually the end of the run).
class ComovingAverage {
public:
    ComovingAverage(const AgentSimulator& sim, std::size_t nbins, double t_ref, double window)
        : sim_(sim), nbins_(nbins), t_ref_(t_ref), t_from_(t_ref - window) {
        if (nbins == 0) throw DomainError("average: nbins must be >= 1");
        if (window < 0.0) throw DomainError("average: window must be >= 0");
    }

    void observe(const AgentPopulation& pop) {
        if (pop.t < t_from_ - 1e-9 * std::max(1.0, t_ref_)) return;
        const auto b = sim_.bin(pop, nbins_, sim_.signal().pattern_speed() * (pop.t - t_ref_));
        if (acc_.size() == 0) {
            acc_ = b;
            acc_.t = t_ref_;
        } else {
            for (std::size_t i = 0; i < nbins_; ++i) {
                acc_.rho[i] += b.rho[i];
                acc_.J[i] += b.J[i];
            }
        }
        ++count_;
    }

    std::size_t samples() const { return count_; }

    ProfileRecord result() const {
        if (count_ == 0) throw DegenerateInput("average: no snapshots inside the window");
        ProfileRecord r = acc_;
        for (std::size_t i = 0; i < nbins_; ++i) {
            r.rho[i] /= static_cast<double>(count_);
            r.J[i] /= static_cast<double>(count_);
        }
        return r;
    }

private:
    const AgentSimulator& sim_;
    std::size_t nbins_;
    double t_ref_;
    double t_from_;
    ProfileRecord acc_;
    std::size_t count_ = 0;
};

// ------------------------------------------------------ convergence study

struct YGridSpec {
    double halfwidth = 1.6;
    std::size_t ny = 128;
    double stretch = 0.0;  // sinh stretching beta; 0 = uniform

    YGrid build() const { return YGrid::stretched(halfwidth, ny, stretch); }
};

struct ConvergenceSetup {
    SignalSpec signal;
    LogSensingParams sensing;
    PathwayParams pathway;
    XGrid x;
    VelocitySet velocities = VelocitySet::two_velocity(20.0);
    YGridSpec y;
    FullSolverOptions full;
    LimitSolverOptions limit;
    InitSpec init;
    double t_end = 400.0;
    double dt = 0.0;  // <= 0 selects the largest CFL-stable step
    int workers = 1;  // concurrent epsilon runs
};

struct ConvergenceRow {
    double epsilon = 0.0;
    double l1_rho = 0.0;
    double l1_J = 0.0;
    double second_moment_initial = 0.0;
    double second_moment_max = 0.0;
    double y_variance_final = 0.0;
    double mass_drift_per_1000_steps = 0.0;
    double linf_growth_rate = 0.0;
    std::size_t steps = 0;
    double wall_seconds = 0.0;
    ProfileRecord profile;
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    ProfileRecord limit_profile;
    bool strictly_decreasing = false;
    bool final_below_half = false;
    bool pass() const { return strictly_decreasing && final_below_half; }
};

inline FullSolver make_full_solver(const ConvergenceSetup& c, double epsilon) {
    PathwayParams p = c.pathway;
    p.epsilon = epsilon;
    FullGrid g{c.x, c.velocities, c.y.build()};
    return FullSolver(g, Signal(c.signal, c.sensing), Pathway(p), c.full);
}

inline LimitSolver make_limit_solver(const ConvergenceSetup& c) {
    LimitSolverOptions opt = c.limit;
    opt.kernel_mode = c.pathway.noise_enabled ? KernelMode::Noise : KernelMode::Deterministic;
    return LimitSolver(c.x, c.velocities, Signal(c.signal, c.sensing), Pathway(c.pathway), opt);
}

// Runs the full solver for each epsilon and the limit solver once to the
// same time; distances are between the density/flux profiles.
inline ConvergenceResult convergence_study(const ConvergenceSetup& setup, const std::vector<double>& eps_list) {
    if (eps_list.empty()) throw ConfigError("convergence: eps_list is empty");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw ConfigError("convergence: eps_list must be decreasing");

    const auto limit = make_limit_solver(setup);
    auto ls = limit.initialize(setup.init.x_profile, setup.init.velocity_fractions, setup.init.total_mass);
    const double dt_limit = setup.dt > 0.0 ? setup.dt : limit.max_stable_dt();
    limit.advance(ls, setup.t_end, dt_limit);

    ConvergenceResult result;
    result.limit_profile = density_flux(limit, ls);
    result.rows.resize(eps_list.size());
    const int outer = std::max(1, setup.workers);
    parallel_for(eps_list.size(), outer, [&](std::size_t b, std::size_t e) {
        for (std::size_t n = b; n < e; ++n) {
            const auto t0 = std::chrono::steady_clock::now();
            ConvergenceRow& row = result.rows[n];
            row.epsilon = eps_list[n];
            try {
                const auto solver = make_full_solver(setup, eps_list[n]);
                auto s = solver.initialize(setup.init);
                BoundsMonitor mon(solver, s);
                const double dt = setup.dt > 0.0 ? setup.dt : solver.max_stable_dt();
                solver.advance(s, setup.t_end, dt, [&](const FullKineticState& st) { mon.observe(st); });
                row.profile = density_flux(solver, s);
                const auto d = l1_distance(result.limit_profile, row.profile);
                row.l1_rho = d.rho;
                row.l1_J = d.J;
                row.second_moment_initial = mon.second_moment_initial();
                row.second_moment_max = mon.second_moment_max();
                row.y_variance_final = concentration(solver, s).y_variance;
                row.mass_drift_per_1000_steps = mon.drift_per_1000_steps();
                row.linf_growth_rate = mon.linf_growth_rate();
                row.steps = s.steps;
            } catch (const std::exception& ex) {
                throw std::runtime_error("convergence: run with epsilon = " + std::to_string(eps_list[n]) +
                                         " failed: " + ex.what());
            }
            row.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    });

    result.strictly_decreasing = true;
    for (std::size_t n = 1; n < result.rows.size(); ++n)
        if (!(result.rows[n].l1_rho < result.rows[n - 1].l1_rho)) result.strictly_decreasing = false;
    result.final_below_half = result.rows.back().l1_rho < 0.5 * result.rows.front().l1_rho;
    return result;
}

}  // namespace rtchemo
