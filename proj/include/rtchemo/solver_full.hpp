#pragma once

// Finite-volume solver for the kinetic model with internal state, written in
// the blow-up variable y = (m - M)/eps for the density q = eps p:
//
//   d_t q + v d_x q - (1/eps) d_y[(D_tM + y G(eps y)) q]
//       = (1/eps) d_yy q  [noise only]  +  Lambda(y) (sum_v' pi_v' q_v' - q_v)
//
// on a periodic x-domain, a discrete velocity set and a truncated y-domain
// with no-flux ends. One step is the symmetric splitting
//   A(dt/2) x(dt) A(dt/2),   A(h) = y(h/2) tumble(h) y(h/2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rtchemo/errors.hpp"
#include "rtchemo/grid.hpp"
#include "rtchemo/parallel.hpp"
#include "rtchemo/pathway.hpp"
#include "rtchemo/signal.hpp"

namespace rtchemo {

enum class YScheme { Implicit, Explicit };

inline std::string_view to_string(YScheme s) { return s == YScheme::Implicit ? "implicit" : "explicit"; }

inline YScheme y_scheme_from_string(std::string_view s) {
    if (s == "implicit") return YScheme::Implicit;
    if (s == "explicit") return YScheme::Explicit;
    throw DomainError("unknown y-scheme '" + std::string(s) + "' (expected implicit or explicit)");
}

inline constexpr double kFlushBelow = 1e-250;

struct FullSolverOptions {
    YScheme y_scheme = YScheme::Implicit;
    double cfl = 0.9;
    double boundary_mass_tol = 1e-6;
    std::size_t boundary_cells = 3;
    std::size_t tumble_substeps = 2;
    int threads = 1;
};

struct InitSpec {
    enum class YProfile { Gaussian, Dirac, Tabulated };
    YProfile y_profile = YProfile::Gaussian;
    double y_mean = 0.0;
    double y_variance = 0.0;                 // <= 0 selects 1/G(0)
    std::vector<double> y_table;             // per y-cell density, Tabulated only
    std::vector<double> x_profile;           // per x-cell, empty = uniform
    std::vector<double> velocity_fractions;  // mass fraction per velocity, empty = tumbling equilibrium
    double total_mass = 1.0;
};

struct FullKineticState {
    std::size_t nx = 0;
    std::size_t nv = 0;
    std::size_t ny = 0;
    std::vector<double> q;  // layout [x][v][y]
    double t = 0.0;
    double epsilon = 0.0;
    double total_mass_initial = 0.0;
    std::size_t steps = 0;

    std::size_t index(std::size_t i, std::size_t k, std::size_t j) const { return (i * nv + k) * ny + j; }
    double& at(std::size_t i, std::size_t k, std::size_t j) { return q[index(i, k, j)]; }
    double at(std::size_t i, std::size_t k, std::size_t j) const { return q[index(i, k, j)]; }
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Cell densities (mass / width) of a y-profile, normalized to unit mass.
inline std::vector<double> y_profile_density(const InitSpec& ini, const YGrid& y, double G0) {
    const std::size_t ny = y.size();
    std::vector<double> mass(ny, 0.0);
    switch (ini.y_profile) {
        case InitSpec::YProfile::Gaussian: {
            const double var = ini.y_variance > 0.0 ? ini.y_variance : 1.0 / G0;
            const double sd = std::sqrt(var);
            for (std::size_t j = 0; j < ny; ++j)
                mass[j] = normal_cdf((y.face(j + 1) - ini.y_mean) / sd) - normal_cdf((y.face(j) - ini.y_mean) / sd);
            break;
        }
        case InitSpec::YProfile::Dirac: {
            const std::size_t j = y.find_cell(ini.y_mean);
            if (j >= ny) throw DegenerateInput("init: Dirac location outside the y-domain");
            mass[j] = 1.0;
            break;
        }
        case InitSpec::YProfile::Tabulated:
            if (ini.y_table.size() != ny) throw DegenerateInput("init: y_table size must equal ny");
            for (std::size_t j = 0; j < ny; ++j) {
                if (ini.y_table[j] < 0.0) throw DegenerateInput("init: negative entry in y_table");
                mass[j] = ini.y_table[j] * y.width(j);
            }
            break;
    }
    double total = 0.0;
    for (double m : mass) total += m;
    if (!(total > 0.0)) throw DegenerateInput("init: y-profile has zero mass");
    std::vector<double> dens(ny);
    for (std::size_t j = 0; j < ny; ++j) dens[j] = mass[j] / total / y.width(j);
    return dens;
}

// z / (e^z - 1), continuous at 0.
inline double bernoulli(double z) {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return z / std::expm1(z);
}

// Thomas algorithm; the systems built here are M-matrices, so no pivoting.
// lower[0] and upper[n-1] are ignored. rhs is overwritten with the solution.
inline void solve_tridiagonal(const std::vector<double>& lower, std::vector<double>& diag,
                              const std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t j = 1; j < n; ++j) {
        const double w = lower[j] / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) rhs[j] = (rhs[j] - upper[j] * rhs[j + 1]) / diag[j];
}

}  // namespace detail

class FullSolver {
public:
    FullSolver(FullGrid grid, Signal signal, Pathway pathway, FullSolverOptions options = {})
        : grid_(std::move(grid)), signal_(std::move(signal)), pathway_(std::move(pathway)), opt_(options) {
        grid_.validate(signal_, pathway_);
        if (!(opt_.cfl > 0.0 && opt_.cfl <= 1.0)) throw DomainError("full solver: cfl must be in (0, 1]");
        if (opt_.tumble_substeps < 1) throw DomainError("full solver: tumble_substeps must be >= 1");
        const auto& yg = grid_.y;
        const std::size_t ny = yg.size();
        const double eps = pathway_.epsilon();
        lambda_c_.resize(ny);
        for (std::size_t j = 0; j < ny; ++j) lambda_c_[j] = pathway_.Lambda(yg.center(j));
        face_drift_.assign(ny + 1, 0.0);
        face_diff_.assign(ny + 1, 0.0);
        for (std::size_t f = 1; f < ny; ++f) {
            const double yf = yg.face(f);
            face_drift_[f] = yf * pathway_.G(eps * yf);
            if (pathway_.noise_enabled()) face_diff_[f] = 1.0 / (eps * (yg.center(f) - yg.center(f - 1)));
        }
        const auto& vs = grid_.velocities;
        prob_.resize(vs.size());
        for (std::size_t k = 0; k < vs.size(); ++k) prob_[k] = vs.probability(k);
    }

    const FullGrid& grid() const { return grid_; }
    const Signal& signal() const { return signal_; }
    const Pathway& pathway() const { return pathway_; }
    const FullSolverOptions& options() const { return opt_; }

    double max_stable_dt() const { return opt_.cfl * grid_.x.dx() / grid_.velocities.max_speed(); }

    FullKineticState initialize(const InitSpec& ini = {}) const {
        const std::size_t nx = grid_.x.nx, nv = grid_.velocities.size(), ny = grid_.y.size();
        if (!(ini.total_mass > 0.0)) throw DegenerateInput("init: total mass must be > 0");
        const auto ydens = detail::y_profile_density(ini, grid_.y, pathway_.G0());

        std::vector<double> xprof = ini.x_profile.empty() ? std::vector<double>(nx, 1.0) : ini.x_profile;
        if (xprof.size() != nx) throw DegenerateInput("init: x_profile size must equal nx");
        double xsum = 0.0;
        for (double v : xprof) {
            if (v < 0.0) throw DegenerateInput("init: negative entry in x_profile");
            xsum += v;
        }
        if (!(xsum > 0.0)) throw DegenerateInput("init: x_profile has zero mass");

        std::vector<double> frac = ini.velocity_fractions;
        if (frac.empty())
            for (std::size_t k = 0; k < nv; ++k) frac.push_back(prob_[k]);
        if (frac.size() != nv) throw DegenerateInput("init: velocity_fractions size must equal the velocity count");
        double fsum = 0.0;
        for (double f : frac) {
            if (f < 0.0) throw DegenerateInput("init: negative velocity fraction");
            fsum += f;
        }
        if (!(fsum > 0.0)) throw DegenerateInput("init: velocity fractions have zero mass");

        FullKineticState s;
        s.nx = nx;
        s.nv = nv;
        s.ny = ny;
        s.epsilon = pathway_.epsilon();
        s.q.assign(nx * nv * ny, 0.0);
        const double dx = grid_.x.dx();
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t k = 0; k < nv; ++k) {
                const double c = ini.total_mass * (xprof[i] / (xsum * dx)) * (frac[k] / fsum) /
                                 grid_.velocities.weights[k];
                for (std::size_t j = 0; j < ny; ++j) s.at(i, k, j) = c * ydens[j];
            }
        s.total_mass_initial = mass(s);
        return s;
    }

    void step(FullKineticState& s, double dt) const {
        if (!(dt > 0.0)) throw StabilityError("full solver: dt must be > 0");
        const double nu = dt * grid_.velocities.max_speed() / grid_.x.dx();
        if (nu > opt_.cfl * (1.0 + 1e-12))
            throw StabilityError("full solver: x-transport stage violates CFL (" + std::to_string(nu) + " > " +
                                 std::to_string(opt_.cfl) + ")");
        const auto d1 = pathwise_field(s.t + 0.25 * dt);
        const auto d2 = pathwise_field(s.t + 0.75 * dt);
        // Each tumbling half-step sits between two y-relaxations, so mass
        // that changed direction is moved toward its new offset before it
        // is asked to tumble again.
        relax_tumble(s, 0.5 * dt, d1);
        x_stage(s, dt);
        relax_tumble(s, 0.5 * dt, d2);
        s.t += dt;
        ++s.steps;
        check_boundary(s);
    }

    // Integer number of steps of size <= dt landing exactly on t_end.
    template <class Observer>
    void advance(FullKineticState& s, double t_end, double dt, Observer&& observe) const {
        while (s.t < t_end - 1e-12 * std::max(1.0, t_end)) {
            const double h = std::min(dt, t_end - s.t);
            step(s, h);
            observe(s);
        }
    }

    void advance(FullKineticState& s, double t_end, double dt) const {
        advance(s, t_end, dt, [](const FullKineticState&) {});
    }

    // q-bar(x, v) = sum_y q dy, layout [x][v].
    std::vector<double> marginal(const FullKineticState& s) const {
        std::vector<double> out(s.nx * s.nv, 0.0);
        const auto& w = grid_.y.widths();
        for (std::size_t i = 0; i < s.nx; ++i)
            for (std::size_t k = 0; k < s.nv; ++k) {
                double acc = 0.0;
                const double* row = &s.q[s.index(i, k, 0)];
                for (std::size_t j = 0; j < s.ny; ++j) acc += row[j] * w[j];
                out[i * s.nv + k] = acc;
            }
        return out;
    }

    double mass(const FullKineticState& s) const {
        const auto qbar = marginal(s);
        double total = 0.0;
        for (std::size_t i = 0; i < s.nx; ++i)
            for (std::size_t k = 0; k < s.nv; ++k) total += grid_.velocities.weights[k] * qbar[i * s.nv + k];
        return total * grid_.x.dx();
    }

    // p_eps(x, v, m) = q(x, v, (m - M)/eps) / eps, linear in y between cell
    // centers and zero outside them.
    double reconstruct_p(const FullKineticState& s, double x, std::size_t k, double m) const {
        if (m < 0.0) throw DomainError("reconstruct_p: m must be >= 0");
        const double L = grid_.x.length;
        const double xw = wrap_periodic(x, L);
        const auto i = std::min(static_cast<std::size_t>(xw / grid_.x.dx()), s.nx - 1);
        const double eps = s.epsilon;
        const double y = (m - signal_.methylation(xw, s.t)) / eps;
        const auto& c = grid_.y.centers();
        if (y < c.front() || y > c.back()) return 0.0;
        auto it = std::upper_bound(c.begin(), c.end(), y);
        std::size_t j1 = static_cast<std::size_t>(std::distance(c.begin(), it));
        if (j1 >= c.size()) j1 = c.size() - 1;
        const std::size_t j0 = j1 - 1;
        const double w = (y - c[j0]) / (c[j1] - c[j0]);
        return ((1.0 - w) * s.at(i, k, j0) + w * s.at(i, k, j1)) / eps;
    }

    // D_tM at x-cell centers, layout [x][v].
    std::vector<double> pathwise_field(double t) const {
        const std::size_t nx = grid_.x.nx, nv = grid_.velocities.size();
        std::vector<double> d(nx * nv);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t k = 0; k < nv; ++k)
                d[i * nv + k] = signal_.pathwise_derivative(grid_.x.center(i), grid_.velocities.speeds[k], t);
        return d;
    }

    // Fraction of the mass lying in the outermost boundary_cells on each side.
    double boundary_mass_fraction(const FullKineticState& s) const {
        const auto& w = grid_.y.widths();
        const std::size_t nb = std::min(opt_.boundary_cells, s.ny / 2);
        double edge = 0.0;
        for (std::size_t i = 0; i < s.nx; ++i)
            for (std::size_t k = 0; k < s.nv; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < nb; ++j)
                    acc += s.at(i, k, j) * w[j] + s.at(i, k, s.ny - 1 - j) * w[s.ny - 1 - j];
                edge += grid_.velocities.weights[k] * acc;
            }
        return edge * grid_.x.dx() / s.total_mass_initial;
    }

private:
    void check_boundary(const FullKineticState& s) const {
        const double frac = boundary_mass_fraction(s);
        if (frac > opt_.boundary_mass_tol)
            throw TruncationError("full solver: mass fraction " + std::to_string(frac) +
                                  " within " + std::to_string(opt_.boundary_cells) +
                                  " cells of the y-boundary at t = " + std::to_string(s.t) +
                                  "; widen y_halfwidth");
    }

    // [y(h/2n) tumble(h/n) y(h/2n)]^n with n = opt_.tumble_substeps.
    void relax_tumble(FullKineticState& s, double h, const std::vector<double>& dfield) const {
        const double sub = h / static_cast<double>(opt_.tumble_substeps);
        for (std::size_t n = 0; n < opt_.tumble_substeps; ++n) {
            y_stage(s, 0.5 * sub, dfield);
            tumble(s, sub);
            y_stage(s, 0.5 * sub, dfield);
        }
    }

    void tumble(FullKineticState& s, double tau) const {
        const std::size_t ny = s.ny, nv = s.nv;
        std::vector<double> decay(ny);
        for (std::size_t j = 0; j < ny; ++j) decay[j] = std::exp(-lambda_c_[j] * tau);
        parallel_for(s.nx, opt_.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                double* base = &s.q[s.index(i, 0, 0)];
                if (nv == 2) {
                    const double p0 = prob_[0], p1 = prob_[1];
                    double* q0 = base;
                    double* q1 = base + ny;
                    for (std::size_t j = 0; j < ny; ++j) {
                        const double avg = p0 * q0[j] + p1 * q1[j];
                        q0[j] = avg + (q0[j] - avg) * decay[j];
                        q1[j] = avg + (q1[j] - avg) * decay[j];
                    }
                } else {
                    for (std::size_t j = 0; j < ny; ++j) {
                        double avg = 0.0;
                        for (std::size_t k = 0; k < nv; ++k) avg += prob_[k] * base[k * ny + j];
                        for (std::size_t k = 0; k < nv; ++k)
                            base[k * ny + j] = avg + (base[k * ny + j] - avg) * decay[j];
                    }
                }
            }
        });
    }

    void x_stage(FullKineticState& s, double dt) const {
        const std::size_t nx = s.nx, nv = s.nv, ny = s.ny;
        const double dx = grid_.x.dx();
        std::vector<double> out(s.q.size());
        parallel_for(nx, opt_.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                for (std::size_t k = 0; k < nv; ++k) {
                    const double v = grid_.velocities.speeds[k];
                    const double nu = std::abs(v) * dt / dx;
                    const std::size_t up = v >= 0.0 ? (i + nx - 1) % nx : (i + 1) % nx;
                    const double* cur = &s.q[s.index(i, k, 0)];
                    const double* upw = &s.q[s.index(up, k, 0)];
                    double* dst = &out[s.index(i, k, 0)];
                    for (std::size_t j = 0; j < ny; ++j) dst[j] = cur[j] - nu * (cur[j] - upw[j]);
                }
        });
        s.q.swap(out);
    }

    void y_stage(FullKineticState& s, double dt, const std::vector<double>& dfield) const {
        const std::size_t nv = s.nv, ny = s.ny;
        const double eps = s.epsilon;
        parallel_for(s.nx, opt_.threads, [&](std::size_t b, std::size_t e) {
            std::vector<double> vel(ny + 1), lower(ny), diag(ny), upper(ny), rhs(ny), flux(ny + 1);
            for (std::size_t i = b; i < e; ++i)
                for (std::size_t k = 0; k < nv; ++k) {
                    const double D = dfield[i * nv + k];
                    vel[0] = vel[ny] = 0.0;
                    for (std::size_t f = 1; f < ny; ++f) vel[f] = -(D + face_drift_[f]) / eps;
                    double* q = &s.q[s.index(i, k, 0)];
                    if (opt_.y_scheme == YScheme::Implicit) {
                        implicit_solve(q, dt, vel, face_diff_, lower, diag, upper, rhs);
                    } else {
                        explicit_drift(q, dt, vel, flux);
                        if (pathway_.noise_enabled()) {
                            std::fill(vel.begin(), vel.end(), 0.0);
                            implicit_solve(q, dt, vel, face_diff_, lower, diag, upper, rhs);
                        }
                    }
                }
        });
    }

    // Backward Euler for  h_j dq_j/dt = F_j - F_{j+1}  with the
    // exponentially fitted face flux
    //   F_f = d_f [B(-P) q_{f-1} - B(P) q_f],  P = vel_f / d_f,
    // d_f = 1/(eps dist) and B(z) = z/(e^z - 1). It is plain upwind when
    // d_f = 0 and reproduces the exact stationary profile of a constant
    // drift-diffusion flux between neighbouring centers.
    void implicit_solve(double* q, double dt, const std::vector<double>& vel, const std::vector<double>& diff,
                        std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                        std::vector<double>& rhs) const {
        const std::size_t ny = grid_.y.size();
        const auto& h = grid_.y.widths();
        // in_f: coefficient of q_{f-1}; out_f: coefficient of q_f.
        auto in = [](double a, double d) { return d > 0.0 ? d * detail::bernoulli(-a / d) : std::max(a, 0.0); };
        auto out = [](double a, double d) { return d > 0.0 ? d * detail::bernoulli(a / d) : std::max(-a, 0.0); };
        for (std::size_t j = 0; j < ny; ++j) {
            const double aL = vel[j], aR = vel[j + 1];
            const double dL = diff[j], dR = diff[j + 1];
            lower[j] = -dt * in(aL, dL);
            upper[j] = -dt * out(aR, dR);
            diag[j] = h[j] + dt * out(aL, dL) + dt * in(aR, dR);
            rhs[j] = h[j] * q[j];
        }
        detail::solve_tridiagonal(lower, diag, upper, rhs);
        // Subnormal tails cost far more than they carry.
        for (std::size_t j = 0; j < ny; ++j) q[j] = rhs[j] < kFlushBelow ? 0.0 : rhs[j];
    }

    // Forward Euler upwind, sub-cycled so every cell loses at most half its
    // content per sub-step.
    void explicit_drift(double* q, double dt, const std::vector<double>& vel, std::vector<double>& flux) const {
        const std::size_t ny = grid_.y.size();
        const auto& h = grid_.y.widths();
        double rate = 0.0;
        for (std::size_t j = 0; j < ny; ++j)
            rate = std::max(rate, (std::max(vel[j + 1], 0.0) + std::max(-vel[j], 0.0)) / h[j]);
        if (rate <= 0.0) return;
        const auto nsub = static_cast<std::size_t>(std::ceil(dt * rate / 0.5));
        const double tau = dt / static_cast<double>(nsub);
        flux[0] = flux[ny] = 0.0;
        for (std::size_t n = 0; n < nsub; ++n) {
            for (std::size_t f = 1; f < ny; ++f)
                flux[f] = std::max(vel[f], 0.0) * q[f - 1] + std::min(vel[f], 0.0) * q[f];
            for (std::size_t j = 0; j < ny; ++j) q[j] -= tau * (flux[j + 1] - flux[j]) / h[j];
        }
    }

    FullGrid grid_;
    Signal signal_;
    Pathway pathway_;
    FullSolverOptions opt_;
    std::vector<double> lambda_c_;
    std::vector<double> face_drift_;  // y_f G(eps y_f) at interior faces
    std::vector<double> face_diff_;   // 1/(eps dist) at interior faces when noisy
    std::vector<double> prob_;
};

}  // namespace rtchemo
