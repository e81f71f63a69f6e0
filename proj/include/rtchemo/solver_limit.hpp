#pragma once

// Finite-volume solver for the limiting kinetic equation
//
//   d_t p + v d_x p = sum_v' [ pi_v T(D_tM(x, v')) p_v' ] - T(D_tM(x, v)) p_v
//
// where the rate of leaving a direction is evaluated with the path-wise
// derivative of that (pre-tumble) direction. Same x-grid, velocity set and
// upwind transport as FullSolver; one step is tumble(dt/2) x(dt) tumble(dt/2).

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

enum class KernelMode { Deterministic, Noise };

inline std::string_view to_string(KernelMode m) { return m == KernelMode::Deterministic ? "deterministic" : "noise"; }

inline KernelMode kernel_mode_from_string(std::string_view s) {
    if (s == "deterministic") return KernelMode::Deterministic;
    if (s == "noise") return KernelMode::Noise;
    throw DomainError("unknown kernel mode '" + std::string(s) + "' (expected deterministic or noise)");
}

struct LimitSolverOptions {
    KernelMode kernel_mode = KernelMode::Deterministic;
    int quadrature_order = kDefaultNoiseOrder;
    QuadratureRule quadrature_rule = QuadratureRule::Trapezoid;
    double cfl = 0.9;
    int threads = 1;
};

struct LimitKineticState {
    std::size_t nx = 0;
    std::size_t nv = 0;
    std::vector<double> pbar;  // layout [x][v]
    double t = 0.0;
    double total_mass_initial = 0.0;
    KernelMode kernel_mode = KernelMode::Deterministic;
    std::size_t steps = 0;

    double& at(std::size_t i, std::size_t k) { return pbar[i * nv + k]; }
    double at(std::size_t i, std::size_t k) const { return pbar[i * nv + k]; }
};

namespace detail {

// exp(A) for a small dense matrix by scaling and squaring of a Taylor series.
inline std::vector<double> small_expm(std::vector<double> A, std::size_t n) {
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < n; ++c) row += std::abs(A[r * n + c]);
        norm = std::max(norm, row);
    }
    int squarings = 0;
    while (norm > 0.5) {
        norm *= 0.5;
        ++squarings;
    }
    const double scale = std::ldexp(1.0, -squarings);
    for (double& a : A) a *= scale;
    auto mul = [n](const std::vector<double>& X, const std::vector<double>& Y) {
        std::vector<double> Z(n * n, 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t m = 0; m < n; ++m)
                for (std::size_t c = 0; c < n; ++c) Z[r * n + c] += X[r * n + m] * Y[m * n + c];
        return Z;
    };
    std::vector<double> result(n * n, 0.0), term(n * n, 0.0);
    for (std::size_t r = 0; r < n; ++r) result[r * n + r] = term[r * n + r] = 1.0;
    for (int k = 1; k <= 18; ++k) {
        term = mul(term, A);
        for (double& t : term) t /= k;
        for (std::size_t e = 0; e < n * n; ++e) result[e] += term[e];
    }
    for (int s = 0; s < squarings; ++s) result = mul(result, result);
    return result;
}

}  // namespace detail

class LimitSolver {
public:
    LimitSolver(XGrid x, VelocitySet velocities, Signal signal, Pathway pathway, LimitSolverOptions options = {})
        : x_(x),
          vs_(std::move(velocities)),
          signal_(std::move(signal)),
          pathway_(std::move(pathway)),
          opt_(options),
          noise_(pathway_, options.quadrature_order, options.quadrature_rule) {
        vs_.validate();
        if (x_.nx < 1) throw DomainError("limit solver: nx must be >= 1");
        if (std::abs(x_.length - signal_.domain_length()) > 1e-9 * signal_.domain_length())
            throw DomainError("limit solver: nx*dx must equal the signal domain length");
        if (!(opt_.cfl > 0.0 && opt_.cfl <= 1.0)) throw DomainError("limit solver: cfl must be in (0, 1]");
        prob_.resize(vs_.size());
        for (std::size_t k = 0; k < vs_.size(); ++k) prob_[k] = vs_.probability(k);
    }

    const XGrid& x_grid() const { return x_; }
    const VelocitySet& velocities() const { return vs_; }
    const Signal& signal() const { return signal_; }
    const Pathway& pathway() const { return pathway_; }
    const LimitSolverOptions& options() const { return opt_; }

    double max_stable_dt() const { return opt_.cfl * x_.dx() / vs_.max_speed(); }

    double kernel(double u) const {
        return opt_.kernel_mode == KernelMode::Deterministic ? pathway_.limit_kernel_deterministic(u) : noise_(u);
    }

    // x_profile per cell (empty = uniform), velocity_fractions as mass
    // fractions (empty = tumbling equilibrium); normalized to total_mass.
    LimitKineticState initialize(std::vector<double> x_profile = {}, std::vector<double> velocity_fractions = {},
                                 double total_mass = 1.0) const {
        const std::size_t nx = x_.nx, nv = vs_.size();
        if (x_profile.empty()) x_profile.assign(nx, 1.0);
        if (velocity_fractions.empty()) velocity_fractions = prob_;
        if (x_profile.size() != nx || velocity_fractions.size() != nv)
            throw DegenerateInput("limit init: profile sizes do not match the grid");
        double xs = 0.0, fs = 0.0;
        for (double v : x_profile) {
            if (v < 0.0) throw DegenerateInput("limit init: negative entry in x_profile");
            xs += v;
        }
        for (double f : velocity_fractions) {
            if (f < 0.0) throw DegenerateInput("limit init: negative velocity fraction");
            fs += f;
        }
        if (!(xs > 0.0 && fs > 0.0 && total_mass > 0.0)) throw DegenerateInput("limit init: zero mass");
        LimitKineticState s;
        s.nx = nx;
        s.nv = nv;
        s.kernel_mode = opt_.kernel_mode;
        s.pbar.resize(nx * nv);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t k = 0; k < nv; ++k)
                s.at(i, k) = total_mass * (x_profile[i] / (xs * x_.dx())) * (velocity_fractions[k] / fs) / vs_.weights[k];
        s.total_mass_initial = mass(s);
        return s;
    }

    // T(D_tM(x_i, v_k, t)), layout [x][v].
    std::vector<double> kernel_field(double t) const {
        const std::size_t nx = x_.nx, nv = vs_.size();
        std::vector<double> T(nx * nv);
        parallel_for(nx, opt_.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                for (std::size_t k = 0; k < nv; ++k)
                    T[i * nv + k] = kernel(signal_.pathwise_derivative(x_.center(i), vs_.speeds[k], t));
        });
        return T;
    }

    std::vector<double> kernel_field(const LimitKineticState& s) const { return kernel_field(s.t); }

    void step(LimitKineticState& s, double dt) const {
        if (!(dt > 0.0)) throw StabilityError("limit solver: dt must be > 0");
        const double nu = dt * vs_.max_speed() / x_.dx();
        if (nu > opt_.cfl * (1.0 + 1e-12))
            throw StabilityError("limit solver: x-transport stage violates CFL (" + std::to_string(nu) + " > " +
                                 std::to_string(opt_.cfl) + ")");
        tumble(s, 0.5 * dt, kernel_field(s.t + 0.25 * dt));
        x_stage(s, dt);
        tumble(s, 0.5 * dt, kernel_field(s.t + 0.75 * dt));
        s.t += dt;
        ++s.steps;
    }

    template <class Observer>
    void advance(LimitKineticState& s, double t_end, double dt, Observer&& observe) const {
        while (s.t < t_end - 1e-12 * std::max(1.0, t_end)) {
            step(s, std::min(dt, t_end - s.t));
            observe(s);
        }
    }

    void advance(LimitKineticState& s, double t_end, double dt) const {
        advance(s, t_end, dt, [](const LimitKineticState&) {});
    }

    double mass(const LimitKineticState& s) const {
        double total = 0.0;
        for (std::size_t i = 0; i < s.nx; ++i)
            for (std::size_t k = 0; k < s.nv; ++k) total += vs_.weights[k] * s.at(i, k);
        return total * x_.dx();
    }

    // Exact exchange over tau with per-cell rates T (layout [x][v]).
    void tumble(LimitKineticState& s, double tau, const std::vector<double>& T) const {
        const std::size_t nv = s.nv;
        parallel_for(s.nx, opt_.threads, [&](std::size_t b, std::size_t e) {
            std::vector<double> gen(nv * nv), mass_v(nv);
            for (std::size_t i = b; i < e; ++i) {
                const double* rate = &T[i * nv];
                if (nv == 2) {
                    // Mass variables; k_plus = rate out of 0 into 1.
                    const double m0 = vs_.weights[0] * s.at(i, 0);
                    const double m1 = vs_.weights[1] * s.at(i, 1);
                    const double k01 = rate[0] * prob_[1];
                    const double k10 = rate[1] * prob_[0];
                    const double ksum = k01 + k10;
                    if (ksum <= 0.0) continue;
                    const double total = m0 + m1;
                    const double eq0 = total * k10 / ksum;
                    const double n0 = eq0 + (m0 - eq0) * std::exp(-ksum * tau);
                    s.at(i, 0) = n0 / vs_.weights[0];
                    s.at(i, 1) = (total - n0) / vs_.weights[1];
                } else {
                    // dm_v/dt = pi_v sum_v' T_v' m_v' - T_v m_v
                    for (std::size_t r = 0; r < nv; ++r)
                        for (std::size_t c = 0; c < nv; ++c)
                            gen[r * nv + c] = tau * (prob_[r] * rate[c] - (r == c ? rate[c] : 0.0));
                    const auto E = detail::small_expm(gen, nv);
                    for (std::size_t k = 0; k < nv; ++k) mass_v[k] = vs_.weights[k] * s.at(i, k);
                    for (std::size_t r = 0; r < nv; ++r) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < nv; ++c) acc += E[r * nv + c] * mass_v[c];
                        s.at(i, r) = std::max(acc, 0.0) / vs_.weights[r];
                    }
                }
            }
        });
    }

private:
    void x_stage(LimitKineticState& s, double dt) const {
        const std::size_t nx = s.nx, nv = s.nv;
        std::vector<double> out(s.pbar.size());
        for (std::size_t k = 0; k < nv; ++k) {
            const double v = vs_.speeds[k];
            const double nu = std::abs(v) * dt / x_.dx();
            for (std::size_t i = 0; i < nx; ++i) {
                const std::size_t up = v >= 0.0 ? (i + nx - 1) % nx : (i + 1) % nx;
                out[i * nv + k] = s.at(i, k) - nu * (s.at(i, k) - s.at(up, k));
            }
        }
        s.pbar.swap(out);
    }

    XGrid x_;
    VelocitySet vs_;
    Signal signal_;
    Pathway pathway_;
    LimitSolverOptions opt_;
    NoiseKernel noise_;
    std::vector<double> prob_;
};

}  // namespace rtchemo
