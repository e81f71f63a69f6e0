#pragma once

// Individual cells on the periodic domain. Each carries (x, v, m) and a
// remaining tumble hazard budget drawn from Exp(1): a tumble happens when
// the integral of Lambda((m - M)/eps) along the path uses up the budget.
//
// Between tumbles the methylation offset r = m - M obeys
//   dr = -(G(r)/eps) r dt - D_tM dt + sqrt(2 eps) dW      (noise term optional)
// which is integrated exactly over each sub-step with G and D_tM frozen.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rtchemo/errors.hpp"
#include "rtchemo/grid.hpp"
#include "rtchemo/parallel.hpp"
#include "rtchemo/pathway.hpp"
#include "rtchemo/profile.hpp"
#include "rtchemo/rng.hpp"
#include "rtchemo/signal.hpp"

namespace rtchemo {

inline constexpr double kMaxHazardPerSubstep = 0.2;

struct Agent {
    double x = 0.0;
    std::size_t k = 0;  // index into the velocity set
    double m = 0.0;
    double hazard = 0.0;  // remaining integrated rate before the next tumble
    CounterRng rng;
};

struct AgentPopulation {
    std::vector<Agent> agents;
    std::uint64_t rng_seed = 0;
    double t = 0.0;
    PathwayParams params;
    std::size_t tumbles = 0;

    std::size_t count() const { return agents.size(); }
};

struct AgentOptions {
    double max_hazard = kMaxHazardPerSubstep;  // Lambda * h per sub-step
    double max_substep = 0.05;                 // s
    int threads = 1;
};

struct AgentInit {
    std::size_t n_cells = 20000;
    std::uint64_t seed = 1;
    double y_variance = 0.0;  // initial spread of (m - M)/eps; 0 starts every cell at m = M
    std::vector<double> velocity_fractions;  // empty = tumbling equilibrium
};

class AgentSimulator {
public:
    AgentSimulator(Signal signal, Pathway pathway, VelocitySet velocities, AgentOptions options = {})
        : signal_(std::move(signal)), pathway_(std::move(pathway)), vs_(std::move(velocities)), opt_(options) {
        vs_.validate();
        if (!(opt_.max_hazard > 0.0 && opt_.max_hazard <= kMaxHazardPerSubstep))
            throw StabilityError("agents: hazard per sub-step must be in (0, 0.2]");
        if (!(opt_.max_substep > 0.0)) throw DomainError("agents: max_substep must be > 0");
        cumulative_.resize(vs_.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < vs_.size(); ++k) cumulative_[k] = (acc += vs_.probability(k));
        cumulative_.back() = 1.0;
    }

    const Signal& signal() const { return signal_; }
    const Pathway& pathway() const { return pathway_; }
    const VelocitySet& velocities() const { return vs_; }
    const AgentOptions& options() const { return opt_; }

    // Uniform positions, velocities from the tumbling law (or the given
    // fractions), m = M + eps y with y Gaussian.
    AgentPopulation initialize(const AgentInit& init) const {
        if (init.n_cells == 0) throw DegenerateInput("agents: n_cells must be >= 1");
        if (init.y_variance < 0.0) throw DegenerateInput("agents: y_variance must be >= 0");
        std::vector<double> cum = cumulative_;
        if (!init.velocity_fractions.empty()) {
            if (init.velocity_fractions.size() != vs_.size())
                throw DegenerateInput("agents: velocity_fractions size must equal the velocity count");
            double total = 0.0;
            for (double f : init.velocity_fractions) {
                if (f < 0.0) throw DegenerateInput("agents: negative velocity fraction");
                total += f;
            }
            if (!(total > 0.0)) throw DegenerateInput("agents: velocity fractions sum to zero");
            double acc = 0.0;
            for (std::size_t k = 0; k < vs_.size(); ++k) cum[k] = (acc += init.velocity_fractions[k] / total);
            cum.back() = 1.0;
        }
        AgentPopulation pop;
        pop.rng_seed = init.seed;
        pop.params = pathway_.params();
        pop.agents.resize(init.n_cells);
        const double L = signal_.domain_length();
        const double eps = pathway_.epsilon();
        const double sd = std::sqrt(init.y_variance);
        for (std::size_t n = 0; n < init.n_cells; ++n) {
            Agent& a = pop.agents[n];
            a.rng = CounterRng(init.seed, n);
            a.x = L * a.rng.uniform();
            a.k = pick(cum, a.rng.uniform());
            const double y = sd * a.rng.normal();
            a.m = std::max(0.0, signal_.methylation(a.x, 0.0) + eps * y);
            a.hazard = a.rng.exponential();
        }
        return pop;
    }

    void step(AgentPopulation& pop, double dt) const {
        if (!(dt > 0.0)) throw StabilityError("agents: dt must be > 0");
        std::vector<std::size_t> tumbles(pop.count(), 0);
        parallel_for(pop.count(), opt_.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t n = b; n < e; ++n) tumbles[n] = advance_agent(pop.agents[n], pop.t, dt);
        });
        for (std::size_t c : tumbles) pop.tumbles += c;
        pop.t += dt;
    }

    template <class Observer>
    void advance(AgentPopulation& pop, double t_end, double dt, Observer&& observe) const {
        while (pop.t < t_end - 1e-12 * std::max(1.0, t_end)) {
            step(pop, std::min(dt, t_end - pop.t));
            observe(pop);
        }
    }

    void advance(AgentPopulation& pop, double t_end, double dt) const {
        advance(pop, t_end, dt, [](const AgentPopulation&) {});
    }

    // Histogram of positions (shifted by -offset, wrapped) on nbins cells,
    // normalized so that sum(rho) dx = 1.
    ProfileRecord bin(const AgentPopulation& pop, std::size_t nbins, double offset = 0.0) const {
        if (nbins == 0) throw DomainError("agents: nbins must be >= 1");
        ProfileRecord r;
        r.t = pop.t;
        r.source = ProfileSource::Agents;
        const double L = signal_.domain_length();
        r.dx = L / static_cast<double>(nbins);
        r.rho.assign(nbins, 0.0);
        r.J.assign(nbins, 0.0);
        if (pop.count() == 0) return r;
        const double norm = 1.0 / (static_cast<double>(pop.count()) * r.dx);
        for (const Agent& a : pop.agents) {
            const double xs = wrap_periodic(a.x - offset, L);
            const auto i = std::min(static_cast<std::size_t>(xs / r.dx), nbins - 1);
            r.rho[i] += norm;
            r.J[i] += norm * vs_.speeds[a.k];
        }
        r.mass = 1.0;
        return r;
    }

    // Blow-up offsets (m - M(x, t)) / eps of every agent.
    std::vector<double> y_values(const AgentPopulation& pop) const {
        std::vector<double> y(pop.count());
        const double eps = pathway_.epsilon();
        for (std::size_t n = 0; n < pop.count(); ++n) {
            const Agent& a = pop.agents[n];
            y[n] = (a.m - signal_.methylation(a.x, pop.t)) / eps;
        }
        return y;
    }

private:
    static std::size_t pick(const std::vector<double>& cum, double u) {
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        return std::min(static_cast<std::size_t>(std::distance(cum.begin(), it)), cum.size() - 1);
    }

    // One sub-step of length h (chosen before any noise is drawn):
    //   r(h) = r0 e^{-ah} - sum_seg D_seg (e^{-a(h - s_{k+1})} - e^{-a(h - s_k)}) / a + N,
    // with N the exact Ornstein-Uhlenbeck noise increment. Tumbles inside the
    // sub-step split it into segments with their own velocity and D_tM; the
    // noise path is kept, only the deterministic forcing changes.
    std::size_t advance_agent(Agent& a, double t0, double dt) const {
        const double eps = pathway_.epsilon();
        const bool noisy = pathway_.noise_enabled();
        const double L = signal_.domain_length();
        const double relax_cap = 0.5 * eps / pathway_.G0();
        std::size_t tumbles = 0;
        double t = t0;
        double rem = dt;
        while (rem > 1e-14 * dt) {
            const double r0 = a.m - signal_.methylation(a.x, t);
            const double lam0 = pathway_.Lambda(r0 / eps);
            double h = std::min({rem, opt_.max_substep, opt_.max_hazard / lam0});
            if (noisy) h = std::min(h, relax_cap);
            const double v0 = vs_.speeds[a.k];
            const double D0 = signal_.pathwise_derivative(a.x, v0, t);
            // relaxation rate G(r)/eps taken at the predicted midpoint
            const double rate0 = pathway_.G(r0) / eps;
            const double half = std::exp(-0.5 * rate0 * h);
            const double rate = pathway_.G(r0 * half - D0 * (1.0 - half) / rate0) / eps;
            const double decay = std::exp(-rate * h);
            const double noise = noisy ? std::sqrt(eps / rate * (1.0 - decay * decay)) * a.rng.normal() : 0.0;

            // Tentative end state with the current velocity, for the hazard.
            double r_end = r0 * decay - D0 * (1.0 - decay) / rate + noise;
            double x_end = wrap_periodic(a.x + v0 * h, L);
            const double lam1 = pathway_.Lambda(r_end / eps);
            const double slope = (lam1 - lam0) / h;
            auto cumulative = [&](double s) { return lam0 * s + 0.5 * slope * s * s; };
            auto solve_time = [&](double target) {
                if (std::abs(slope) * h < 1e-12 * lam0) return target / lam0;
                const double disc = lam0 * lam0 + 2.0 * slope * target;
                return (std::sqrt(std::max(disc, 0.0)) - lam0) / slope;
            };

            double used_until = 0.0;  // hazard consumed at the last tumble
            double seg_start = 0.0;
            if (cumulative(h) - used_until >= a.hazard) {
                // Rebuild the end state segment by segment.
                double forcing = 0.0;
                double x = a.x;
                double D = D0;
                double v = v0;
                while (cumulative(h) - used_until >= a.hazard) {
                    const double target = used_until + a.hazard;
                    const double s = std::clamp(solve_time(target), seg_start, h);
                    forcing -= D * (std::exp(-rate * (h - s)) - std::exp(-rate * (h - seg_start))) / rate;
                    x = wrap_periodic(x + v * (s - seg_start), L);
                    a.k = pick(cumulative_, a.rng.uniform());
                    a.hazard = a.rng.exponential();
                    ++tumbles;
                    used_until = target;
                    seg_start = s;
                    v = vs_.speeds[a.k];
                    D = signal_.pathwise_derivative(x, v, t + s);
                }
                forcing -= D * (1.0 - std::exp(-rate * (h - seg_start))) / rate;
                r_end = r0 * decay + forcing + noise;
                x_end = wrap_periodic(x + v * (h - seg_start), L);
                a.hazard -= cumulative(h) - used_until;
            } else {
                a.hazard -= cumulative(h);
            }
            a.x = x_end;
            a.m = signal_.methylation(a.x, t + h) + r_end;
            if (a.m < 0.0) a.m = -a.m;
            t += h;
            rem -= h;
        }
        return tumbles;
    }

    Signal signal_;
    Pathway pathway_;
    VelocitySet vs_;
    AgentOptions opt_;
    std::vector<double> cumulative_;
};

}  // namespace rtchemo
