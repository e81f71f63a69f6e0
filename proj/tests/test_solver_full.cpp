#include <gtest/gtest.h>

#include <cmath>

#include "dense_oracle.hpp"
#include "rtchemo/diagnostics.hpp"
#include "rtchemo/solver_full.hpp"

using namespace rtchemo;

namespace {

SignalSpec static_spec(double SA) {
    SignalSpec s;
    s.kind = SignalKind::Static;
    s.SA = SA;
    return s;
}

FullSolver make(const SignalSpec& spec, PathwayParams p, std::size_t nx, std::size_t ny, double hw, double beta,
                FullSolverOptions o = {}) {
    FullGrid g{XGrid{nx, spec.domain_length}, VelocitySet::two_velocity(20.0), YGrid::stretched(hw, ny, beta)};
    return FullSolver(g, Signal(spec, {}), Pathway(p), o);
}

PathwayParams eps_params(double eps, bool noise = false) {
    PathwayParams p;
    p.epsilon = eps;
    p.noise_enabled = noise;
    return p;
}

}  // namespace

TEST(FullSolver, DefaultInitIsNormalizedAndUniform) {
    const auto fs = make(SignalSpec{}, eps_params(0.1), 50, 64, 3.0, 4.0);
    const auto s = fs.initialize({});
    EXPECT_NEAR(fs.mass(s), 1.0, 1e-13);
    const auto qbar = fs.marginal(s);
    for (double v : qbar) EXPECT_NEAR(v, qbar[0], 1e-15);
    EXPECT_NEAR(qbar[0], 1.0 / (800.0 * 2.0), 1e-15);
    EXPECT_NEAR(concentration(fs, s).y_variance, 1.0 / 5.1, 2e-3);
}

TEST(FullSolver, DiracInitKeepsXVProfile) {
    const auto fs = make(SignalSpec{}, eps_params(0.1), 4, 32, 3.0, 4.0);
    InitSpec ini;
    ini.y_profile = InitSpec::YProfile::Dirac;
    ini.x_profile = {1.0, 0.0, 3.0, 0.0};
    ini.velocity_fractions = {0.25, 0.75};
    const auto s = fs.initialize(ini);
    const auto qbar = fs.marginal(s);
    const double dx = 200.0;
    EXPECT_NEAR(qbar[0 * 2 + 0], 0.25 * 0.25 / dx, 1e-15);
    EXPECT_NEAR(qbar[0 * 2 + 1], 0.25 * 0.75 / dx, 1e-15);
    EXPECT_NEAR(qbar[2 * 2 + 1], 0.75 * 0.75 / dx, 1e-15);
    EXPECT_EQ(qbar[1 * 2 + 0], 0.0);
    const auto c = concentration(fs, s);
    const double w = fs.grid().y.width(16);
    EXPECT_LT(c.second_moment, w * w);
}

TEST(FullSolver, RejectsBadInit) {
    const auto fs = make(SignalSpec{}, eps_params(0.1), 4, 32, 3.0, 4.0);
    InitSpec ini;
    ini.x_profile = {1.0, -1.0, 1.0, 1.0};
    EXPECT_THROW(fs.initialize(ini), DegenerateInput);
    ini = {};
    ini.y_profile = InitSpec::YProfile::Tabulated;
    ini.y_table.assign(32, 1.0);
    ini.y_table[3] = -0.5;
    EXPECT_THROW(fs.initialize(ini), DegenerateInput);
    ini = {};
    ini.total_mass = 0.0;
    EXPECT_THROW(fs.initialize(ini), DegenerateInput);
}

TEST(FullSolver, UniformStateStaysUniformUnderFlatSignal) {
    const auto fs = make(static_spec(0.0), eps_params(0.1), 20, 64, 3.0, 4.0);
    auto s = fs.initialize({});
    fs.advance(s, 50.0, fs.max_stable_dt());
    const auto qbar = fs.marginal(s);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(s.at(i, 0, j), s.at(0, 0, j), 1e-15);
    for (double v : qbar) EXPECT_NEAR(v, qbar[0], 1e-14);
}

TEST(FullSolver, VarianceRelaxesWithoutNoise) {
    // Without gradient or noise each y follows dy/dt = -y G(eps y)/eps.
    // The implicit upwind y-stage is first order in dy: the variance error
    // halves with the grid and the Richardson value tracks the particle ODE.
    const double eps = 0.1;
    const Pathway pw{eps_params(eps)};
    std::vector<double> ys;
    for (int i = -400; i <= 400; ++i) ys.push_back(i * 0.005);
    double w = 0.0, var0 = 0.0;
    for (double y : ys) {
        const double g = std::exp(-0.5 * 5.1 * y * y);
        w += g;
        var0 += g * y * y;
    }
    auto particle_var = [&](double t) {
        double acc = 0.0;
        for (double y0 : ys) {
            double y = y0;
            const int n = 2000;
            for (int k = 0; k < n; ++k) {
                const double h = t / n;
                const double k1 = -y * pw.G(eps * y) / eps;
                const double ym = y + 0.5 * h * k1;
                const double k2 = -ym * pw.G(eps * ym) / eps;
                y += h * k2;
            }
            acc += std::exp(-0.5 * 5.1 * y0 * y0) * y * y;
        }
        return acc / w;
    };
    const double dt = 0.0005;
    const int steps = 40;
    auto grid_var = [&](std::size_t ny) {
        const auto fs = make(static_spec(0.0), eps_params(eps), 4, ny, 3.0, 4.0);
        auto s = fs.initialize({});
        EXPECT_NEAR(concentration(fs, s).y_variance, var0 / w, 2e-3);
        double prev = concentration(fs, s).y_variance;
        for (int k = 1; k <= steps; ++k) {
            fs.advance(s, k * dt, dt);
            const double v = concentration(fs, s).y_variance;
            EXPECT_LT(v, prev);
            prev = v;
        }
        return prev;
    };
    const double exact = particle_var(steps * dt);
    const double v1 = grid_var(128), v2 = grid_var(256);
    EXPECT_GT(v1, v2);
    EXPECT_NEAR((v2 - exact) / (v1 - exact), 0.5, 0.1);
    EXPECT_NEAR(2.0 * v2 - v1, exact, 0.02 * exact);
}

TEST(FullSolver, RampConcentratesAtShiftedPoint) {
    SignalSpec ramp;
    ramp.kind = SignalKind::UniformRamp;
    ramp.ramp_rate = 0.5;
    const auto fs = make(ramp, eps_params(0.05), 8, 128, 3.0, 4.0);
    auto s = fs.initialize({});
    fs.advance(s, 2.0, fs.max_stable_dt());
    const auto c = concentration(fs, s);
    const double ystar = -0.5 / 5.1;
    const double w = fs.grid().y.width(fs.grid().y.find_cell(ystar));
    EXPECT_LT(std::abs(c.y_mean - ystar), w);
    EXPECT_LT(c.y_variance, 4 * w * w);
}

TEST(FullSolver, ExplicitDriftAlsoConcentrates) {
    SignalSpec ramp;
    ramp.kind = SignalKind::UniformRamp;
    ramp.ramp_rate = 0.5;
    FullSolverOptions o;
    o.y_scheme = YScheme::Explicit;
    const auto fs = make(ramp, eps_params(0.05), 8, 128, 3.0, 4.0, o);
    auto s = fs.initialize({});
    fs.advance(s, 2.0, fs.max_stable_dt());
    const auto c = concentration(fs, s);
    const double ystar = -0.5 / 5.1;
    EXPECT_LT(std::abs(c.y_mean - ystar), fs.grid().y.width(fs.grid().y.find_cell(ystar)));
}

TEST(FullSolver, NoiseGivesGaussianVariance) {
    const auto fs = make(static_spec(0.0), eps_params(0.05, true), 4, 128, 3.0, 4.0);
    InitSpec ini;
    ini.y_profile = InitSpec::YProfile::Dirac;
    auto s = fs.initialize(ini);
    fs.advance(s, 2.0, 0.05);
    const auto c = concentration(fs, s);
    EXPECT_NEAR(c.y_variance * 5.1, 1.0, 0.05);
    EXPECT_NEAR(c.y_mean, 0.0, 1e-3);
}

TEST(FullSolver, ConservesMassOnTravelingWave) {
    SignalSpec w;
    w.wave_speed = 8.0;
    const auto fs = make(w, eps_params(0.2), 100, 64, 3.0, 6.0);
    auto s = fs.initialize({});
    BoundsMonitor mon(fs, s);
    fs.advance(s, 60.0, fs.max_stable_dt(), [&](const FullKineticState& st) { mon.observe(st); });
    EXPECT_LT(mon.max_relative_drift(), 1e-12);
    for (double v : s.q) EXPECT_GE(v, 0.0);
    EXPECT_LE(mon.linf_growth_rate(), fs.pathway().lambda_plus() * 2.0);
}

TEST(FullSolver, ThreadCountDoesNotChangeResult) {
    SignalSpec w;
    FullSolverOptions o1, o3;
    o3.threads = 3;
    const auto a = make(w, eps_params(0.1), 40, 64, 3.0, 6.0, o1);
    const auto b = make(w, eps_params(0.1), 40, 64, 3.0, 6.0, o3);
    auto sa = a.initialize({});
    auto sb = b.initialize({});
    a.advance(sa, 20.0, a.max_stable_dt());
    b.advance(sb, 20.0, b.max_stable_dt());
    EXPECT_EQ(sa.q, sb.q);
}

TEST(FullSolver, CflViolationThrows) {
    const auto fs = make(SignalSpec{}, eps_params(0.1), 200, 64, 3.0, 4.0);
    auto s = fs.initialize({});
    EXPECT_THROW(fs.step(s, 1.0), StabilityError);
    EXPECT_THROW(fs.step(s, 0.0), StabilityError);
}

TEST(FullSolver, TruncationIsReported) {
    // With noise the stationary y-profile has variance 1/G(0) and keeps
    // mass in the edge cells of a grid that barely covers the minimum.
    const auto fs = make(SignalSpec{}, eps_params(0.1, true), 20, 64, 1.4, 0.0);
    auto s = fs.initialize({});
    EXPECT_THROW(fs.step(s, fs.max_stable_dt()), TruncationError);
}

TEST(FullSolver, ReconstructDensity) {
    const auto fs = make(SignalSpec{}, eps_params(0.1), 20, 128, 3.0, 4.0);
    InitSpec ini;
    ini.y_profile = InitSpec::YProfile::Dirac;
    const auto s = fs.initialize(ini);
    const double x = fs.grid().x.center(3);
    const double M = fs.signal().methylation(x, 0.0);
    const auto& y = fs.grid().y;
    const std::size_t jc = y.find_cell(1e-12);
    EXPECT_NEAR(fs.reconstruct_p(s, x, 0, M + 0.1 * y.center(jc)), s.at(3, 0, jc) / 0.1, 1e-12);
    EXPECT_EQ(fs.reconstruct_p(s, x, 0, M + 0.1 * 4.0), 0.0);
    EXPECT_THROW(fs.reconstruct_p(s, x, 0, -1.0), DomainError);
}

TEST(FullSolver, ReconstructIntegratesToMarginal) {
    const auto fs = make(SignalSpec{}, eps_params(0.1), 20, 128, 3.0, 4.0);
    const auto s = fs.initialize({});
    const double x = fs.grid().x.center(7);
    const double M = fs.signal().methylation(x, 0.0);
    const auto& yc = fs.grid().y.centers();
    const double lo = M + 0.1 * yc.front(), hi = M + 0.1 * yc.back();
    const int n = 20000;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double m = lo + (hi - lo) * k / n;
        acc += (k == 0 || k == n ? 0.5 : 1.0) * fs.reconstruct_p(s, x, 1, m);
    }
    acc *= (hi - lo) / n;
    const double qbar = fs.marginal(s)[7 * 2 + 1];
    EXPECT_NEAR(acc, qbar, 1e-3 * qbar);
}

TEST(FullSolver, MatchesDenseOracle) {
    struct Case {
        double eps;
        bool noise;
    };
    for (const Case c : {Case{0.1, false}, Case{0.1, true}, Case{1.0, true}}) {
        FullSolverOptions o;
        o.boundary_mass_tol = 1.0;
        const auto fs = make(static_spec(100.0), eps_params(c.eps, c.noise), 4, 16, 3.0, 0.0, o);
        InitSpec ini;
        ini.x_profile = {1.0, 2.0, 3.0, 1.5};
        const auto r = oracle::compare_with_oracle(fs, fs.initialize(ini), 0.02, 10);
        EXPECT_LT(r.relative_error, 1e-3) << "eps " << c.eps << " noise " << c.noise;
        EXPECT_GT(r.relative_change, 1e-2);
    }
}

TEST(FullSolver, BernoulliFunction) {
    EXPECT_DOUBLE_EQ(detail::bernoulli(0.0), 1.0);
    EXPECT_NEAR(detail::bernoulli(1e-9), 1.0 - 0.5e-9, 1e-15);
    EXPECT_NEAR(detail::bernoulli(2.0), 2.0 / (std::exp(2.0) - 1.0), 1e-15);
    EXPECT_NEAR(detail::bernoulli(-2.0) - detail::bernoulli(2.0), 2.0, 1e-14);
}
