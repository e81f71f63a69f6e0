#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rtchemo/signal.hpp"

using namespace rtchemo;

namespace {

Signal wave(double u = 0.4) {
    SignalSpec s;
    s.wave_speed = u;
    return Signal(s, {});
}

}  // namespace

TEST(Signal, WaveLigandAtZeroPhaseIsS0) {
    const auto sig = wave();
    EXPECT_NEAR(sig.ligand(0.0, 0.0), 500.0, 1e-12);
    EXPECT_NEAR(sig.ligand(0.4 * 25.0, 25.0), 500.0, 1e-9);
}

TEST(Signal, WaveLigandQuarterPeriodIsPeak) {
    const auto sig = wave();
    EXPECT_NEAR(sig.ligand(200.0, 0.0), 600.0, 1e-10);
}

TEST(Signal, StaticWithoutAmplitudeIsConstant) {
    SignalSpec s;
    s.kind = SignalKind::Static;
    s.SA = 0.0;
    const Signal sig(s, {});
    for (double x : {0.0, 123.0, 799.0})
        for (double t : {0.0, 50.0}) {
            EXPECT_DOUBLE_EQ(sig.ligand(x, t), 500.0);
            EXPECT_DOUBLE_EQ(sig.methylation(x, t), sig.methylation(0.0, 0.0));
            for (double v : {-20.0, 20.0}) EXPECT_EQ(sig.pathwise_derivative(x, v, t), 0.0);
        }
}

TEST(Signal, FreeEnergyValues) {
    const LogSensingParams p;
    EXPECT_NEAR(f0(500.0, p), 3.19478899421800162, 1e-12);
    EXPECT_NEAR(f0(1e-12, p), 0.0, 1e-12);
    EXPECT_EQ(f0_closed(0.0, p), 0.0);
    EXPECT_GT(f0(600.0, p), f0(500.0, p));
    EXPECT_THROW(f0(0.0, p), DomainError);
    EXPECT_THROW(f0(-1.0, p), DomainError);
}

TEST(Signal, FreeEnergyDerivativeMatchesFiniteDifference) {
    const LogSensingParams p;
    for (double S : {10.0, 400.0, 600.0}) {
        const double h = 1e-4 * S;
        EXPECT_NEAR(f0_prime(S, p), (f0(S + h, p) - f0(S - h, p)) / (2 * h), 1e-9);
    }
}

TEST(Signal, MethylationAtS500) {
    const auto sig = wave();
    EXPECT_NEAR(sig.methylation(0.0, 0.0), 2.87928764365764802, 1e-12);
    EXPECT_NEAR(sig.m_min(), 1.0 + f0(400.0, sig.sensing()) / 1.7, 1e-12);
    EXPECT_NEAR(sig.m_max(), 1.0 + f0(600.0, sig.sensing()) / 1.7, 1e-12);
}

TEST(Signal, PathwiseDerivativeValue) {
    const auto sig = wave(0.4);
    EXPECT_NEAR(sig.pathwise_derivative(0.0, 20.0, 0.0), 0.014887099421372243, 1e-14);
}

TEST(Signal, PathwiseDerivativeMatchesCharacteristic) {
    const auto sig = wave(0.4);
    for (double x : {30.0, 250.0, 610.0})
        for (double v : {-20.0, 20.0}) {
            const double t = 17.0, h = 1e-4;
            const double fd = (sig.methylation(x + v * h, t + h) - sig.methylation(x - v * h, t - h)) / (2 * h);
            EXPECT_NEAR(sig.pathwise_derivative(x, v, t), fd, 1e-8);
        }
}

TEST(Signal, RiderSeesNoChange) {
    const auto sig = wave(8.0);
    for (double x = 0.0; x < 800.0; x += 37.0) EXPECT_EQ(sig.pathwise_derivative(x, 8.0, 3.0), 0.0);
}

TEST(Signal, MaxDerivativeBoundsSamples) {
    const auto sig = wave(8.0);
    const double bound = sig.max_abs_pathwise_derivative(20.0);
    double seen = 0.0;
    for (double x = 0.0; x < 800.0; x += 0.5)
        for (double v : {-20.0, 20.0}) seen = std::max(seen, std::abs(sig.pathwise_derivative(x, v, 0.0)));
    EXPECT_LE(seen, bound * (1 + 1e-12));
    EXPECT_GT(seen, 0.5 * bound);
}

TEST(Signal, UniformRampPrescribesM) {
    SignalSpec s;
    s.kind = SignalKind::UniformRamp;
    s.ramp_rate = 0.5;
    s.ramp_window = 10.0;
    const Signal sig(s, {});
    EXPECT_DOUBLE_EQ(sig.methylation(100.0, 2.0), 2.0);
    EXPECT_DOUBLE_EQ(sig.pathwise_derivative(100.0, 20.0, 2.0), 0.5);
    EXPECT_THROW(sig.ligand(0.0, 0.0), DomainError);
    EXPECT_THROW(sig.methylation(0.0, 11.0), DomainError);
}

TEST(Signal, TabulatedPeriodicInterpolates) {
    SignalSpec s;
    s.kind = SignalKind::Tabulated;
    s.domain_length = 800.0;
    s.table.dx = 8.0;
    for (int i = 0; i < 100; ++i)
        s.table.values.push_back(500.0 + 100.0 * std::sin(2 * std::numbers::pi * i * 8.0 / 800.0));
    const Signal sig(s, {});
    EXPECT_TRUE(sig.approximate_derivative());
    EXPECT_NEAR(sig.ligand(8.0, 0.0), s.table.values[1], 1e-12);
    EXPECT_NEAR(sig.ligand(804.0, 0.0), 0.5 * (s.table.values[0] + s.table.values[1]), 1e-12);
    const auto ref = wave(0.0);
    EXPECT_NEAR(sig.pathwise_derivative(100.0, 20.0, 0.0), ref.pathwise_derivative(100.0, 20.0, 0.0), 2e-4);
}

TEST(Signal, RejectsBadSpecs) {
    SignalSpec s;
    s.SA = 600.0;
    EXPECT_THROW(Signal(s, {}), DomainError);
    SignalSpec t;
    t.domain_length = 400.0;
    EXPECT_THROW(Signal(t, {}), DomainError);
    LogSensingParams p;
    p.K_I = 5000.0;
    EXPECT_THROW(Signal(SignalSpec{}, p), DomainError);
    EXPECT_THROW(signal_kind_from_string("sawtooth"), DomainError);
    EXPECT_EQ(signal_kind_from_string(to_string(SignalKind::UniformRamp)), SignalKind::UniformRamp);
}

TEST(Signal, WrapPeriodic) {
    EXPECT_DOUBLE_EQ(wrap_periodic(-1.0, 800.0), 799.0);
    EXPECT_DOUBLE_EQ(wrap_periodic(1600.5, 800.0), 0.5);
    EXPECT_LT(wrap_periodic(-1e-17, 800.0), 800.0);
}
