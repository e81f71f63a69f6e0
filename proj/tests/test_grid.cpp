#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rtchemo/grid.hpp"

using namespace rtchemo;

TEST(VelocitySet, TwoVelocity) {
    const auto vs = VelocitySet::two_velocity(20.0);
    EXPECT_EQ(vs.size(), 2u);
    EXPECT_DOUBLE_EQ(vs.max_speed(), 20.0);
    EXPECT_DOUBLE_EQ(vs.probability(0), 0.5);
    EXPECT_NO_THROW(vs.validate());
    VelocitySet bad{{1.0, -1.0}, {1.0, 0.0}};
    EXPECT_THROW(bad.validate(), DomainError);
}

TEST(XGrid, Cells) {
    const XGrid g{200, 800.0};
    EXPECT_DOUBLE_EQ(g.dx(), 4.0);
    EXPECT_DOUBLE_EQ(g.center(0), 2.0);
    EXPECT_DOUBLE_EQ(g.center(199), 798.0);
}

TEST(YGrid, UniformPartition) {
    const auto g = YGrid::uniform(-2.0, 2.0, 40);
    EXPECT_EQ(g.size(), 40u);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(g.width(j), 0.1, 1e-14);
    EXPECT_DOUBLE_EQ(std::accumulate(g.widths().begin(), g.widths().end(), 0.0), 4.0);
}

TEST(YGrid, StretchedIsSymmetricAndFinerInside) {
    const auto g = YGrid::stretched(3.0, 128, 8.0);
    EXPECT_DOUBLE_EQ(g.y_min(), -3.0);
    EXPECT_DOUBLE_EQ(g.y_max(), 3.0);
    EXPECT_EQ(g.face(64), 0.0);
    for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(g.center(j), -g.center(127 - j), 1e-14);
    EXPECT_LT(g.width(64), 0.05 * g.width(127));
    for (std::size_t j = 64; j + 1 < 128; ++j) EXPECT_LT(g.width(j), g.width(j + 1));
    EXPECT_NEAR(std::accumulate(g.widths().begin(), g.widths().end(), 0.0), 6.0, 1e-12);
}

TEST(YGrid, FindCell) {
    const auto g = YGrid::stretched(3.0, 64, 4.0);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(g.find_cell(g.center(j)), j);
    EXPECT_EQ(g.find_cell(-3.5), g.size());
    EXPECT_EQ(g.find_cell(3.0), g.size() - 1);
}

TEST(FullGrid, CoverageCheck) {
    const Signal sig(SignalSpec{}, {});
    const Pathway pw{PathwayParams{}};
    // max |D_tM| / G(0) + 3/sqrt(G(0)) is about 1.34 for the default wave
    FullGrid ok{XGrid{200, 800.0}, VelocitySet::two_velocity(20.0), YGrid::stretched(1.6, 64, 0.0)};
    EXPECT_NO_THROW(ok.validate(sig, pw));
    FullGrid narrow{XGrid{200, 800.0}, VelocitySet::two_velocity(20.0), YGrid::stretched(1.2, 64, 0.0)};
    EXPECT_THROW(narrow.validate(sig, pw), DomainError);
    FullGrid wrong_length{XGrid{200, 400.0}, VelocitySet::two_velocity(20.0), YGrid::stretched(3.0, 64, 0.0)};
    EXPECT_THROW(wrong_length.validate(sig, pw), DomainError);
}
