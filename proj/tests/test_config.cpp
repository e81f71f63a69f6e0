#include <gtest/gtest.h>

#include <filesystem>

#include "rtchemo/config.hpp"
#include "rtchemo/io.hpp"

using namespace rtchemo;

namespace {

std::string error_of(const std::string& text) {
    try {
        validate(parse_config_text(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, EmptyGivesDefaults) {
    const auto c = parse_config_text("");
    EXPECT_EQ(c, RunConfig{});
    EXPECT_EQ(parse_config_text("{}"), RunConfig{});
    EXPECT_EQ(c.pathway.N, 6);
    EXPECT_DOUBLE_EQ(c.pathway.alpha, 1.7);
    EXPECT_DOUBLE_EQ(c.pathway.a0, 0.5);
    EXPECT_DOUBLE_EQ(c.pathway.z0, 0.14);
    EXPECT_DOUBLE_EQ(c.pathway.tau, 0.8);
    EXPECT_DOUBLE_EQ(c.pathway.H, 10.0);
    EXPECT_DOUBLE_EQ(c.sensing.m0, 1.0);
    EXPECT_DOUBLE_EQ(c.sensing.K_I, 18.2);
    EXPECT_DOUBLE_EQ(c.sensing.K_A, 3000.0);
    EXPECT_DOUBLE_EQ(c.signal.S0, 500.0);
    EXPECT_DOUBLE_EQ(c.signal.SA, 100.0);
    EXPECT_DOUBLE_EQ(c.signal.wavelength, 800.0);
    EXPECT_EQ(c.agents.n_cells, 20000u);
    EXPECT_NO_THROW(validate(c));
}

TEST(Config, WaveSpeedKey) {
    const auto c = parse_config_text(R"({"signal": {"u_um_per_s": 8}})");
    EXPECT_DOUBLE_EQ(c.signal.wave_speed, 8.0);
    EXPECT_EQ(make_signal(c).kind(), SignalKind::TravelingWave);
}

TEST(Config, AlphaIsShared) {
    const auto c = parse_config_text(R"({"pathway": {"alpha": 2.0}})");
    EXPECT_DOUBLE_EQ(make_signal(c).sensing().alpha, 2.0);
    EXPECT_DOUBLE_EQ(make_pathway(c).G0(), 6 * 2.0 / 2.0);
}

TEST(Config, UnknownKeyListsValidKeys) {
    try {
        parse_config_text(R"({"pathway": {"epsilom": 0.1}})");
        FAIL();
    } catch (const ConfigError& e) {
        const std::string m = e.what();
        EXPECT_NE(m.find("epsilom"), std::string::npos);
        EXPECT_NE(m.find("epsilon"), std::string::npos);
        EXPECT_NE(m.find("noise_enabled"), std::string::npos);
    }
    EXPECT_THROW(parse_config_text(R"({"bogus": 1})"), ConfigError);
}

TEST(Config, ConstraintErrorsNameTheConstraint) {
    EXPECT_NE(error_of(R"({"solver": {"dt_s": 1.0}})").find("CFL"), std::string::npos);
    EXPECT_NE(error_of(R"({"grid": {"y_halfwidth": 1.0}})").find("y-domain"), std::string::npos);
    EXPECT_NE(error_of(R"({"agents": {"max_hazard": 0.5}})").find("max_hazard"), std::string::npos);
    EXPECT_NE(error_of(R"({"study": {"eps_list": [0.1, 0.2]}})").find("decreasing"), std::string::npos);
    EXPECT_NE(error_of(R"({"pathway": {"epsilon": 2}})").find("epsilon"), std::string::npos);
    EXPECT_NE(error_of(R"({"signal": {"kind": "uniform-ramp"}, "solver": {"t_end_s": 50}})").find("ramp_window"),
              std::string::npos);
    EXPECT_THROW(parse_config_text("{ not json"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"grid": {"nx": "many"}})"), ConfigError);
    EXPECT_EQ(error_of(R"({"solver": {"dt_s": 0.18}})"), "");
}

TEST(Config, RoundTrip) {
    RunConfig c;
    c.signal.wave_speed = 8.0;
    c.signal.S0 = 512.25;
    c.pathway.epsilon = 0.05;
    c.pathway.noise_enabled = true;
    c.grid.nx = 100;
    c.grid.y_stretch = 0.0;
    c.solver.dt = 0.1 / 3.0;
    c.solver.kernel_mode = KernelMode::Noise;
    c.solver.quadrature_rule = QuadratureRule::GaussHermite;
    c.solver.init_y_profile = InitSpec::YProfile::Dirac;
    c.agents.seed = 0xffffffffffffull;
    c.agents.dump_agents = true;
    c.study.eps_list = {0.3, 0.1};
    c.output_dir = "somewhere/else";
    EXPECT_EQ(config_from_json(config_to_json(c)), c);
    EXPECT_EQ(parse_config_text(config_to_json(c).dump()), c);
    EXPECT_EQ(config_from_json(config_to_json(RunConfig{})), RunConfig{});

    RunConfig t;
    t.signal.kind = SignalKind::Tabulated;
    t.signal.table.dx = 8.0;
    t.signal.table.values.assign(100, 450.0);
    EXPECT_EQ(config_from_json(config_to_json(t)), t);
}

TEST(Config, MetadataReconstructsConfig) {
    RunConfig c;
    c.signal.wave_speed = 8.0;
    c.agents.n_cells = 123;
    Json meta;
    meta["run"] = Json{{"subcommand", "simulate-agents"}};
    meta["config"] = config_to_json(c);
    EXPECT_EQ(parse_config_text(meta.dump()), c);
}

TEST(Config, KernelModeFollowsNoise) {
    RunConfig c;
    EXPECT_EQ(c.effective_kernel_mode(), KernelMode::Deterministic);
    c.pathway.noise_enabled = true;
    EXPECT_EQ(c.effective_kernel_mode(), KernelMode::Noise);
    c.solver.kernel_mode = KernelMode::Deterministic;
    EXPECT_EQ(c.effective_kernel_mode(), KernelMode::Deterministic);
}

TEST(Io, FullPrecisionNumbers) {
    EXPECT_EQ(fmt(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(fmt(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Io, TrackerRemovesPartialOutput) {
    const auto dir = std::filesystem::temp_directory_path() / "rtchemo_tracker_test";
    std::filesystem::remove_all(dir);
    {
        OutputTracker out(dir);
        write_text(out.file("a.csv"), "x\n");
        EXPECT_TRUE(std::filesystem::exists(dir / "a.csv"));
    }
    EXPECT_FALSE(std::filesystem::exists(dir));
    {
        OutputTracker out(dir);
        write_text(out.file("a.csv"), "x\n");
        out.commit();
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "a.csv"));
    std::filesystem::remove_all(dir);
}

TEST(Io, ProfileCsvRoundTrip) {
    ProfileRecord p;
    p.t = 3.5;
    p.dx = 4.0;
    p.rho = {0.1, 0.2, 1.0 / 3.0};
    p.J = {-1.0, 0.0, 2.5};
    ProfileRecord early = p;
    early.t = 1.0;
    const auto dir = std::filesystem::temp_directory_path() / "rtchemo_csv_test";
    std::filesystem::create_directories(dir);
    write_text(dir / "p.csv", profiles_csv({early, p}));
    const auto r = read_profile_csv(dir / "p.csv", ProfileSource::Full);
    EXPECT_EQ(r.rho, p.rho);
    EXPECT_EQ(r.J, p.J);
    EXPECT_DOUBLE_EQ(r.t, 3.5);
    EXPECT_DOUBLE_EQ(r.dx, 4.0);
    std::filesystem::remove_all(dir);
}
