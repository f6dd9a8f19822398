#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <slowlight/runner.hpp>

using namespace slowlight;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("slowlight_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

/// Runs the command-line tool; returns its exit status and captures stdout and stderr.
int cli(const std::string& args, std::string* output = nullptr) {
    const auto log = fs::temp_directory_path() / "slowlight_cli_test_output.txt";
    const std::string cmd = std::string("\"") + SLOWLIGHT_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* small_gate = R"({
  // a coarse gate map
  "grid": { "tau": [-2, 2, 21], "zeta": [-3, 3, 31] }
})";

std::string error_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Scenario, DefaultsDescribeTheGate) {
    const auto s = parse_scenario("{}");
    EXPECT_EQ(s.family, Family::general);
    EXPECT_EQ(s.physical.nu0, 4.5);
    EXPECT_EQ(s.physical.omega0, 3.0);
    EXPECT_EQ(s.spectral.lambda0, cplx(0.0, 4.1));
    EXPECT_EQ(s.spectral.c2, cplx(1.0));
    EXPECT_EQ(s.spectral.c3, cplx(1.0));
}

TEST(Scenario, CommentsAndInfinitiesAreAccepted) {
    const auto s = parse_scenario(R"({
      // line comment
      "family": "time_dependent", /* block comment */
      "spectral": { "lambda": [0, -4.1] },
      "background": { "kind": "exponential_switch", "alpha": 2, "cutoff": null, "restart": "inf" }
    })");
    EXPECT_EQ(s.background.alpha, 2.0);
    EXPECT_TRUE(std::isinf(s.background.cutoff));
    EXPECT_TRUE(std::isinf(s.background.restart));
}

TEST(Scenario, UnknownKeyReportsLineAndPath) {
    const auto e = error_of("{\n  \"spectral\": {\n    \"lamda\": [0, 4.1]\n  }\n}");
    EXPECT_NE(e.find("line 3"), std::string::npos) << e;
    EXPECT_NE(e.find("spectral.lamda"), std::string::npos) << e;
}

TEST(Scenario, SyntaxErrorReportsLine) {
    const auto e = error_of("{\n  \"family\": \"slow\",\n  \"grid\": {\n}}}");
    EXPECT_NE(e.find("line 4"), std::string::npos) << e;
}

TEST(Scenario, WrongTypeIsNamed) {
    const auto e = error_of(R"({"grid": {"tau": [0, 1]}})");
    EXPECT_NE(e.find("grid.tau"), std::string::npos) << e;
    EXPECT_NE(e.find("[begin, end, points]"), std::string::npos) << e;
}

TEST(Scenario, EmptyGridIsInvalid) {
    EXPECT_THROW(parse_scenario(R"({"grid": {"tau": [0, 1, 0]}})"), ConfigError);
}

TEST(Scenario, FamilyAndProfileMustAgree) {
    EXPECT_THROW(parse_scenario(R"({"family": "slow", "background": {"kind": "step_off"}})"), FamilyMismatchError);
    EXPECT_THROW(parse_scenario(R"({"family": "zero_background"})"), FamilyMismatchError);
    EXPECT_THROW(parse_scenario(R"({"family": "general", "physical": {"omega0": 0}})"), FamilyMismatchError);
    EXPECT_NO_THROW(parse_scenario(R"({"family": "time_dependent", "background": {"kind": "step_off"}})"));
}

TEST(Scenario, StoppingNeedsABackgroundThatStaysOff) {
    EXPECT_THROW(parse_scenario(R"({"family": "time_dependent", "spectral": {"lambda": [0, -4.1]},
                                    "observables": {"stopping_distance": true}})"),
                 NotStoppingError);
    EXPECT_THROW(parse_scenario(R"({"family": "slow", "observables": {"stopping_distance": true}})"),
                 FamilyMismatchError);
    EXPECT_THROW(parse_scenario(R"({"family": "time_dependent", "background": {"kind": "step_off"},
                                    "observables": {"stopping_distance": true}})"),
                 ConfigError);
}

TEST(Scenario, FiniteCutoffNeedsDecayingW) {
    EXPECT_THROW(parse_scenario(R"({"family": "time_dependent",
                                    "background": {"kind": "exponential_switch", "cutoff": 1, "restart": 4}})"),
                 ConfigError);
}

TEST(Scenario, EchoParsesBackToTheSameScenario) {
    const auto a = parse_scenario(R"({"family": "time_dependent", "spectral": {"lambda": [0.2, -4.1], "c2": [1, 0.5]},
                                      "background": {"kind": "exponential_switch", "cutoff": 1, "restart": 4},
                                      "observables": {"track": {"channel": "P2", "tau": [-1, "inf"]}}})");
    const auto b = parse_scenario(scenario_to_json(a).dump());
    EXPECT_EQ(scenario_to_json(a), scenario_to_json(b));
}

TEST(Scenario, ShippedScenariosLoad) {
    int n = 0;
    for (const auto& e : fs::directory_iterator(fs::path(SLOWLIGHT_SOURCE_DIR) / "scenarios"))
        if (e.path().extension() == ".json") {
            EXPECT_NO_THROW(load_scenario(e.path())) << e.path();
            ++n;
        }
    EXPECT_GE(n, 6);
}

TEST(Run, WritesMapAndSummary) {
    const auto dir = scratch("run");
    const auto r = run_scenario(parse_scenario(small_gate), dir);
    ASSERT_TRUE(fs::exists(r.field_map));
    const auto j = ojson::parse(slurp(r.summary_path));
    EXPECT_EQ(j["version"], SLOWLIGHT_VERSION);
    EXPECT_TRUE(j.contains("wall_time_seconds"));
    EXPECT_NEAR(j["observables"]["velocity"]["predicted"].get<double>(), 0.5432, 1e-4);
    EXPECT_NEAR(j["diagnostics"]["velocity_factor_two"]["ratio_to_half"].get<double>(), 0.5432, 1e-4);
    EXPECT_FALSE(j["diagnostics"]["normalization_formula"]["flagged"].get<bool>());
    EXPECT_LE(j["diagnostics"]["max_population_defect"].get<double>(), 1e-10);
    EXPECT_EQ(j["parameters"]["grid"]["tau"][2], 21);
}

TEST(Run, MapIsDeterministicAndRoundTrips) {
    const auto s = parse_scenario(small_gate);
    const auto a = run_scenario(s, scratch("det_a"));
    const auto b = run_scenario(s, scratch("det_b"));
    EXPECT_EQ(slurp(a.field_map), slurp(b.field_map));

    const auto m = read_field_map(a.field_map.string());
    const auto [lo, hi] = s.tau_range();
    const auto direct = evaluate_field_map(*s.solution(s.scattering(lo, hi)), s.grid);
    ASSERT_EQ(m.samples.size(), direct.samples.size());
    EXPECT_EQ(m.tau, direct.tau);
    EXPECT_EQ(m.zeta, direct.zeta);
    for (std::size_t k = 0; k < m.samples.size(); ++k) {
        EXPECT_EQ(m.samples[k].omega_a, direct.samples[k].omega_a);
        EXPECT_EQ(m.samples[k].omega_b, direct.samples[k].omega_b);
        EXPECT_EQ(m.samples[k].p2, direct.samples[k].p2);
    }
}

TEST(Run, ThreadCountDoesNotChangeTheMap) {
    const auto dir = scratch("threads");
    write_text(dir / "s.json", small_gate);
    ASSERT_EQ(cli("run \"" + (dir / "s.json").string() + "\" --out \"" + (dir / "one").string() + "\""), 0);
    ASSERT_EQ(setenv("SLOWLIGHT_THREADS", "3", 1), 0);
    ASSERT_EQ(cli("run \"" + (dir / "s.json").string() + "\" --out \"" + (dir / "three").string() + "\""), 0);
    unsetenv("SLOWLIGHT_THREADS");
    EXPECT_EQ(slurp(dir / "one" / "field_map.csv"), slurp(dir / "three" / "field_map.csv"));
}

TEST(Run, StoppingReportReachesTheSummary) {
    const auto dir = scratch("stop");
    const auto r = run_scenario(parse_scenario(R"({
      "family": "time_dependent", "spectral": {"lambda": [0, -4.1], "c3": 0},
      "background": {"kind": "exponential_switch", "alpha": 4},
      "grid": {"tau": [-1, 10, 12], "zeta": [-5, 5, 2001]},
      "observables": {"stopping_distance": true}
    })"),
                                dir);
    const auto& st = r.summary["observables"]["stopping_distance"];
    EXPECT_EQ(st["profile"], "exponential_switch");
    EXPECT_NEAR(st["measured"].get<double>() / st["predicted"].get<double>(), 1.0, 0.02);
    EXPECT_NEAR(st["instant_limit"].get<double>(), 0.1580, 5e-5);
}

TEST(Run, ResidualReportsReachTheSummary) {
    const auto dir = scratch("verify");
    const auto r = run_scenario(parse_scenario(R"({
      "family": "slow", "grid": {"tau": [-1, 1, 3], "zeta": [-1, 1, 3]},
      "verify": {"pde_residual": true, "zero_curvature": true, "oracle_propagation": true, "riccati_residual": true,
                 "grid": {"tau": [-0.5, 0.5, 0.02], "zeta": [-0.5, 0.5, 0.02]}}
    })"),
                                dir);
    const auto& v = r.summary["verification"];
    EXPECT_GE(v["pde_residual"]["min_total_order"].get<double>(), 1.9);
    EXPECT_FALSE(v["pde_residual"]["flagged"].get<bool>());
    EXPECT_GE(v["zero_curvature"]["min_total_order"].get<double>(), 1.9);
    for (const auto& o : v["oracle_propagation"]["orders"]) EXPECT_NEAR(o.get<double>(), 2.0, 0.2);
    EXPECT_LE(v["riccati_residual"]["w_relative"].get<double>(), 1e-6);
}

TEST(Cli, RunSucceeds) {
    const auto dir = scratch("cli_run");
    write_text(dir / "s.json", small_gate);
    EXPECT_EQ(cli("run \"" + (dir / "s.json").string() + "\" --out \"" + (dir / "out").string() + "\""), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "field_map.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
}

TEST(Cli, ValidationErrorsExitWithTwo) {
    const auto dir = scratch("cli_validation");
    write_text(dir / "empty.json", R"({"grid": {"zeta": [0, 1, 0]}})");
    std::string out;
    EXPECT_EQ(cli("run \"" + (dir / "empty.json").string() + "\" --out \"" + (dir / "out").string() + "\"", &out), 2);
    EXPECT_NE(out.find("grid.zeta"), std::string::npos) << out;
    EXPECT_FALSE(fs::exists(dir / "out" / "field_map.csv"));
    EXPECT_EQ(cli("figure 7", &out), 2);
    EXPECT_EQ(cli("frobnicate"), 2);
    EXPECT_EQ(cli("sweep \"" + (dir / "empty.json").string() + "\" --param colour --values 1"), 2);
}

TEST(Cli, NumericErrorsExitWithThree) {
    const auto dir = scratch("cli_numeric");
    // oracle grid far too coarse for the soliton width
    write_text(dir / "coarse.json", R"({"grid": {"tau": [0, 1, 2], "zeta": [0, 1, 2]},
                                       "verify": {"pde_residual": true, "grid": {"tau": [-1, 1, 0.5], "zeta": [-1, 1, 0.5]}}})");
    std::string out;
    EXPECT_EQ(cli("run \"" + (dir / "coarse.json").string() + "\" --out \"" + (dir / "out").string() + "\"", &out), 3);
    EXPECT_NE(out.find("coarse"), std::string::npos) << out;
}

TEST(Cli, UnwritableOutputFailsBeforeComputing) {
    const auto dir = scratch("cli_io");
    write_text(dir / "s.json", small_gate);
    write_text(dir / "blocker", "not a directory");
    std::string out;
    EXPECT_EQ(cli("run \"" + (dir / "s.json").string() + "\" --out \"" + (dir / "blocker" / "out").string() + "\"", &out),
              4);
    EXPECT_EQ(cli("run \"" + (dir / "missing.json").string() + "\""), 4);
    EXPECT_EQ(cli("figure 1 --out \"" + (dir / "blocker" / "figs").string() + "\""), 4);
}

TEST(Cli, SelfcheckPassesAndItsNegativeControlFails) {
    std::string out;
    EXPECT_EQ(cli("selfcheck", &out), 0) << out;
    EXPECT_EQ(out.find("FAIL"), std::string::npos) << out;
    EXPECT_NE(out.find("PASS bessel_recurrence"), std::string::npos) << out;
    EXPECT_EQ(cli("selfcheck --bessel-tolerance 1e-3", &out), 3);
    EXPECT_NE(out.find("FAIL bessel_recurrence"), std::string::npos) << out;
}

TEST(Cli, SelfcheckHidesTheTestHook) {
    std::string out;
    cli("selfcheck --help", &out);
    EXPECT_EQ(out.find("bessel"), std::string::npos) << out;
}

TEST(Cli, SweepRunsEveryValue) {
    const auto dir = scratch("cli_sweep");
    write_text(dir / "s.json", small_gate);
    ASSERT_EQ(cli("sweep \"" + (dir / "s.json").string() + "\" --param omega0 --values 2,3 --out \"" +
                  (dir / "out").string() + "\""),
              0);
    const auto j = ojson::parse(slurp(dir / "out" / "sweep.json"));
    ASSERT_EQ(j["runs"].size(), 2u);
    EXPECT_GT(j["runs"][1]["observables"]["velocity"]["predicted"].get<double>(),
              j["runs"][0]["observables"]["velocity"]["predicted"].get<double>());
    EXPECT_TRUE(fs::exists(dir / "out" / "omega0_0" / "field_map.csv"));
    // a value that breaks the family is rejected before anything runs
    EXPECT_EQ(cli("sweep \"" + (dir / "s.json").string() + "\" --param omega0 --values 2,0 --out \"" +
                  (dir / "bad").string() + "\""),
              2);
    EXPECT_FALSE(fs::exists(dir / "bad" / "omega0_0"));
}

TEST(Figures, ControlFieldAtThreeDepths) {
    const auto dir = scratch("fig3");
    ASSERT_EQ(cli("figure 3 --out \"" + dir.string() + "\""), 0);
    std::ifstream in(dir / "figure3_control.csv");
    std::string header, line;
    std::getline(in, header);
    EXPECT_NE(header.find("intensity_b_z6"), std::string::npos);
    EXPECT_NE(header.find("intensity_b_z12"), std::string::npos);
    int rows = 0;
    double first_b12 = 0.0;
    while (std::getline(in, line)) {
        if (rows++ == 0) first_b12 = std::stod(line.substr(line.rfind(',') + 1));
    }
    EXPECT_EQ(rows, 1101);
    EXPECT_NEAR(first_b12, 9.0, 1e-6);  // control still on at the far depth
}

TEST(Figures, StandingFlipInTheDarkInterval) {
    const auto s = memory_scenario();
    const auto sol = s.solution(s.scattering(-5.0, 11.0));
    // P2 peak stays put while the control is off (1 <= t <= 4 at the imprint)
    double first = 0.0;
    for (double t : {1.5, 2.5, 3.5}) {
        double best = 0.0, at = 0.0;
        for (double z : Axis{-2.0, 2.0, 801}.values()) {
            const double p2 = (*sol)(t - z, z).rho(1, 1).real();
            if (p2 > best) {
                best = p2;
                at = z;
            }
        }
        EXPECT_GT(best, 0.99);
        if (t == 1.5) first = at;
        EXPECT_NEAR(at, first, 0.01);
    }
}

TEST(Figures, AdiabaticBundleReportsTheDeviation) {
    const auto dir = scratch("fig6");
    ASSERT_EQ(cli("figure 6 --out \"" + dir.string() + "\""), 0);
    const auto j = ojson::parse(slurp(dir / "figure6.json"));
    EXPECT_GT(j["omega_a_relative_deviation"].get<double>(), 0.25);
    EXPECT_LT(j["omega_a_relative_deviation"].get<double>(), 0.45);
    EXPECT_TRUE(fs::exists(dir / "figure6_adiabatic.csv"));
}

TEST(Figures, MapBundlesUseTheFieldMapFormat) {
    const auto dir = scratch("fig_maps");
    for (int id : {1, 2, 4, 5}) ASSERT_EQ(cli("figure " + std::to_string(id) + " --out \"" + dir.string() + "\""), 0);
    for (const char* f : {"figure1_gate.csv", "figure2_reading.csv", "figure4_intensity_a.csv",
                          "figure5_population_2.csv"}) {
        const auto m = read_field_map((dir / f).string());
        EXPECT_LE(m.max_population_defect(), 1e-10) << f;
    }
}
