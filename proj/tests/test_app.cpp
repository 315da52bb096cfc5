#include "support/fixtures.hpp"

#include <pll_lockin/app.hpp>

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

namespace pll {
namespace {

RunConfig config_for(Command command)
{
    RunConfig c;
    c.params = test::fig3;
    c.command = command;
    return c;
}

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run_captured(const RunConfig& c)
{
    std::ostringstream out, err;
    const int code = run(c, out, err);
    return {code, out.str(), err.str()};
}

TEST(App, HoldIn)
{
    const auto r = run_captured(config_for(Command::Holdin));
    EXPECT_EQ(r.code, exit_ok);
    EXPECT_EQ(r.out, "omega_h\n250\n");
}

TEST(App, LockInCsvAndJson)
{
    auto c = config_for(Command::Lockin);
    const auto csv = run_captured(c);
    EXPECT_EQ(csv.code, exit_ok);
    EXPECT_NE(csv.out.find("omega_lc"), std::string::npos);
    EXPECT_NE(csv.out.find("73.7470167"), std::string::npos);

    c.format = OutputFormat::Json;
    const auto json = nlohmann::json::parse(run_captured(c).out);
    EXPECT_NEAR(json.at("omega_lc").get<double>(), 73.747016722, 1e-6);
    EXPECT_EQ(json.at("case").get<std::string>(), "xi<1");
}

TEST(App, Deterministic)
{
    auto c = config_for(Command::Sweep);
    c.params.tau1 = 0.5;
    c.sweep = SweepSpec{};
    const auto a = run_captured(c);
    const auto b = run_captured(c);
    EXPECT_EQ(a.code, exit_ok);
    EXPECT_EQ(a.out, b.out);
    // header + 46 rows
    EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 47);
}

TEST(App, EquilibriaNeedsOmega)
{
    auto c = config_for(Command::Equilibria);
    EXPECT_EQ(run_captured(c).code, exit_invalid);
    c.omega = 73.732;
    const auto r = run_captured(c);
    EXPECT_EQ(r.code, exit_ok);
    EXPECT_NE(r.out.find("stable_focus"), std::string::npos);
    EXPECT_NE(r.out.find("saddle"), std::string::npos);
    c.omega = 300.0;
    EXPECT_EQ(run_captured(c).code, exit_invalid);
}

TEST(App, InvalidInput)
{
    auto c = config_for(Command::Lockin);
    c.params.kvco = -1.0;
    EXPECT_EQ(run_captured(c).code, exit_invalid);
    c = config_for(Command::Lockin);
    c.tol = 1.0;
    const auto r = run_captured(c);
    EXPECT_EQ(r.code, exit_invalid);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(App, PortraitWritesTwoFiles)
{
    const auto dir = std::filesystem::temp_directory_path() / "pll_lockin_tests";
    std::filesystem::create_directories(dir);
    auto c = config_for(Command::Portrait);
    c.omega = 65.0;
    c.output_path = (dir / "portrait.csv").string();
    EXPECT_EQ(run_captured(c).code, exit_ok);
    EXPECT_TRUE(std::filesystem::exists(dir / "portrait.trajectory.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "portrait.separatrix.csv"));
    EXPECT_EQ(detail::tagged_path("out", "separatrix"), "out.separatrix");

    c.output_path = "/nonexistent-dir/p.csv";
    EXPECT_EQ(run_captured(c).code, exit_invalid);
}

TEST(App, SolverFailureExitCode)
{
    EXPECT_TRUE(is_solver_failure(ErrorCode::NoBracket));
    EXPECT_TRUE(is_solver_failure(ErrorCode::StepUnderflow));
    EXPECT_FALSE(is_solver_failure(ErrorCode::InvalidParameters));
    EXPECT_FALSE(is_solver_failure(ErrorCode::Io));
}

#ifdef PLL_LOCKIN_CLI
int shell(const std::string& args)
{
    const std::string cmd = std::string(PLL_LOCKIN_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(shell("holdin --tau1 0.0633 --tau2 0.0225 --kvco 250"), 0);
    EXPECT_EQ(shell("lockin --tau1 0.0633 --tau2 0.0225 --kvco 250 --format json"), 0);
    EXPECT_EQ(shell("lockin --tau1 0.0633 --tau2 0.0225 --kvco -3"), 1);
    EXPECT_EQ(shell("lockin --tau1 0.0633 --tau2 0.0225 --kvco 250 --format xml"), 1);
    EXPECT_EQ(shell("frobnicate"), 1);
    EXPECT_EQ(shell("pullin --tau1 0.0633 --tau2 0.0225 --kvco 250 --m-range 3"), 1);
}
#endif

} // namespace
} // namespace pll
