#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

#ifndef FLAGSPHERE_CLI
#error "FLAGSPHERE_CLI must name the built binary"
#endif

using json = nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Result {
  int code = -1;
  std::string out;
};

// stdout is captured, stderr is dropped.
Result run(const std::string& args) {
  const std::string cmd = std::string(FLAGSPHERE_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

json run_json(const std::string& args) {
  Result r = run(args);
  EXPECT_EQ(r.code, 0) << args;
  return json::parse(r.out);
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "flagsphere_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cli, MissingMetricIsUsageError) {
  EXPECT_EQ(run("simulate --init meridian").code, 2);
  EXPECT_EQ(run("spectrum").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("simulate --metric round --bogus 1").code, 2);
}

TEST(Cli, PreconditionViolationsExitTwo) {
  EXPECT_EQ(run("spectrum --metric katok:alpha=2").code, 2);
  EXPECT_EQ(run("simulate --metric round --init theta=3").code, 2);
  EXPECT_EQ(run("simulate --metric round --length -1").code, 2);
  EXPECT_EQ(run("counterexample --t0 0.4").code, 2);
}

TEST(Cli, NumericalFailureExitsThree) {
  // Tolerances below round-off can never be met, so the step size underflows.
  const auto cfg = scratch("tight.json");
  std::ofstream(cfg) << R"({"integrator": {"rel_tol": 1e-30, "abs_tol": 1e-30}})";
  EXPECT_EQ(run("simulate --metric round --length 1 --config " + cfg.string()).code, 3);
}

TEST(Cli, SimulateKatokCsvAndStats) {
  const auto csv = scratch("katok.csv");
  json r = run_json("simulate --metric katok:alpha=0.3 --init theta=0.2,phi=0,dir=east --length 50 --out " +
                    csv.string());
  EXPECT_LE(r["stats"]["energy_drift"].get<double>(), 1e-8);
  EXPECT_EQ(r["command"], "simulate");
  EXPECT_TRUE(r.contains("version"));
  EXPECT_EQ(r["config"]["metric"], "katok:alpha=0.3");
  std::ifstream in(csv);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "t,chart,theta,phi,ptheta,pphi,phi_unwrapped");
  long rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, r["stats"]["samples"].get<long>());
}

TEST(Cli, SimulateRoundMeridianCloses) {
  json r = run_json("simulate --metric round --init meridian --length 6.2832 --out " + scratch("m.csv").string());
  EXPECT_LE(r["stats"]["closure_residual"].get<double>(), 1e-8);
  EXPECT_NEAR(r["stats"]["closure"]["length"].get<double>(), 2.0 * kPi, 1e-8);
}

TEST(Cli, SimulateCsvToStdout) {
  Result r = run("simulate --metric round --length 0.1");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("t,chart,theta,phi,ptheta,pphi,phi_unwrapped\n", 0), 0u);
}

TEST(Cli, SpectrumRational) {
  json r = run_json("spectrum --metric katok:alpha=0.333333333");
  EXPECT_NEAR(r["analytic"]["l_short"].get<double>(), 1.5 * kPi, 1e-5);
  EXPECT_NEAR(r["analytic"]["l_long"].get<double>(), 3.0 * kPi, 1e-5);
  EXPECT_NEAR(r["measured"]["l_short"].get<double>(), 1.5 * kPi, 1e-5);
  EXPECT_NEAR(r["measured"]["l_long"].get<double>(), 3.0 * kPi, 1e-5);
  EXPECT_TRUE(r["pass"].get<bool>());
}

TEST(Cli, SpectrumRound) {
  json r = run_json("spectrum --metric round");
  EXPECT_NEAR(r["analytic"]["l_short"].get<double>(), 2.0 * kPi, 1e-12);
  EXPECT_NEAR(r["analytic"]["l_long"].get<double>(), 2.0 * kPi, 1e-12);
  EXPECT_NEAR(r["measured"]["l_short"].get<double>(), 2.0 * kPi, 1e-8);
  EXPECT_NEAR(r["measured"]["l_long"].get<double>(), 2.0 * kPi, 1e-8);
}

TEST(Cli, SpectrumIrrational) {
  json r = run_json("spectrum --metric katok:alpha=0.41421356");
  const double a = 0.41421356;
  EXPECT_NEAR(r["measured"]["l_short"].get<double>(), 2.0 * kPi / (1.0 + a), 1e-6);
  EXPECT_NEAR(r["measured"]["l_long"].get<double>(), 2.0 * kPi / (1.0 - a), 1e-6);
  EXPECT_NEAR(r["measured"]["reciprocal_sum"].get<double>(), 1.0 / kPi, 1e-6);
  EXPECT_NEAR(r["analytic"]["reciprocal_sum"].get<double>(), 1.0 / kPi, 1e-12);
}

TEST(Cli, ConjugateTimes) {
  json r = run_json("conjugate --metric katok:alpha=0.3 --samples 10");
  ASSERT_EQ(r["orbits"].size(), 10u);
  for (const auto& o : r["orbits"]) {
    ASSERT_FALSE(o["conjugate_times"].empty());
    EXPECT_NEAR(o["conjugate_times"][0].get<double>(), kPi, 1e-4);
  }
  EXPECT_TRUE(r["pass"].get<bool>());
}

TEST(Cli, ConjugacyVerdicts) {
  json same = run_json("conjugacy --metric-a katok:alpha=0.3 --metric-b katok:alpha=0.3");
  EXPECT_EQ(same["verdict"], "conjugate");
  EXPECT_EQ(same["a"]["measured"], same["b"]["measured"]);
  EXPECT_NEAR(same["a"]["measured"][0].get<double>(), kPi / 0.65, 1e-5);
  json diff = run_json("conjugacy --metric-a katok:alpha=0.3 --metric-b round");
  EXPECT_EQ(diff["verdict"], "not conjugate");
  // alpha and -alpha give the same normalized lambda.
  EXPECT_EQ(run_json("conjugacy --metric-a katok:alpha=0.3 --metric-b katok:alpha=-0.3")["verdict"], "conjugate");
}

TEST(Cli, RotationAndClosed) {
  json r = run_json("rotation --metric katok:alpha=0.41421356 --samples 3");
  EXPECT_TRUE(r["pass"].get<bool>());
  json c = run_json("closed --metric katok:alpha=0.5 --latitudes 0 --longitudes 1 --headings 8");
  EXPECT_TRUE(c["pass"].get<bool>());
  EXPECT_EQ(c["config"]["search"]["headings"], 8);
}

TEST(Cli, ConfigFileAndFlagsPrecedence) {
  const auto cfg = scratch("cfg.json");
  std::ofstream(cfg) << R"({"metric": "katok:alpha=0.5", "samples": 2, "seed": 7})";
  json r = run_json("conjugate --config " + cfg.string() + " --samples 3");
  EXPECT_EQ(r["config"]["metric"], "katok:alpha=0.5");
  EXPECT_EQ(r["config"]["seed"], 7);
  EXPECT_EQ(r["orbits"].size(), 3u);
}

TEST(Cli, ReportsAreByteIdentical) {
  const std::string args = "conjugate --metric katok:alpha=0.3 --samples 4 --seed 9";
  Result a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  Result c = run("conjugate --metric katok:alpha=0.3 --samples 4 --seed 10");
  EXPECT_NE(a.out, c.out);
}
