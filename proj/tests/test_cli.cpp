#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "ghzlab/cli.hpp"
#include "ghzlab/io.hpp"

using namespace ghzlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kIdealConfig = R"({
  // ideal source and chip
  "source": {"g2": 0.0, "eta": 1.0, "overlaps": {"ab": 1, "ac": 1, "bd": 1, "cd": 1}},
  "chip": {"reflectivities": [0.5, 0.5, 0.5, 0.5]},
  "simulate": {"settings": ["Z", "Z", "Z", "Z"]},
  "phase_scan": {"points": 11},
  "bell_sweep": {"scales": [1.0, 0.5, 0.0], "exact": true},
  "qss": {"rounds": 2000}
})";

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ghzlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = dir_ / "ideal.json";
    io::write_text(config_, kIdealConfig);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& command, const fs::path& out, std::optional<fs::path> config = std::nullopt,
          std::optional<int> threads = std::nullopt) {
    cli::Options o;
    o.command = command;
    o.config = config ? config : std::optional<fs::path>(config_);
    o.out_dir = out;
    o.threads = threads;
    out_.str("");
    err_.str("");
    return cli::run(o, out_, err_);
  }

  fs::path dir_;
  fs::path config_;
  std::ostringstream out_, err_;
};

} // namespace

TEST_F(CliTest, SimulateIdealZ) {
  ASSERT_EQ(run("simulate", dir_ / "sim"), cli::kExitOk) << err_.str();
  const auto csv = io::read_text(dir_ / "sim" / "simulate.csv");
  EXPECT_NE(csv.find("0101,0.5,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("1010,0.5,"), std::string::npos) << csv;
  const auto manifest = json::parse(io::read_text(dir_ / "sim" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "simulate");
  EXPECT_TRUE(manifest.contains("created_utc"));
  EXPECT_EQ(manifest["files"].size(), 3u);
}

TEST_F(CliTest, ResultsAreByteIdenticalAcrossRunsAndThreads) {
  for (const std::string cmd : {"simulate", "bell", "qss", "witness"}) {
    ASSERT_EQ(run(cmd, dir_ / "a", std::nullopt, 1), cli::kExitOk) << err_.str();
    ASSERT_EQ(run(cmd, dir_ / "b", std::nullopt, 3), cli::kExitOk) << err_.str();
    for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
      const auto name = entry.path().filename();
      if (name == "manifest.json") continue;
      EXPECT_EQ(io::read_text(entry.path()), io::read_text(dir_ / "b" / name)) << cmd << " " << name;
    }
  }
}

TEST_F(CliTest, EveryCommandRuns) {
  for (const auto& cmd : cli::commands()) {
    if (cmd == "tomography" || cmd == "ablation") continue; // covered by the acceptance run
    EXPECT_EQ(run(cmd, dir_ / cmd), cli::kExitOk) << cmd << ": " << err_.str();
    EXPECT_TRUE(fs::exists(dir_ / cmd / "manifest.json")) << cmd;
  }
}

TEST_F(CliTest, RateReportsDiscrepancy) {
  ASSERT_EQ(run("rate", dir_ / "rate"), cli::kExitOk);
  const auto j = json::parse(io::read_text(dir_ / "rate" / "rate.json"));
  EXPECT_NEAR(j["rate_hz"].get<double>(), 14.0, 0.1);
  EXPECT_EQ(j["observed_rate_hz"].get<double>(), 0.5);
  EXPECT_NE(out_.str().find("0.5 Hz"), std::string::npos);
}

TEST_F(CliTest, ConfigInitRoundTrips) {
  cli::Options o;
  o.command = "config-init";
  o.out_dir = dir_ / "init";
  std::ostringstream out, err;
  ASSERT_EQ(cli::run(o, out, err), cli::kExitOk);
  ASSERT_EQ(run("rate", dir_ / "rate2", dir_ / "init" / "ghzlab.json"), cli::kExitOk) << err_.str();
}

TEST_F(CliTest, ConfigErrorsExitWithTwo) {
  io::write_text(dir_ / "bad.json", R"({"source": {"g2": 0.9}})");
  EXPECT_EQ(run("simulate", dir_ / "bad", dir_ / "bad.json"), cli::kExitConfig);
  EXPECT_NE(err_.str().find("source.g2"), std::string::npos);
  io::write_text(dir_ / "typo.json", R"({"shots": 3})");
  EXPECT_EQ(run("simulate", dir_ / "bad", dir_ / "typo.json"), cli::kExitConfig);
  EXPECT_EQ(run("no-such-command", dir_ / "bad"), cli::kExitConfig);
  EXPECT_EQ(run("simulate", dir_ / "bad", dir_ / "missing.json"), cli::kExitConfig);
}

TEST_F(CliTest, ThreadVariableIsValidated) {
  ::setenv(cli::kThreadsVariable, "zero", 1);
  EXPECT_EQ(run("rate", dir_ / "t"), cli::kExitConfig);
  ::setenv(cli::kThreadsVariable, "2", 1);
  EXPECT_EQ(run("rate", dir_ / "t"), cli::kExitOk);
  const auto manifest = json::parse(io::read_text(dir_ / "t" / "manifest.json"));
  EXPECT_EQ(manifest["threads"], 2);
  ::unsetenv(cli::kThreadsVariable);
}

TEST_F(CliTest, NumericalFailureExitsWithThree) {
  // Fully distinguishable photons leave no phase dependence to fit.
  io::write_text(dir_ / "flat.json",
                 R"({"source": {"distinguishability_scale": [0, 0, 0, 0]}, "phase_scan": {"exact": true}})");
  EXPECT_EQ(run("phase-scan", dir_ / "flat", dir_ / "flat.json"), cli::kExitNumerical) << err_.str();
}

TEST_F(CliTest, BellSweepDecreases) {
  ASSERT_EQ(run("bell-sweep", dir_ / "sweep"), cli::kExitOk) << err_.str();
  const auto j = json::parse(io::read_text(dir_ / "sweep" / "bell_sweep.json"));
  const auto& pts = j["points"];
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_NEAR(pts[0]["bell"].get<double>(), 6 * std::sqrt(2.0), 1e-9);
  EXPECT_GT(pts[0]["bell"].get<double>(), pts[1]["bell"].get<double>());
  EXPECT_GT(pts[1]["bell"].get<double>(), pts[2]["bell"].get<double>());
  EXPECT_TRUE(fs::exists(dir_ / "sweep" / "bell_sweep.dat"));
}
