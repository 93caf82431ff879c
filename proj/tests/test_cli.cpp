#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("rvmdh_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  Outcome run(const std::string& args) const {
    const auto err = path("stderr.txt");
    const std::string cmd = std::string("\"") + RVMDH_CLI_PATH + "\" " + args + " >\"" + path("stdout.txt").string() +
                            "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
  }

  void write_sim_config(const std::string& name, int days, bool with_seed = true) const {
    std::ostringstream os;
    if (with_seed) os << "seed = 21\n";
    os << "n_days = " << days << "\n"
       << "vol_model = constant\n"
       << "sigma = 0.00144338\n"
       << "noise_std = 0.0003\n";
    write(name, os.str());
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesTicksTruthAndManifest) {
  write_sim_config("sim.cfg", 3);
  const auto r = run("simulate --config " + path("sim.cfg").string() + " --out " + path("out").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("out/ticks.csv")));
  EXPECT_TRUE(fs::exists(path("out/true_iv.csv")));
  const auto manifest = nlohmann::json::parse(slurp(path("out/manifest.json")));
  EXPECT_EQ(manifest["command"], "simulate");
  EXPECT_EQ(manifest["seed"], 21);
  EXPECT_EQ(manifest["config_paths"][0], path("sim.cfg").string());
  EXPECT_EQ(manifest["outputs"].size(), 2u);
  EXPECT_TRUE(manifest.contains("tool_version"));
  EXPECT_TRUE(manifest.contains("timestamp"));
}

TEST_F(CliTest, MissingSeedIsAConfigError) {
  write_sim_config("sim.cfg", 3, false);
  const auto r = run("simulate --config " + path("sim.cfg").string() + " --out " + path("out").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("seed"), std::string::npos) << r.err;
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRunsAndThreads) {
  write_sim_config("sim.cfg", 6);
  ASSERT_EQ(run("simulate --config " + path("sim.cfg").string() + " --out " + path("a").string()).code, 0);
  ASSERT_EQ(run("simulate --config " + path("sim.cfg").string() + " --threads 3 --out " + path("b").string()).code, 0);
  EXPECT_EQ(slurp(path("a/ticks.csv")), slurp(path("b/ticks.csv")));
  EXPECT_EQ(slurp(path("a/true_iv.csv")), slurp(path("b/true_iv.csv")));
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  write_sim_config("sim.cfg", 2);
  ASSERT_EQ(run("simulate --config " + path("sim.cfg").string() + " --out " + path("a").string()).code, 0);
  ASSERT_EQ(run("simulate --config " + path("sim.cfg").string() + " --seed 22 --out " + path("b").string()).code, 0);
  EXPECT_NE(slurp(path("a/ticks.csv")), slurp(path("b/ticks.csv")));
  EXPECT_EQ(nlohmann::json::parse(slurp(path("b/manifest.json")))["seed"], 22);
}

TEST_F(CliTest, EnvironmentSuppliesConfigPathButFlagWins) {
  write_sim_config("sim.cfg", 2);
  write_sim_config("bad.cfg", 2, false);
  auto r = run("simulate --out " + path("a").string());
  EXPECT_EQ(r.code, 2);  // neither flag nor variable
  setenv("RVMDH_CONFIG", path("sim.cfg").string().c_str(), 1);
  r = run("simulate --out " + path("a").string());
  EXPECT_EQ(r.code, 0) << r.err;
  setenv("RVMDH_CONFIG", path("sim.cfg").string().c_str(), 1);
  r = run("simulate --config " + path("bad.cfg").string() + " --out " + path("b").string());
  EXPECT_EQ(r.code, 2);
  unsetenv("RVMDH_CONFIG");
}

TEST_F(CliTest, MissingConfigFileIsIoError) {
  const auto r = run("simulate --config " + path("absent.cfg").string() + " --out " + path("out").string());
  EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, UnknownSubcommandOrFlagIsUsageError) {
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("simulate --bogus").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST_F(CliTest, PipelineOnSimulatedData) {
  write_sim_config("sim.cfg", 60);
  ASSERT_EQ(run("simulate --config " + path("sim.cfg").string() + " --out " + path("sim").string()).code, 0);
  const auto r = run("pipeline --ticks " + path("sim/ticks.csv").string() + " --max-lag 20 --out " +
                     path("out").string());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const std::string s : {"MS", "AS"}) {
    for (const auto& f : {"rv_" + s + ".csv", "signature_" + s + ".csv", "fit_" + s + ".json",
                          "standardized_" + s + ".csv", "mdh_report_" + s + ".json", "acf_abs_returns_" + s + ".csv",
                          "acf_abs_standardized_" + s + ".csv"})
      EXPECT_TRUE(fs::exists(path("out") / f)) << f;
    const auto report = nlohmann::json::parse(slurp(path("out/mdh_report_" + s + ".json")));
    EXPECT_EQ(report["session"], s);
    EXPECT_EQ(report["n"], 60);
    EXPECT_NEAR(report["bias_corrected_std"].get<double>(), 1.0, 0.3);
  }
  EXPECT_TRUE(fs::exists(path("out/manifest.json")));
  EXPECT_TRUE(fs::exists(path("out/mdh_table.txt")));
}

TEST_F(CliTest, StepwiseCommandsMatchPipeline) {
  write_sim_config("sim.cfg", 40);
  ASSERT_EQ(run("simulate --config " + path("sim.cfg").string() + " --out " + path("sim").string()).code, 0);
  const auto ticks = path("sim/ticks.csv").string();
  ASSERT_EQ(run("pipeline --ticks " + ticks + " --session MS --max-lag 10 --out " + path("p").string()).code, 0);
  ASSERT_EQ(run("rv --ticks " + ticks + " --session MS --delta 5 --out " + path("rv").string()).code, 0);
  EXPECT_EQ(slurp(path("rv/rv_MS_d5.csv")), slurp(path("p/rv_MS.csv")));
  ASSERT_EQ(run("signature --ticks " + ticks + " --session MS --out " + path("sig").string()).code, 0);
  EXPECT_EQ(slurp(path("sig/signature_MS.csv")), slurp(path("p/signature_MS.csv")));
  ASSERT_EQ(run("standardize --ticks " + ticks + " --session MS --out " + path("z").string()).code, 0);
  EXPECT_EQ(slurp(path("z/standardized_MS.csv")), slurp(path("p/standardized_MS.csv")));
  // The fit from the rounded signature CSV agrees with the in-memory fit to CSV precision.
  ASSERT_EQ(run("fit --signature " + path("sig/signature_MS.csv").string() + " --session MS --out " +
                path("fit").string()).code, 0);
  const auto a = nlohmann::json::parse(slurp(path("fit/fit_MS.json")));
  const auto b = nlohmann::json::parse(slurp(path("p/fit_MS.json")));
  EXPECT_NEAR(a["a0"].get<double>(), b["a0"].get<double>(), 1e-5 * b["a0"].get<double>());
  ASSERT_EQ(run("normtest --series " + path("z/standardized_MS.csv").string() + " --out " + path("nt").string()).code,
            0);
  const auto nt = nlohmann::json::parse(slurp(path("nt/normtest.json")));
  EXPECT_EQ(nt["n"], 40);
  ASSERT_EQ(run("acf --series " + path("z/standardized_MS.csv").string() + " --abs --max-lag 10 --out " +
                path("acf").string()).code, 0);
  // Recomputed from the 6-digit standardized CSV, so agreement is to CSV precision.
  std::istringstream got(slurp(path("acf/acf.csv")));
  std::istringstream want(slurp(path("p/acf_abs_standardized_MS.csv")));
  std::string g, w;
  std::getline(got, g);
  std::getline(want, w);
  int rows = 0;
  while (std::getline(got, g) && std::getline(want, w)) {
    const auto gv = std::stod(g.substr(g.find(',') + 1));
    const auto wv = std::stod(w.substr(w.find(',') + 1));
    EXPECT_NEAR(gv, wv, 1e-5) << g << " vs " << w;
    ++rows;
  }
  EXPECT_EQ(rows, 11);
}

TEST_F(CliTest, NonDivisorDeltaIsConfigError) {
  write("ticks.csv", "date,time,price\n2024-01-04,09:00:00,100\n2024-01-04,11:00:00,101\n");
  const auto r = run("pipeline --ticks " + path("ticks.csv").string() + " --delta 7 --out " + path("out").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("7"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("out")));
}

TEST_F(CliTest, ConstantPriceIsDegenerate) {
  std::ostringstream os;
  os << "date,time,price\n";
  for (int d = 4; d <= 8; ++d)
    for (int m = 0; m <= 120; ++m) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "2024-03-%02d,%02d:%02d:00,100\n", d, 9 + m / 60, m % 60);
      os << buf;
    }
  write("ticks.csv", os.str());
  const auto r = run("pipeline --ticks " + path("ticks.csv").string() + " --session MS --out " + path("out").string());
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("MS"), std::string::npos) << r.err;
}

TEST_F(CliTest, SessionWithoutUsableDaysIsListed) {
  // Only morning data: the afternoon session has no usable days.
  std::ostringstream os;
  os << "date,time,price\n";
  for (int m = 0; m <= 120; ++m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "2024-03-04,%02d:%02d:00,%d\n", 9 + m / 60, m % 60, 100 + m % 3);
    os << buf;
  }
  write("ticks.csv", os.str());
  const auto r = run("pipeline --ticks " + path("ticks.csv").string() + " --session AS --out " + path("out").string());
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("AS"), std::string::npos) << r.err;
}

TEST_F(CliTest, MalformedTicksAreParseErrors) {
  write("ticks.csv", "date,time,price\n2024-01-04,09:00:00,abc\n");
  const auto r = run("rv --ticks " + path("ticks.csv").string() + " --session MS --out " + path("out").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(":2"), std::string::npos) << r.err;
}

TEST_F(CliTest, SessionSpecFromEnvironment) {
  write("spec.cfg", "session = AM,09:00,10:00\n");
  write("ticks.csv", "date,time,price\n2024-01-04,09:00:00,100\n2024-01-04,09:30:00,101\n2024-01-04,10:00:00,102\n");
  setenv("RVMDH_SESSION_SPEC", path("spec.cfg").string().c_str(), 1);
  const auto r = run("rv --ticks " + path("ticks.csv").string() + " --session AM --delta 30 --out " +
                     path("out").string());
  unsetenv("RVMDH_SESSION_SPEC");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("out/rv_AM_d30.csv")));
}
