#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string err;
};

Result run(const fs::path& dir, const std::string& args, const std::string& env = "") {
  auto err_path = dir / "stderr.txt";
  std::string cmd = "cd '" + dir.string() + "' && env " + env + " '" PUBFORGE_CLI "' " + args + " 2> '" + err_path.string() + "' > /dev/null";
  int status = std::system(cmd.c_str());
  std::ifstream in(err_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

// A fresh directory holding the fixture config and corpus.
fs::path workdir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("pubforge_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy_file(PUBFORGE_TEST_DATA "/fixture.conf", dir / "fixture.conf");
  fs::copy_file(PUBFORGE_TEST_DATA "/fixture.xml", dir / "fixture.xml");
  return dir;
}

std::map<std::string, std::string> outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto name = e.path().filename().string();
    if (name == "stderr.txt") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[name] = ss.str();
  }
  return out;
}

void pipeline(const fs::path& dir) {
  for (const char* cmd : {"ingest", "fit", "predict", "evaluate"}) {
    auto r = run(dir, std::string(cmd) + " --config fixture.conf --threads 2");
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
  }
}

}  // namespace

TEST(Cli, PipelineIsByteIdentical) {
  auto a = workdir("a"), b = workdir("b");
  pipeline(a);
  pipeline(b);
  auto oa = outputs(a), ob = outputs(b);
  EXPECT_TRUE(oa.count("manifest_evaluate.csv"));
  EXPECT_TRUE(oa.count("fig9_acf.csv"));
  ASSERT_EQ(oa.size(), ob.size());
  for (const auto& [name, text] : oa) EXPECT_EQ(text, ob.at(name)) << name;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, SeedChangesForecast) {
  auto a = workdir("seed");
  pipeline(a);
  auto before = outputs(a).at("ensemble_replicates.csv");
  ASSERT_EQ(run(a, "predict --config fixture.conf --seed 43").code, 0);
  EXPECT_NE(outputs(a).at("ensemble_replicates.csv"), before);
  fs::remove_all(a);
}

TEST(Cli, WindowOrderIsValidationError) {
  auto dir = workdir("order");
  auto r = run(dir, "fit --config fixture.conf --set test_start=2012 --set test_end=2005");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("test_start < test_end"), std::string::npos) << r.err;
  fs::remove_all(dir);
}

TEST(Cli, EnvironmentOverridesFile) {
  auto dir = workdir("env");
  EXPECT_EQ(run(dir, "").code, 1);
  EXPECT_EQ(run(dir, "ingest --config fixture.conf --set bogus_key=1").code, 1);
  ASSERT_EQ(run(dir, "ingest --config fixture.conf").code, 0);
  auto r = run(dir, "fit --config fixture.conf", "PUBFORGE_TEST_END=2000");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("test_end=2000"), std::string::npos) << r.err;
  // the command line wins over the environment
  r = run(dir, "fit --config fixture.conf --set test_end=2012", "PUBFORGE_TEST_END=2000");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(run(dir, "fit --config fixture.conf", "PUBFORGE_NOT_A_KEY=1").code, 1);
  fs::remove_all(dir);
}

TEST(Cli, MissingInputIsIoError) {
  auto dir = workdir("io");
  auto r = run(dir, "ingest --config fixture.conf --set corpus=missing.xml");
  EXPECT_EQ(r.code, 2) << r.err;
  r = run(dir, "fit --config fixture.conf");
  EXPECT_EQ(r.code, 2) << r.err;
  r = run(dir, "ingest --config nowhere.conf");
  EXPECT_EQ(r.code, 2) << r.err;
  fs::remove_all(dir);
}

TEST(Cli, SynthRoundTripsThroughIngest) {
  auto dir = workdir("synth");
  {
    std::ofstream spec(dir / "gen.conf");
    spec << "alpha = -0.5, -0.2\nbeta = 0, 0.01\nhistory_start = 1985\ntrain_start = 1995\n"
            "forecast_end = 2012\nn_authors = 40\nseed = 3\nentry_years = 1985:1995\n";
  }
  ASSERT_EQ(run(dir, "synth --config gen.conf --out syn").code, 0);
  auto first = outputs(dir / "syn").at("corpus.csv");
  ASSERT_EQ(run(dir, "synth --config gen.conf --out syn").code, 0);
  EXPECT_EQ(outputs(dir / "syn").at("corpus.csv"), first);
  auto r = run(dir, "ingest --config fixture.conf --set corpus=syn/corpus.csv --out ing");
  EXPECT_EQ(r.code, 0) << r.err;
  std::ifstream hist(dir / "ing" / "histories.csv");
  EXPECT_TRUE(hist.good());
  fs::remove_all(dir);
}
