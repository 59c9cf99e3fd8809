#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "pubforge/config.hpp"

using namespace pubforge;

TEST(KeyValues, CommentsAndWhitespace) {
  std::istringstream in("# header\n  seed = 7   # trailing\n\nfit_mode=ols\r\n");
  auto kv = parse_key_values(in);
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"seed", "7"}));
  EXPECT_EQ(kv[1].second, "ols");
}

TEST(KeyValues, Errors) {
  std::istringstream dup("seed = 1\nseed = 2\n");
  EXPECT_THROW(parse_key_values(dup), ConfigError);
  std::istringstream noeq("seed 1\n");
  EXPECT_THROW(parse_key_values(noeq), ConfigError);
  std::istringstream nokey(" = 1\n");
  EXPECT_THROW(parse_key_values(nokey), ConfigError);
}

TEST(RunConfigTest, UnknownKeyAndBadValues) {
  RunConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "sede", "1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "seed", "-1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "threads", "0"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "fit_mode", "probit"), ConfigError);
  apply_setting(cfg, "max_predict_cohort", "auto");
  EXPECT_EQ(cfg.max_predict_cohort, 0);
  apply_setting(cfg, "delimiter", "tab");
  EXPECT_EQ(cfg.delimiter, '\t');
}

TEST(RunConfigTest, EnvOverrides) {
  auto kv = env_overrides({"HOME=/root", "PUBFORGE_SEED=5", "PUBFORGE_N_BOOT=300", "PUBFORGEX=1"});
  ASSERT_EQ(kv.size(), 2u);
  RunConfig cfg;
  apply_settings(cfg, kv);
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.n_boot, 300);
  EXPECT_THROW(apply_settings(cfg, env_overrides({"PUBFORGE_BOGUS=1"})), ConfigError);
}

TEST(RunConfigTest, FixtureFileResolvesPaths) {
  auto cfg = load_config(PUBFORGE_TEST_DATA "/fixture.conf");
  ASSERT_EQ(cfg.corpus.size(), 1u);
  EXPECT_EQ(std::filesystem::path(cfg.corpus[0]),
            std::filesystem::path(PUBFORGE_TEST_DATA "/fixture.xml").lexically_normal());
  EXPECT_EQ(cfg.L(), 9);
  EXPECT_EQ(cfg.J(), 17);
  EXPECT_EQ(cfg.X(), 7);
  EXPECT_EQ(cfg.Y(), 17);
  EXPECT_NO_THROW(validate(cfg, ConfigNeeds::windows));
}

TEST(RunConfigTest, WindowOrder) {
  auto cfg = load_config(PUBFORGE_TEST_DATA "/fixture.conf");
  cfg.test_start = 2012;
  cfg.test_end = 2005;
  try {
    validate(cfg, ConfigNeeds::windows);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("test_start < test_end"), std::string::npos) << msg;
    EXPECT_NE(msg.find("test_start=2012"), std::string::npos) << msg;
  }
  cfg = load_config(PUBFORGE_TEST_DATA "/fixture.conf");
  cfg.forecast_end.reset();
  EXPECT_THROW(validate(cfg, ConfigNeeds::windows), ConfigError);
  EXPECT_NO_THROW(validate(cfg, ConfigNeeds::ingest));
  cfg = load_config(PUBFORGE_TEST_DATA "/fixture.conf");
  cfg.n_boot = 199;
  EXPECT_THROW(validate(cfg, ConfigNeeds::ingest), ConfigError);
}

TEST(RunConfigTest, ShippedExperimentConfigsValidate) {
  for (const char* name : {"/paper-experiment-1.conf", "/paper-experiment-2.conf"}) {
    auto cfg = load_config(std::string(PUBFORGE_CONFIGS) + name);
    EXPECT_NO_THROW(validate(cfg, ConfigNeeds::windows)) << name;
    EXPECT_EQ(cfg.max_cohort, 40);
  }
}
