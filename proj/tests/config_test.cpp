#include "wurl/config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "wurl/io.hpp"
#include "wurl/rng.hpp"

using namespace wurl;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(Config, ParsesCommentsBlanksAndSpacing) {
  Config c = Config::parse_text(
      "# top comment\n"
      "\n"
      "seed = 42\n"
      "  train.policies=6   # trailing comment\n"
      "env.name = tree_maze\n");
  EXPECT_EQ(c.get_u64("seed", 0), 42u);
  EXPECT_EQ(c.get_int("train.policies", 0), 6);
  EXPECT_EQ(c.get("env.name"), "tree_maze");
  EXPECT_EQ(c.get("missing", "dflt"), "dflt");
  EXPECT_FALSE(c.has("missing"));
}

TEST(Config, RepeatedKeysAccumulateAndScalarReadsLast) {
  Config c = Config::parse_text(
      "env.goal=6,6\n"
      "env.goal=-6,6\n"
      "env.goal=0,-7\n"
      "x=1\n"
      "x=2\n");
  ASSERT_EQ(c.get_all("env.goal").size(), 3u);
  EXPECT_EQ(c.get_all("env.goal")[1], "-6,6");
  EXPECT_EQ(c.get_int("x", 0), 2);
}

TEST(Config, TypedGettersValidate) {
  Config c = Config::parse_text("a=1.5\nb=oops\nf=true\ng=off\n");
  EXPECT_DOUBLE_EQ(c.get_double("a", 0.0), 1.5);
  EXPECT_DOUBLE_EQ(c.get_double("zz", 2.5), 2.5);
  EXPECT_THROW(c.get_double("b", 0.0), ConfigError);
  EXPECT_THROW(c.get_int("a", 0), ConfigError);  // "1.5" is not an integer
  EXPECT_TRUE(c.get_bool("f", false));
  EXPECT_FALSE(c.get_bool("g", true));
  EXPECT_THROW(c.get_bool("b", false), ConfigError);
}

TEST(Config, SpaceSeparatedPairsParseLikeEquals) {
  Config c = Config::parse_text(
      "train.policies 9\n"
      "est.separations 2 16 64\n"
      "env.name = free_run\n");
  EXPECT_EQ(c.get_int("train.policies", 0), 9);
  EXPECT_EQ(c.get("est.separations"), "2 16 64");
  EXPECT_EQ(c.get("env.name"), "free_run");
}

TEST(Config, MalformedLinesReportPosition) {
  try {
    Config::parse_text("ok=1\nbrokenline\n", "demo.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("demo.cfg:2"), std::string::npos);
  }
  EXPECT_THROW(Config::parse_text("=value\n"), ConfigError);
  EXPECT_THROW(Config::parse_text("two words=1\n"), ConfigError);
}

TEST(Config, DumpIsSortedAndRoundTrips) {
  Config c = Config::parse_text("b=2\na=1\nwall=0,0,1,0\nwall=1,0,1,1\n");
  std::string dump = c.dump();
  EXPECT_EQ(dump, "a=1\nb=2\nwall=0,0,1,0\nwall=1,0,1,1\n");
  Config c2 = Config::parse_text(dump);
  EXPECT_EQ(c2.dump(), dump);
}

TEST(Config, ParseDoublesHandlesSeparatorsAndCounts) {
  Vec v = Config::parse_doubles("6,6");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v[0], 6.0);
  Vec w = Config::parse_doubles("-1 -1  1\t3", 4);
  EXPECT_DOUBLE_EQ(w[3], 3.0);
  EXPECT_THROW(Config::parse_doubles("1,2", 3), ConfigError);
  EXPECT_THROW(Config::parse_doubles("1,x"), ConfigError);
}

TEST(Config, EnvOverridesReplaceValues) {
  ASSERT_EQ(setenv("WURL_TRAIN__POLICIES", "9", 1), 0);
  ASSERT_EQ(setenv("WURL_SEED", "77", 1), 0);
  ASSERT_EQ(setenv("WURL_TRAIN__EPISODES_PER_POLICY", "12", 1), 0);
  Config c = Config::parse_text("train.policies=2\nseed=1\n");
  auto applied = c.apply_env_overrides("WURL_");
  unsetenv("WURL_TRAIN__POLICIES");
  unsetenv("WURL_SEED");
  unsetenv("WURL_TRAIN__EPISODES_PER_POLICY");
  EXPECT_EQ(c.get_int("train.policies", 0), 9);
  EXPECT_EQ(c.get_u64("seed", 0), 77u);
  EXPECT_EQ(c.get_int("train.episodes_per_policy", 0), 12);
  bool saw = false;
  for (const auto& [k, v] : applied) saw = saw || (k == "train.policies" && v == "9");
  EXPECT_TRUE(saw);
}

TEST(Io, AtomicWriteLeavesNoTempFile) {
  std::string p = tmp_path("wurl_io_test_a.txt");
  write_file_atomic(p, "hello\n");
  EXPECT_EQ(read_file(p), "hello\n");
  write_file_atomic(p, "rewritten\n");
  EXPECT_EQ(read_file(p), "rewritten\n");
  EXPECT_FALSE(file_exists(p + ".tmp"));
  std::filesystem::remove(p);
  EXPECT_THROW(read_file(p), ConfigError);
}

TEST(Io, BatchSaveLoadIsBitExact) {
  Rng rng(5);
  StateBatch b(4);
  for (int i = 0; i < 50; ++i)
    b.push_back(Vec{std_normal(rng) * 1e-7, std_normal(rng) * 1e7, std_normal(rng),
                    1.0 / 3.0 * std_normal(rng)});
  std::string p = tmp_path("wurl_io_test_batch.txt");
  save_batch(p, b);
  StateBatch b2 = load_batch(p);
  ASSERT_EQ(b2.size(), b.size());
  ASSERT_EQ(b2.dim(), b.dim());
  EXPECT_EQ(hash_doubles(b.flat()), hash_doubles(b2.flat()));
  std::filesystem::remove(p);
}

TEST(Io, BatchLoadValidatesHeaderAndLength) {
  std::string p = tmp_path("wurl_io_test_bad.txt");
  write_file_atomic(p, "not_a_batch 3 4\n");
  EXPECT_THROW(load_batch(p), ConfigError);
  write_file_atomic(p, "statebatch 2 4\n1 2 3 4\n5 6 7\n");
  EXPECT_THROW(load_batch(p), ConfigError);
  std::filesystem::remove(p);
}

TEST(Io, TrajectoryExportHasHeaderAndOneRowPerStep) {
  EnvConfig cfg = EnvConfig::free_run();
  cfg.horizon = 12;
  ParticleEnv env(cfg);
  Rng rng(3);
  Trajectory t = rollout(env, [&](const Vec&) {
    return Vec{uniform_in(rng, -0.1, 0.1), uniform_in(rng, -0.1, 0.1)};
  });
  std::string p = tmp_path("wurl_io_test_traj.txt");
  save_trajectory(p, t);
  std::string text = read_file(p);
  EXPECT_EQ(text.rfind("trajectory 12 4 2\n", 0), 0u);
  int lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  EXPECT_EQ(lines, 13);
  std::filesystem::remove(p);
}

TEST(Io, MetricsLogAppends) {
  std::string p = tmp_path("wurl_io_test_metrics.log");
  std::filesystem::remove(p);
  {
    MetricsLog log(p);
    log.line("a 1");
    log.line("b 2");
  }
  {
    MetricsLog log(p);
    log.line("c 3");
  }
  EXPECT_EQ(read_file(p), "a 1\nb 2\nc 3\n");
  std::filesystem::remove(p);
}

}  // namespace
