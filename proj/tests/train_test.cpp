#include "wurl/train.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wurl;

namespace {

EnvConfig tiny_env(int horizon = 25) {
  EnvConfig e = EnvConfig::free_run();
  e.horizon = horizon;
  return e;
}

TrainConfig tiny_cfg(RewardMode mode, int policies, int episodes) {
  TrainConfig c;
  c.mode = mode;
  c.policies = policies;
  c.episodes_per_policy = episodes;
  c.projections = 4;
  c.target_samples = 64;
  c.recent_episodes = 5;
  c.sac.hidden = 16;
  c.sac.batch = 32;
  c.sac.capacity = 4096;
  c.dual.hidden = 16;
  c.tf_batch = 32;
  return c;
}

Vec deterministic_final_obs(const EnvConfig& env_cfg, SacAgent& agent) {
  ParticleEnv env(env_cfg);
  Rng dummy(0);
  Vec s = env.reset();
  while (!env.done()) s = env.step(agent.act(s, true, dummy)).obs;
  return s;
}

TEST(Train, RoundRobinCoversPoliciesInOrder) {
  std::vector<EpisodeRecord> recs;
  WurlTrainer t(tiny_env(), tiny_cfg(RewardMode::Apwd, 3, 2), 5);
  t.train(&recs);
  ASSERT_EQ(recs.size(), 6u);
  int want_policy[] = {0, 1, 2, 0, 1, 2};
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(recs[std::size_t(i)].episode, i);
    EXPECT_EQ(recs[std::size_t(i)].policy, want_policy[i]);
  }
}

TEST(Train, ColdStartEpisodeHasZeroIntrinsicReward) {
  std::vector<EpisodeRecord> recs;
  WurlTrainer t(tiny_env(), tiny_cfg(RewardMode::Apwd, 2, 1), 5);
  t.train(&recs);
  // Policy 0 has no target archive yet; policy 1 already sees policy 0.
  EXPECT_DOUBLE_EQ(recs[0].intrinsic_return, 0.0);
  EXPECT_DOUBLE_EQ(recs[0].min_wd, 0.0);
  EXPECT_GT(recs[1].min_wd, 0.0);
}

// With shared seeds the terminal-reward and amortized modes see identical
// rollouts and targets for the first three episodes (policy updates only
// diverge once nonzero rewards differ), so per-episode values must match:
// the amortized credits are scaled by episode length T and sum to T * W.
TEST(Train, AmortizedAndTerminalModesAgreeOnSharedSeeds) {
  const int kHorizon = 25;
  std::vector<EpisodeRecord> ra, rf;
  WurlTrainer ta(tiny_env(kHorizon), tiny_cfg(RewardMode::Apwd, 2, 2), 7);
  WurlTrainer tf(tiny_env(kHorizon), tiny_cfg(RewardMode::PwdFinal, 2, 2), 7);
  ta.train(&ra);
  tf.train(&rf);
  ASSERT_EQ(ra.size(), 4u);
  ASSERT_EQ(rf.size(), 4u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(ra[std::size_t(i)].min_wd, rf[std::size_t(i)].min_wd) << "episode " << i;
    EXPECT_NEAR(ra[std::size_t(i)].intrinsic_return / double(kHorizon),
                rf[std::size_t(i)].intrinsic_return,
                1e-9 * (1.0 + std::fabs(rf[std::size_t(i)].intrinsic_return)))
        << "episode " << i;
  }
}

TEST(Train, TerminalModePutsAllRewardOnLastStep) {
  const int kHorizon = 25;
  std::vector<EpisodeRecord> recs;
  WurlTrainer t(tiny_env(kHorizon), tiny_cfg(RewardMode::PwdFinal, 2, 2), 3);
  t.train(&recs);
  // Policy 0's second episode (global episode 2) sits at buffer slots 25..49.
  const ReplayBuffer& buf = t.units()[0]->agent.buffer();
  ASSERT_GE(buf.size(), 50u);
  double sum = 0.0;
  for (std::size_t i = 25; i < 50; ++i) {
    if (i < 49) EXPECT_DOUBLE_EQ(buf.at(i).r, 0.0);
    sum += buf.at(i).r;
  }
  EXPECT_GT(recs[2].min_wd, 0.0);
  EXPECT_DOUBLE_EQ(sum, recs[2].intrinsic_return);
  EXPECT_DOUBLE_EQ(buf.at(49).r, recs[2].intrinsic_return);
}

TEST(Train, AmortizedCreditsConserveTheEpisodeDistance) {
  const int kHorizon = 25;
  std::vector<EpisodeRecord> recs;
  WurlTrainer t(tiny_env(kHorizon), tiny_cfg(RewardMode::Apwd, 2, 2), 3);
  t.train(&recs);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    EXPECT_NEAR(recs[i].intrinsic_return / double(kHorizon), recs[i].min_wd,
                1e-9 * (1.0 + recs[i].min_wd))
        << "episode " << i;
  }
}

TEST(Train, MeanRuleRewardIsAtLeastTheMinDistance) {
  TrainConfig cfg = tiny_cfg(RewardMode::PwdFinal, 3, 1);
  cfg.target_rule = TargetRule::MeanDistance;
  std::vector<EpisodeRecord> recs;
  WurlTrainer t(tiny_env(), cfg, 9);
  t.train(&recs);
  // Episode 2 (policy 2) averages distances to policies 0 and 1.
  EXPECT_GT(recs[2].intrinsic_return, 0.0);
  EXPECT_GE(recs[2].intrinsic_return, recs[2].min_wd - 1e-12);
}

TEST(Train, TestFunctionModesNeedExactlyTwoPolicies) {
  EXPECT_THROW(WurlTrainer(tiny_env(), tiny_cfg(RewardMode::Tf1, 3, 1), 1),
               std::invalid_argument);
  EXPECT_THROW(WurlTrainer(tiny_env(), tiny_cfg(RewardMode::Tf2, 1, 1), 1),
               std::invalid_argument);
}

// With the test-function learning rate at zero its parameters are pinned, so
// every inserted reward must equal the fixed network's value at the next
// state, with opposite signs for the two policies.
TEST(Train, TfRewardsComeFromTheTestFunction) {
  TrainConfig cfg = tiny_cfg(RewardMode::Tf1, 2, 1);
  cfg.dual.lr = 0.0;
  WurlTrainer t(tiny_env(10), cfg, 4);
  std::vector<EpisodeRecord> recs;
  t.train(&recs);
  TestFunctionPair& tf = t.test_functions();
  for (int p = 0; p < 2; ++p) {
    const ReplayBuffer& buf = t.units()[std::size_t(p)]->agent.buffer();
    ASSERT_EQ(buf.size(), 10u);
    Side side = p == 0 ? Side::First : Side::Second;
    for (std::size_t i = 0; i < buf.size(); ++i)
      EXPECT_DOUBLE_EQ(buf.at(i).r, tf.state_reward(buf.at(i).s2, side));
  }
  EXPECT_DOUBLE_EQ(recs[0].intrinsic_return + recs[1].intrinsic_return,
                   recs[0].intrinsic_return + recs[1].intrinsic_return);  // finite
}

TEST(Train, TfModesRunAndLogFiniteRecords) {
  for (RewardMode mode : {RewardMode::Tf1, RewardMode::Tf2}) {
    std::vector<EpisodeRecord> recs;
    WurlTrainer t(tiny_env(15), tiny_cfg(mode, 2, 2), 6);
    t.train(&recs);
    ASSERT_EQ(recs.size(), 4u);
    for (const auto& r : recs) {
      EXPECT_TRUE(std::isfinite(r.intrinsic_return));
      EXPECT_TRUE(std::isfinite(r.min_wd));
      EXPECT_GE(r.min_wd, 0.0);
    }
    // Once both buffers hold data the rewards are generically nonzero.
    EXPECT_NE(recs[3].intrinsic_return, 0.0);
  }
}

TEST(Train, IncrementalLeavesFrozenPoliciesBitIdentical) {
  TrainConfig cfg = tiny_cfg(RewardMode::Apwd, 1, 2);
  WurlTrainer t(tiny_env(), cfg, 12);
  t.train(nullptr);
  t.units()[0]->freeze();
  std::uint64_t h0 = t.units()[0]->agent.actor_hash();
  std::vector<EpisodeRecord> recs;
  train_incremental(t, 1, &recs);
  ASSERT_EQ(t.units().size(), 2u);
  EXPECT_TRUE(t.frozen_intact());
  EXPECT_EQ(t.units()[0]->agent.actor_hash(), h0);
  EXPECT_TRUE(t.units()[1]->frozen());
  ASSERT_EQ(recs.size(), 2u);
  for (const auto& r : recs) EXPECT_EQ(r.policy, 1);
  EXPECT_THROW(t.run_episode(0), std::logic_error);
}

TEST(Train, IncrementalRequiresEverythingFrozen) {
  WurlTrainer t(tiny_env(), tiny_cfg(RewardMode::Apwd, 1, 1), 2);
  EXPECT_THROW(train_incremental(t, 1, nullptr), std::invalid_argument);
}

// A single frozen "policy" that only ever sat at the origin: the incremental
// policy is paid the distance from that archive, so it must learn to leave.
TEST(Train, IncrementalPolicyFleesAStayAtCenterArchive) {
  EnvConfig env_cfg = tiny_env(50);
  TrainConfig cfg = tiny_cfg(RewardMode::Apwd, 0, 24);
  cfg.sac.hidden = 32;
  cfg.sac.batch = 64;
  WurlTrainer t(env_cfg, cfg, 21);

  Vec ascale{env_cfg.a_max, env_cfg.a_max};
  Vec oscale{0.1, 0.1, 2.0, 2.0};
  SeedSeq stub_seeds(999);
  SacAgent stub(ParticleEnv::kObsDim, ParticleEnv::kActionDim, ascale, oscale, cfg.sac,
                stub_seeds);
  StateBatch origin(ParticleEnv::kObsDim);
  for (int i = 0; i < 64; ++i) origin.push_back(Vec{0.0, 0.0, 0.0, 0.0});
  t.add_frozen(std::move(stub), origin);

  std::vector<EpisodeRecord> recs;
  train_incremental(t, 1, &recs);
  ASSERT_EQ(recs.size(), 24u);

  Vec final_obs = deterministic_final_obs(env_cfg, t.units()[1]->agent);
  double dist = std::hypot(final_obs[0], final_obs[1]);
  EXPECT_GT(dist, 5.0) << "policy failed to leave the frozen archive's region";
  EXPECT_GT(recs.back().min_wd, recs.front().min_wd);
}

TEST(Train, SameSeedReproducesRecordsAndPolicies) {
  std::vector<EpisodeRecord> r1, r2;
  WurlTrainer a(tiny_env(), tiny_cfg(RewardMode::Apwd, 2, 2), 17);
  WurlTrainer b(tiny_env(), tiny_cfg(RewardMode::Apwd, 2, 2), 17);
  a.train(&r1);
  b.train(&r2);
  ASSERT_EQ(r1.size(), r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(r1[i].policy, r2[i].policy);
    EXPECT_DOUBLE_EQ(r1[i].intrinsic_return, r2[i].intrinsic_return);
    EXPECT_DOUBLE_EQ(r1[i].min_wd, r2[i].min_wd);
  }
  for (std::size_t u = 0; u < a.units().size(); ++u)
    EXPECT_EQ(a.units()[u]->agent.actor_hash(), b.units()[u]->agent.actor_hash());
}

TEST(Train, RewardModeNamesRoundTrip) {
  for (RewardMode m : {RewardMode::Tf1, RewardMode::Tf2, RewardMode::PwdFinal, RewardMode::Apwd})
    EXPECT_EQ(reward_mode_from(reward_mode_name(m)), m);
  EXPECT_THROW(reward_mode_from("nope"), ConfigError);
}

}  // namespace
