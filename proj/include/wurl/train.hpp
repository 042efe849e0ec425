#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "wurl/env.hpp"
#include "wurl/ot_dual.hpp"
#include "wurl/ot_primal.hpp"
#include "wurl/sac.hpp"

namespace wurl {

enum class RewardMode { Tf1, Tf2, PwdFinal, Apwd };
enum class TargetRule { MinDistance, MeanDistance };

inline const char* reward_mode_name(RewardMode m) {
  switch (m) {
    case RewardMode::Tf1: return "tf1";
    case RewardMode::Tf2: return "tf2";
    case RewardMode::PwdFinal: return "pwd_final";
    case RewardMode::Apwd: return "apwd";
  }
  return "?";
}

inline RewardMode reward_mode_from(const std::string& s) {
  if (s == "tf1") return RewardMode::Tf1;
  if (s == "tf2") return RewardMode::Tf2;
  if (s == "pwd_final") return RewardMode::PwdFinal;
  if (s == "apwd") return RewardMode::Apwd;
  throw ConfigError("unknown reward mode '" + s + "'");
}

struct TrainConfig {
  RewardMode mode = RewardMode::Apwd;
  int policies = 2;
  int episodes_per_policy = 50;
  int projections = 16;      // K for training-time distance estimates
  int target_samples = 256;  // per-target subsample fed to the estimators
  int recent_episodes = 10;  // archive window
  bool scale_by_length = true;  // amortized credits times episode length
  TargetRule target_rule = TargetRule::MinDistance;
  bool random_policy_order = false;
  SacConfig sac;
  DualConfig dual;  // TF modes; form is overridden from mode
  int tf_batch = 128;
};

struct EpisodeRecord {
  int episode = 0;  // global index across the run
  int policy = 0;
  double intrinsic_return = 0.0;  // sum of rewards actually inserted
  double min_wd = 0.0;            // distance to the chosen target archive
  double task_return = 0.0;       // env rewards (zero in reward-free envs)
};

// One policy with its agent, exploration state and rolling state archive.
class PolicyUnit {
 public:
  PolicyUnit(SacAgent agent_in, Rng action_rng, Rng update_rng, int recent_cap)
      : agent(std::move(agent_in)),
        action_rng_(action_rng),
        update_rng_(update_rng),
        recent_cap_(recent_cap) {}

  SacAgent agent;

  bool frozen() const { return frozen_; }
  std::uint64_t frozen_hash() const { return frozen_hash_; }
  void freeze() {
    frozen_ = true;
    frozen_hash_ = agent.actor_hash();
  }
  bool frozen_intact() const { return !frozen_ || agent.actor_hash() == frozen_hash_; }

  int episodes_done() const { return episodes_done_; }

  const StateBatch& archive() const { return archive_; }

  void record_episode(const StateBatch& visited) {
    recent_.push_back(visited);
    while (int(recent_.size()) > recent_cap_) recent_.pop_front();
    archive_ = StateBatch(visited.dim());
    for (const auto& b : recent_) archive_.append(b);
    ++episodes_done_;
  }

  void set_archive(StateBatch archive) {  // pre-frozen policies loaded from disk
    archive_ = std::move(archive);
    recent_.clear();
  }

  Rng& action_rng() { return action_rng_; }
  Rng& update_rng() { return update_rng_; }

 private:
  Rng action_rng_, update_rng_;
  int recent_cap_;
  std::deque<StateBatch> recent_;
  StateBatch archive_;
  bool frozen_ = false;
  std::uint64_t frozen_hash_ = 0;
  int episodes_done_ = 0;
};

// Multi-policy diversity trainer: policies take turns collecting episodes and
// are rewarded for Wasserstein distance from the other policies' archives,
// via adversarial test functions (Alg-1 style, two policies), a terminal
// distance reward, or amortized per-step credits.
class WurlTrainer {
 public:
  WurlTrainer(EnvConfig env_cfg, TrainConfig cfg, std::uint64_t seed)
      : env_cfg_(std::move(env_cfg)), cfg_(cfg), seeds_(seed), env_(env_cfg_) {
    require(cfg_.policies >= 0, "WurlTrainer: negative policy count");
    require(cfg_.projections >= 1 && cfg_.target_samples >= 1 && cfg_.recent_episodes >= 1,
            "WurlTrainer: bad distance config");
    if (tf_mode()) {
      require(cfg_.policies == 2, "WurlTrainer: test-function modes are pairwise (2 policies)");
      DualConfig d = cfg_.dual;
      d.form = cfg_.mode == RewardMode::Tf1 ? DualForm::Tf1 : DualForm::Tf2;
      Rng r = seeds_.at(2).rng(0);
      tf_.emplace(ParticleEnv::kObsDim, d, r);
    }
    scheduler_rng_ = seeds_.at(3).rng(0);
    for (int i = 0; i < cfg_.policies; ++i) add_policy();
  }

  bool tf_mode() const { return cfg_.mode == RewardMode::Tf1 || cfg_.mode == RewardMode::Tf2; }
  const TrainConfig& config() const { return cfg_; }
  const EnvConfig& env_config() const { return env_cfg_; }
  TestFunctionPair& test_functions() {
    require_state(tf_.has_value(), "WurlTrainer: no test functions in this mode");
    return *tf_;
  }

  int add_policy() {
    int id = int(units_.size());
    SeedSeq unit_seeds = seeds_.at(100 + std::uint64_t(id));
    Vec ascale{env_cfg_.a_max, env_cfg_.a_max};
    Vec oscale{1.0 / env_cfg_.half_extent, 1.0 / env_cfg_.half_extent, 1.0 / env_cfg_.v_max,
               1.0 / env_cfg_.v_max};
    SacAgent agent(ParticleEnv::kObsDim, ParticleEnv::kActionDim, ascale, oscale, cfg_.sac,
                   unit_seeds.at(0));
    units_.push_back(std::make_unique<PolicyUnit>(std::move(agent), unit_seeds.rng(1),
                                                  unit_seeds.rng(2), cfg_.recent_episodes));
    return id;
  }

  // Registers an externally trained, already-frozen policy (incremental runs).
  int add_frozen(SacAgent agent, StateBatch archive) {
    int id = int(units_.size());
    SeedSeq unit_seeds = seeds_.at(100 + std::uint64_t(id));
    units_.push_back(std::make_unique<PolicyUnit>(std::move(agent), unit_seeds.rng(1),
                                                  unit_seeds.rng(2), cfg_.recent_episodes));
    units_.back()->set_archive(std::move(archive));
    units_.back()->freeze();
    return id;
  }

  std::vector<std::unique_ptr<PolicyUnit>>& units() { return units_; }
  const std::vector<std::unique_ptr<PolicyUnit>>& units() const { return units_; }

  bool frozen_intact() const {
    for (const auto& u : units_)
      if (!u->frozen_intact()) return false;
    return true;
  }

  // Runs episodes_per_policy episodes for every live (unfrozen) policy,
  // interleaved round-robin (or uniformly at random). Appends per-episode
  // records to out if given.
  void train(std::vector<EpisodeRecord>* out = nullptr) {
    std::vector<int> live;
    for (std::size_t i = 0; i < units_.size(); ++i)
      if (!units_[i]->frozen()) live.push_back(int(i));
    require_state(!live.empty(), "WurlTrainer::train: no live policies");
    int total = cfg_.episodes_per_policy * int(live.size());
    for (int e = 0; e < total; ++e) {
      int pick = cfg_.random_policy_order ? live[std::size_t(uniform_int(scheduler_rng_, int(live.size())))]
                                          : live[std::size_t(e % int(live.size()))];
      EpisodeRecord rec = run_episode(pick);
      if (out) out->push_back(rec);
    }
  }

  // One training episode for the given policy.
  EpisodeRecord run_episode(int policy) {
    require(policy >= 0 && policy < int(units_.size()), "run_episode: bad policy index");
    PolicyUnit& unit = *units_[std::size_t(policy)];
    require_state(!unit.frozen(), "run_episode: policy is frozen");
    EpisodeRecord rec;
    rec.episode = total_episodes_;
    rec.policy = policy;
    SeedSeq ep_seeds = seeds_.at(1000).at(std::uint64_t(total_episodes_));

    if (tf_mode())
      run_tf_episode(unit, policy, ep_seeds, rec);
    else
      run_distance_episode(unit, policy, ep_seeds, rec);

    ++total_episodes_;
    return rec;
  }

  int total_episodes() const { return total_episodes_; }

 private:
  // Alg-1 style: per-step intrinsic rewards straight from the test functions,
  // which are themselves updated online from the two replay buffers.
  void run_tf_episode(PolicyUnit& unit, int policy, SeedSeq& ep_seeds, EpisodeRecord& rec) {
    Side side = policy == 0 ? Side::First : Side::Second;
    Rng tf_rng = ep_seeds.at(500).rng(0);
    Vec s = env_.reset();
    StateBatch visited(ParticleEnv::kObsDim);
    while (!env_.done()) {
      Vec a = unit.agent.act(s, false, unit.action_rng());
      StepResult res = env_.step(a);
      double r = tf_->state_reward(res.obs, side);
      rec.intrinsic_return += r;
      rec.task_return += res.reward;
      visited.push_back(res.obs);
      Transition t;
      t.s = s;
      t.a = std::move(a);
      t.s2 = res.obs;
      t.r = r;
      t.done = res.done;
      t.terminal = res.terminal;
      unit.agent.add(std::move(t));
      unit.agent.update(unit.update_rng());
      update_test_functions(tf_rng);
      s = res.obs;
    }
    unit.record_episode(visited);
    rec.min_wd = diagnostic_min_wd(visited, policy, ep_seeds);
  }

  void update_test_functions(Rng& rng) {
    if (units_.size() < 2) return;
    const ReplayBuffer& b0 = units_[0]->agent.buffer();
    const ReplayBuffer& b1 = units_[1]->agent.buffer();
    if (b0.size() == 0 || b1.size() == 0) return;
    Matrix X(cfg_.tf_batch, ParticleEnv::kObsDim), Y(cfg_.tf_batch, ParticleEnv::kObsDim);
    for (int i = 0; i < cfg_.tf_batch; ++i) {
      const Transition& tx = b0.at(std::size_t(rng() % b0.size()));
      const Transition& ty = b1.at(std::size_t(rng() % b1.size()));
      for (int k = 0; k < ParticleEnv::kObsDim; ++k) {
        X(i, k) = tx.s2[std::size_t(k)];
        Y(i, k) = ty.s2[std::size_t(k)];
      }
    }
    tf_->update(X, Y);
  }

  // Distance-reward episode (terminal or amortized). Per candidate target j
  // the credits are computed once; their sum is the distance estimate, so
  // both modes share one code path and agree exactly on shared seeds.
  void run_distance_episode(PolicyUnit& unit, int policy, SeedSeq& ep_seeds, EpisodeRecord& rec) {
    Vec s = env_.reset();
    StateBatch visited(ParticleEnv::kObsDim);
    std::vector<Transition> episode;
    while (!env_.done()) {
      Vec a = unit.agent.act(s, false, unit.action_rng());
      StepResult res = env_.step(a);
      rec.task_return += res.reward;
      visited.push_back(res.obs);
      Transition t;
      t.s = s;
      t.a = std::move(a);
      t.s2 = res.obs;
      t.r = 0.0;
      t.done = res.done;
      t.terminal = res.terminal;
      episode.push_back(std::move(t));
      s = res.obs;
    }

    // Credits against every other policy with a non-empty archive.
    std::vector<Vec> credits;
    Vec dists;
    std::vector<int> target_ids;
    for (std::size_t j = 0; j < units_.size(); ++j) {
      if (int(j) == policy || units_[j]->archive().empty()) continue;
      SeedSeq tgt = ep_seeds.at(j);
      Rng sample_rng = tgt.rng(0);
      StateBatch target = units_[j]->archive().sample(cfg_.target_samples, sample_rng);
      Rng dir_rng = tgt.rng(1);
      Vec c = amortized_rewards(visited, target, cfg_.projections, dir_rng);
      double d = 0.0;
      for (double v : c) d += v;
      credits.push_back(std::move(c));
      dists.push_back(d);
      target_ids.push_back(int(j));
    }

    Vec reward_per_state(std::size_t(visited.size()), 0.0);
    double episode_value = 0.0;
    if (!dists.empty()) {
      if (cfg_.target_rule == TargetRule::MinDistance) {
        std::size_t jstar = 0;
        for (std::size_t j = 1; j < dists.size(); ++j)
          if (dists[j] < dists[jstar]) jstar = j;
        reward_per_state = credits[jstar];
        episode_value = dists[jstar];
        rec.min_wd = dists[jstar];
      } else {
        for (std::size_t j = 0; j < dists.size(); ++j) {
          for (std::size_t i = 0; i < reward_per_state.size(); ++i)
            reward_per_state[i] += credits[j][i] / double(dists.size());
          episode_value += dists[j] / double(dists.size());
        }
        rec.min_wd = *std::min_element(dists.begin(), dists.end());
      }
    }

    if (cfg_.mode == RewardMode::Apwd) {
      double scale = cfg_.scale_by_length ? double(visited.size()) : 1.0;
      relabel_rewards(episode, reward_per_state, scale);
    } else {
      for (auto& t : episode) t.r = 0.0;
      episode.back().r = episode_value;
    }
    for (const auto& t : episode) rec.intrinsic_return += t.r;
    for (auto& t : episode) unit.agent.add(std::move(t));
    for (int u = 0; u < int(visited.size()); ++u) unit.agent.update(unit.update_rng());

    unit.record_episode(visited);
  }

  // Post-episode diagnostic for TF modes, matching the distance the PWD
  // modes already computed: min projected WD to any other archive.
  double diagnostic_min_wd(const StateBatch& visited, int policy, SeedSeq& ep_seeds) {
    std::vector<StateBatch> others;
    for (std::size_t j = 0; j < units_.size(); ++j) {
      if (int(j) == policy || units_[j]->archive().empty()) continue;
      Rng sample_rng = ep_seeds.at(j).rng(0);
      others.push_back(units_[j]->archive().sample(cfg_.target_samples, sample_rng));
    }
    if (others.empty()) return 0.0;
    return min_pairwise_distance(visited, others, cfg_.projections, ep_seeds.at(777)).value;
  }

  EnvConfig env_cfg_;
  TrainConfig cfg_;
  SeedSeq seeds_;
  ParticleEnv env_;
  std::optional<TestFunctionPair> tf_;
  std::vector<std::unique_ptr<PolicyUnit>> units_;
  Rng scheduler_rng_{0};
  int total_episodes_ = 0;
};

// Convenience wrappers: configure the mode, run, hand back the trainer.
inline WurlTrainer train_pair_testfn(const EnvConfig& env, TrainConfig cfg, DualForm form,
                                     std::uint64_t seed, std::vector<EpisodeRecord>* records) {
  cfg.mode = form == DualForm::Tf1 ? RewardMode::Tf1 : RewardMode::Tf2;
  cfg.policies = 2;
  WurlTrainer t(env, cfg, seed);
  t.train(records);
  return t;
}

inline WurlTrainer train_final_reward(const EnvConfig& env, TrainConfig cfg, std::uint64_t seed,
                                      std::vector<EpisodeRecord>* records) {
  cfg.mode = RewardMode::PwdFinal;
  WurlTrainer t(env, cfg, seed);
  t.train(records);
  return t;
}

inline WurlTrainer train_amortized(const EnvConfig& env, TrainConfig cfg, std::uint64_t seed,
                                   std::vector<EpisodeRecord>* records) {
  cfg.mode = RewardMode::Apwd;
  WurlTrainer t(env, cfg, seed);
  t.train(records);
  return t;
}

// Grows the policy set one policy at a time, freezing each before the next
// starts. The trainer must start with zero live policies (all frozen or none).
inline void train_incremental(WurlTrainer& trainer, int new_policies,
                              std::vector<EpisodeRecord>* records) {
  require(new_policies >= 1, "train_incremental: need at least one new policy");
  for (const auto& u : trainer.units())
    require(u->frozen(), "train_incremental: all existing policies must be frozen");
  for (int k = 0; k < new_policies; ++k) {
    int id = trainer.add_policy();
    trainer.train(records);
    trainer.units()[std::size_t(id)]->freeze();
  }
}

}  // namespace wurl
