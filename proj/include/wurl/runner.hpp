#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "wurl/config.hpp"
#include "wurl/env.hpp"
#include "wurl/eval.hpp"
#include "wurl/gradcheck.hpp"
#include "wurl/hrl.hpp"
#include "wurl/io.hpp"
#include "wurl/ot_dual.hpp"
#include "wurl/ot_primal.hpp"
#include "wurl/train.hpp"

namespace wurl {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 4;

// ---------------------------------------------------------------------------
// Config binding. Every knob has a dotted key; unset keys keep the struct
// defaults, so an empty config is a valid experiment description.

inline EnvConfig env_from(const Config& cfg) {
  std::string name = cfg.get("env.name", "free_run");
  EnvConfig env;
  if (name == "free_run")
    env = EnvConfig::free_run();
  else if (name == "tree_maze")
    env = EnvConfig::tree_maze();
  else if (name == "free_run_nav")
    env = EnvConfig::free_run_nav();
  else
    throw ConfigError("env.name: unknown environment '" + name + "'");
  env.half_extent = cfg.get_double("env.half_extent", env.half_extent);
  env.a_max = cfg.get_double("env.a_max", env.a_max);
  env.v_max = cfg.get_double("env.v_max", env.v_max);
  env.horizon = cfg.get_int("env.horizon", env.horizon);
  env.goal_radius = cfg.get_double("env.goal_radius", env.goal_radius);
  env.goal_reward = cfg.get_double("env.goal_reward", env.goal_reward);
  env.step_penalty = cfg.get_double("env.step_penalty", env.step_penalty);
  env.validate();
  return env;
}

inline SacConfig sac_from(const Config& cfg) {
  SacConfig sc;
  sc.hidden = cfg.get_int("sac.hidden", sc.hidden);
  sc.depth = cfg.get_int("sac.depth", sc.depth);
  sc.actor_lr = cfg.get_double("sac.actor_lr", sc.actor_lr);
  sc.critic_lr = cfg.get_double("sac.critic_lr", sc.critic_lr);
  sc.discount = cfg.get_double("sac.discount", sc.discount);
  sc.tau = cfg.get_double("sac.tau", sc.tau);
  sc.alpha = cfg.get_double("sac.alpha", sc.alpha);
  sc.batch = cfg.get_int("sac.batch", sc.batch);
  sc.capacity = std::size_t(cfg.get_int("sac.capacity", int(sc.capacity)));
  return sc;
}

inline DualConfig dual_from(const Config& cfg) {
  DualConfig dc;
  dc.hidden = cfg.get_int("dual.hidden", dc.hidden);
  dc.depth = cfg.get_int("dual.depth", dc.depth);
  dc.lr = cfg.get_double("dual.lr", dc.lr);
  dc.clamp = cfg.get_double("dual.clamp", dc.clamp);
  dc.beta = cfg.get_double("dual.beta", dc.beta);
  dc.exp_cap = cfg.get_double("dual.exp_cap", dc.exp_cap);
  return dc;
}

inline TrainConfig train_from(const Config& cfg) {
  TrainConfig tc;
  std::string mode = cfg.get("train.mode", "apwd");
  if (mode == "pwd") mode = "pwd_final";  // CLI spelling
  tc.mode = reward_mode_from(mode);
  tc.policies = cfg.get_int("train.policies", 10);
  tc.episodes_per_policy = cfg.get_int("train.episodes_per_policy", tc.episodes_per_policy);
  tc.projections = cfg.get_int("wd.projections", tc.projections);
  tc.target_samples = cfg.get_int("wd.samples", tc.target_samples);
  tc.recent_episodes = cfg.get_int("train.recent_episodes", tc.recent_episodes);
  tc.scale_by_length = cfg.get_bool("train.scale_by_length", tc.scale_by_length);
  std::string rule = cfg.get("train.target_rule", "min");
  if (rule == "min")
    tc.target_rule = TargetRule::MinDistance;
  else if (rule == "mean")
    tc.target_rule = TargetRule::MeanDistance;
  else
    throw ConfigError("train.target_rule: expected 'min' or 'mean', got '" + rule + "'");
  tc.random_policy_order = cfg.get_bool("train.random_policy_order", tc.random_policy_order);
  tc.tf_batch = cfg.get_int("train.tf_batch", tc.tf_batch);
  tc.sac = sac_from(cfg);
  tc.dual = dual_from(cfg);
  return tc;
}

inline EvalConfig eval_from(const Config& cfg) {
  EvalConfig ec;
  ec.projections = cfg.get_int("eval.projections", ec.projections);
  ec.wd_samples = cfg.get_int("eval.wd_samples", ec.wd_samples);
  ec.disc.hidden = cfg.get_int("disc.hidden", ec.disc.hidden);
  ec.disc.depth = cfg.get_int("disc.depth", ec.disc.depth);
  ec.disc.lr = cfg.get_double("disc.lr", ec.disc.lr);
  ec.disc.epochs = cfg.get_int("disc.epochs", ec.disc.epochs);
  ec.disc.batch = cfg.get_int("disc.batch", ec.disc.batch);
  ec.disc.holdout = cfg.get_double("disc.holdout", ec.disc.holdout);
  return ec;
}

inline PpoConfig ppo_from(const Config& cfg) {
  PpoConfig pc;
  pc.hidden = cfg.get_int("ppo.hidden", pc.hidden);
  pc.depth = cfg.get_int("ppo.depth", pc.depth);
  pc.actor_lr = cfg.get_double("ppo.actor_lr", pc.actor_lr);
  pc.critic_lr = cfg.get_double("ppo.critic_lr", pc.critic_lr);
  pc.gamma = cfg.get_double("ppo.gamma", pc.gamma);
  pc.lam = cfg.get_double("ppo.lam", pc.lam);
  pc.clip = cfg.get_double("ppo.clip", pc.clip);
  pc.entropy_coef = cfg.get_double("ppo.entropy_coef", pc.entropy_coef);
  pc.epochs = cfg.get_int("ppo.epochs", pc.epochs);
  pc.minibatch = cfg.get_int("ppo.minibatch", pc.minibatch);
  pc.batch_episodes = cfg.get_int("ppo.batch_episodes", pc.batch_episodes);
  return pc;
}

// ---------------------------------------------------------------------------
// Run directory: artifact registry plus the closing manifest.

class RunDir {
 public:
  explicit RunDir(std::string root) : root_(std::move(root)), t0_(std::chrono::steady_clock::now()) {
    require(!root_.empty(), "RunDir: empty output path");
    ensure_dir(root_);
  }

  const std::string& root() const { return root_; }
  std::string path(const std::string& name) const { return root_ + "/" + name; }

  void add(const std::string& name) { artifacts_.push_back(name); }
  void set_parent(const std::string& parent) { parent_ = parent; }

  void write_text(const std::string& name, const std::string& content) {
    write_file_atomic(path(name), content);
    add(name);
  }

  void snapshot(const Config& cfg) { write_text("config.snapshot.txt", cfg.dump()); }

  // Manifest goes last so its artifact index is complete.
  void finalize(const std::string& kind, std::uint64_t seed) {
    using namespace std::chrono;
    double elapsed = duration<double>(steady_clock::now() - t0_).count();
    std::string m = std::string("manifest wurl ") + kVersion + "\n";
    m += "kind " + kind + "\n";
    m += "seed " + std::to_string(seed) + "\n";
    char line[64];
    std::snprintf(line, sizeof line, "elapsed_s %.3f\n", elapsed);
    m += line;
    if (!parent_.empty()) m += "parent " + parent_ + "\n";
    m += "artifacts " + std::to_string(artifacts_.size()) + "\n";
    for (const auto& a : artifacts_) m += a + "\n";
    write_file_atomic(path("manifest.txt"), m);
  }

 private:
  std::string root_;
  std::vector<std::string> artifacts_;
  std::string parent_;
  std::chrono::steady_clock::time_point t0_;
};

namespace detail {

inline std::string policy_file(int id) {
  char b[32];
  std::snprintf(b, sizeof b, "policy_%02d.ckpt", id);
  return b;
}

inline std::string archive_file(int id) {
  char b[32];
  std::snprintf(b, sizeof b, "archive_%02d.txt", id);
  return b;
}

// Gaussian sample set standardized to the exact target moments, so the
// estimator study sees the nominal separation instead of sampling noise.
inline Vec draw_standardized(int n, double mean, double sigma, Rng& rng) {
  Vec v;
  v.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) v.push_back(std_normal(rng));
  double m = 0.0;
  for (double x : v) m += x;
  m /= double(n);
  double s2 = 0.0;
  for (double x : v) s2 += (x - m) * (x - m);
  double s = std::sqrt(s2 / double(n));
  for (double& x : v) x = mean + sigma * (x - m) / s;
  return v;
}

struct NormalizedPair {
  Matrix X, Y;       // sorted, centered, divided by the pooled std
  double lambda = 1;  // pooled std, multiplies gap estimates back to raw units
};

inline NormalizedPair normalize_sorted(Vec xs, Vec ys) {
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double m = 0.0;
  for (double v : xs) m += v;
  for (double v : ys) m += v;
  m /= double(xs.size() + ys.size());
  double s2 = 0.0;
  for (double v : xs) s2 += (v - m) * (v - m);
  for (double v : ys) s2 += (v - m) * (v - m);
  NormalizedPair p;
  p.lambda = std::sqrt(s2 / double(xs.size() + ys.size()));
  require(p.lambda > 0.0, "estimator study: degenerate sample sets");
  p.X = Matrix(int(xs.size()), 1);
  p.Y = Matrix(int(ys.size()), 1);
  for (int i = 0; i < p.X.rows; ++i) p.X(i, 0) = (xs[std::size_t(i)] - m) / p.lambda;
  for (int i = 0; i < p.Y.rows; ++i) p.Y(i, 0) = (ys[std::size_t(i)] - m) / p.lambda;
  return p;
}

struct RepeatStats {
  double mean = 0.0, sd = 0.0;
};

inline RepeatStats stats(const Vec& xs) {
  RepeatStats r;
  for (double v : xs) r.mean += v;
  r.mean /= double(xs.size());
  double s2 = 0.0;
  for (double v : xs) s2 += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(s2 / double(xs.size()));
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// estimate: the estimator comparison study on synthetic 1-D Gaussian pairs.
// One fixed sample pair per separation (derived from the seed), estimator
// randomness varied across repeats; dual estimators train on sorted pairs
// normalized by the pooled std and report the rescaled potential gap averaged
// over the tail of the run.

struct EstimateRow {
  std::string method;
  detail::RepeatStats estimate;
  detail::RepeatStats time_s;
};

struct EstimateStudy {
  std::uint64_t seed = kDefaultSeed;
  std::vector<double> separations;
  std::vector<double> sigmas;
  std::vector<std::vector<EstimateRow>> rows;  // per separation

  std::string to_text() const {
    std::string out = "estimator study seed " + std::to_string(seed) + "\n";
    char line[160];
    for (std::size_t s = 0; s < separations.size(); ++s) {
      std::snprintf(line, sizeof line, "separation %g sigma %g\n", separations[s], sigmas[s]);
      out += line;
      std::snprintf(line, sizeof line, "  %-12s %.9g\n", "ground_truth", separations[s]);
      out += line;
      for (const auto& r : rows[s]) {
        std::snprintf(line, sizeof line, "  %-12s %.9g +- %.3g  time_s %.4g +- %.2g\n",
                      r.method.c_str(), r.estimate.mean, r.estimate.sd, r.time_s.mean,
                      r.time_s.sd);
        out += line;
      }
    }
    return out;
  }
};

inline EstimateStudy run_estimate_study(const Config& cfg, std::uint64_t seed) {
  EstimateStudy study;
  study.seed = seed;
  study.separations = Config::parse_doubles(cfg.get("est.separations", "2 16 64"));
  study.sigmas = Config::parse_doubles(cfg.get("est.sigmas", "37 60 150"));
  require(study.separations.size() == study.sigmas.size(),
          "est.sigmas must list one sigma per separation");
  const int n = cfg.get_int("est.samples", 256);
  const int repeats = cfg.get_int("est.repeats", 3);
  const int steps = cfg.get_int("est.steps", 2000);
  const int tail = std::min(cfg.get_int("est.tail", 500), steps);
  const int k_proj = cfg.get_int("wd.projections", 64);
  const int dim = cfg.get_int("est.dim", 1);
  require(n >= 2 && repeats >= 1 && steps >= 1 && tail >= 1 && k_proj >= 1 && dim >= 1,
          "estimator study: bad sizes");

  DualConfig tf1_cfg = dual_from(cfg);
  tf1_cfg.form = DualForm::Tf1;
  tf1_cfg.lr = cfg.get_double("est.tf_lr", 1e-3);
  DualConfig tf2_cfg = tf1_cfg;
  tf2_cfg.form = DualForm::Tf2;
  tf2_cfg.beta = cfg.get_double("est.tf2_beta", 0.05);
  tf2_cfg.exp_cap = cfg.get_double("est.tf2_cap", 4.0);

  SeedSeq seeds(seed);
  using clock = std::chrono::steady_clock;
  for (std::size_t s = 0; s < study.separations.size(); ++s) {
    const double sep = study.separations[s];
    const double sigma = study.sigmas[s];
    Rng data_rng(splitmix64(seed * 1000 + std::uint64_t(s)));
    // Separation lives on the first coordinate; extra coordinates (est.dim
    // above 1) only widen the clouds, which is where SWD starts to shrink.
    std::vector<Vec> xc, yc;
    for (int j = 0; j < dim; ++j) {
      xc.push_back(detail::draw_standardized(n, 0.0, sigma, data_rng));
      yc.push_back(detail::draw_standardized(n, j == 0 ? sep : 0.0, sigma, data_rng));
    }
    StateBatch a(dim), b(dim);
    Vec pt(std::size_t(dim), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) pt[std::size_t(j)] = xc[std::size_t(j)][std::size_t(i)];
      a.push_back(pt);
      for (int j = 0; j < dim; ++j) pt[std::size_t(j)] = yc[std::size_t(j)][std::size_t(i)];
      b.push_back(pt);
    }

    auto timed = [&](auto&& fn, Vec& vals, Vec& times) {
      auto t0 = clock::now();
      vals.push_back(fn());
      times.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    };

    std::vector<EstimateRow> rows;
    if (dim == 1) {
      // The dual estimators train on the comonotone pairing: in 1-D the tight
      // dual constraints are exactly the sorted pairs, so full-batch ascent on
      // them is deterministic and lands on the empirical distance.
      detail::NormalizedPair np = detail::normalize_sorted(xc[0], yc[0]);
      auto train_dual = [&](const DualConfig& dc, int rep) {
        Rng net_rng = seeds.at(20 + std::uint64_t(rep)).rng(dc.form == DualForm::Tf1 ? 0 : 1);
        TestFunctionPair tf(1, dc, net_rng);
        double tail_sum = 0.0;
        int tail_n = 0;
        for (int t = 0; t < steps; ++t) {
          tf.update(np.X, np.Y);
          if (t >= steps - tail) {
            tail_sum += tf.estimate(np.X, np.Y);
            ++tail_n;
          }
        }
        return tail_sum / double(tail_n) * np.lambda;
      };
      Vec tf1_v, tf1_t, tf2_v, tf2_t;
      for (int rep = 0; rep < repeats; ++rep) {
        timed([&] { return train_dual(tf1_cfg, rep); }, tf1_v, tf1_t);
        timed([&] { return train_dual(tf2_cfg, rep); }, tf2_v, tf2_t);
      }
      rows.push_back({"tf1", detail::stats(tf1_v), detail::stats(tf1_t)});
      rows.push_back({"tf2", detail::stats(tf2_v), detail::stats(tf2_t)});
    }

    Vec swd_v, swd_t, pwd_v, pwd_t;
    for (int rep = 0; rep < repeats; ++rep) {
      Rng swd_rng = seeds.at(10 + std::uint64_t(rep)).rng(0);
      timed([&] { return sliced_wd(a, b, k_proj, swd_rng); }, swd_v, swd_t);
      Rng pwd_rng = seeds.at(10 + std::uint64_t(rep)).rng(1);
      timed([&] { return projected_wd(a, b, k_proj, pwd_rng); }, pwd_v, pwd_t);
    }
    rows.push_back({"swd", detail::stats(swd_v), detail::stats(swd_t)});
    rows.push_back({"pwd", detail::stats(pwd_v), detail::stats(pwd_t)});
    study.rows.push_back(std::move(rows));
  }
  return study;
}

inline std::string cmd_estimate(const Config& cfg, std::uint64_t seed, const std::string& out) {
  RunDir run(out);
  Config snap = cfg;
  snap.set("kind", "estimate");
  snap.set("seed", std::to_string(seed));
  run.snapshot(snap);
  EstimateStudy study = run_estimate_study(cfg, seed);
  std::string report = study.to_text();
  run.write_text("estimate_report.txt", report);
  run.finalize("estimate", seed);
  return report;
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces for the training-flavored commands.

namespace detail {

inline void save_policies(RunDir& run, WurlTrainer& trainer) {
  for (std::size_t i = 0; i < trainer.units().size(); ++i) {
    PolicyUnit& u = *trainer.units()[i];
    std::string pf = policy_file(int(i));
    save_actor_ckpt(run.path(pf), u.agent.actor());
    run.add(pf);
    std::string af = archive_file(int(i));
    save_batch(run.path(af), u.archive());
    run.add(af);
  }
}

inline void write_metrics(RunDir& run, const std::vector<EpisodeRecord>& recs) {
  MetricsLog log(run.path("metrics.log"));
  char line[256];
  for (const auto& r : recs) {
    std::snprintf(line, sizeof line,
                  "episode %d policy %d intrinsic_return %.17g min_wd %.17g task_return %.17g",
                  r.episode, r.policy, r.intrinsic_return, r.min_wd, r.task_return);
    log.line(line);
  }
  run.add("metrics.log");
}

// Fresh deterministic rollout archives for every policy; the diversity
// metrics measure current behavior rather than stale training archives, and
// deterministic episodes keep stochastic-policy variance out of the metric.
inline std::vector<StateBatch> eval_archives(const EnvConfig& env, WurlTrainer& trainer,
                                             int episodes, SeedSeq eval_seeds) {
  std::vector<StateBatch> archives;
  for (std::size_t i = 0; i < trainer.units().size(); ++i) {
    Rng rng = eval_seeds.at(std::uint64_t(i)).rng(0);
    archives.push_back(collect_archive(env, trainer.units()[i]->agent, episodes, true, rng));
  }
  return archives;
}

inline double random_baseline_wd(const EnvConfig& env, int policies, int episodes,
                                 const EvalConfig& ec, SeedSeq seeds) {
  std::vector<StateBatch> archives;
  for (int i = 0; i < policies; ++i) {
    Rng rng = seeds.at(std::uint64_t(i)).rng(1);
    archives.push_back(collect_random_archive(env, episodes, rng));
  }
  DiversityReport rep = evaluate_diversity(archives, ec, seeds.raw(9000));
  return rep.mean_pairwise_wd;
}

inline void write_diversity(RunDir& run, const EnvConfig& env, WurlTrainer& trainer,
                            const Config& cfg, std::uint64_t seed) {
  EvalConfig ec = eval_from(cfg);
  int episodes = cfg.get_int("eval.episodes", 10);
  SeedSeq seeds(splitmix64(seed ^ 0x9e3779b97f4a7c15ull));
  std::vector<StateBatch> archives = eval_archives(env, trainer, episodes, seeds.at(1));
  DiversityReport rep = evaluate_diversity(archives, ec, seeds.raw(2));
  double baseline =
      random_baseline_wd(env, int(archives.size()), episodes, ec, seeds.at(3));
  std::string text = rep.to_text();
  char line[128];
  std::snprintf(line, sizeof line, "random_baseline_wd %.9g\n", baseline);
  text += line;
  std::snprintf(line, sizeof line, "trained_over_random %.9g\n",
                baseline > 0.0 ? rep.mean_pairwise_wd / baseline : 0.0);
  text += line;
  run.write_text("diversity_report.txt", text);
}

inline void export_trajectories(RunDir& run, const EnvConfig& env, WurlTrainer& trainer,
                                int episodes_per_policy) {
  ensure_dir(run.path("trajectories"));
  Rng dummy(1);
  for (std::size_t i = 0; i < trainer.units().size(); ++i) {
    SacAgent& agent = trainer.units()[i]->agent;
    for (int e = 0; e < episodes_per_policy; ++e) {
      ParticleEnv penv(env);
      Trajectory tr = rollout(penv, [&](std::span<const double> s) { return agent.act(s, true, dummy); });
      char name[64];
      std::snprintf(name, sizeof name, "trajectories/policy_%02d_ep_%02d.txt", int(i), e);
      save_trajectory(run.path(name), tr);
      run.add(name);
    }
  }
}

// Reconstructs the frozen policies of a finished run from its directory.
inline int load_frozen_into(WurlTrainer& trainer, const std::string& parent) {
  int id = 0;
  while (file_exists(parent + "/" + policy_file(id))) {
    std::string af = parent + "/" + archive_file(id);
    if (!file_exists(af))
      throw ConfigError(parent + ": missing archive for " + policy_file(id));
    int added = trainer.add_policy();
    PolicyUnit& u = *trainer.units()[std::size_t(added)];
    load_actor_ckpt(parent + "/" + policy_file(id), u.agent.actor());
    u.set_archive(load_batch(af));
    u.freeze();
    ++id;
  }
  return id;
}

}  // namespace detail

inline std::string cmd_train(const Config& cfg, std::uint64_t seed, const std::string& out) {
  EnvConfig env = env_from(cfg);
  TrainConfig tc = train_from(cfg);
  require(tc.policies >= 2, "train: need at least two policies");
  RunDir run(out);
  Config snap = cfg;
  snap.set("kind", "train");
  snap.set("seed", std::to_string(seed));
  run.snapshot(snap);

  WurlTrainer trainer(env, tc, seed);
  std::vector<EpisodeRecord> recs;
  trainer.train(&recs);
  for (auto& u : trainer.units()) u->freeze();

  detail::write_metrics(run, recs);
  detail::save_policies(run, trainer);
  detail::export_trajectories(run, env, trainer, cfg.get_int("eval.traj_episodes", 2));
  detail::write_diversity(run, env, trainer, cfg, seed);
  run.finalize("train", seed);
  return run.root();
}

inline std::string cmd_incremental(const Config& cfg, std::uint64_t seed, const std::string& out) {
  std::string parent = cfg.get("incremental.parent");
  if (!file_exists(parent + "/config.snapshot.txt"))
    throw ConfigError("incremental.parent: no config snapshot under '" + parent + "'");

  // The parent snapshot supplies the experiment; the current config overlays
  // it, so the new snapshot is self-contained.
  Config merged = Config::parse_file(parent + "/config.snapshot.txt");
  for (const auto& [key, vals] : cfg.values())
    for (std::size_t i = 0; i < vals.size(); ++i)
      i == 0 ? merged.set(key, vals[i]) : merged.add(key, vals[i]);

  EnvConfig env = env_from(merged);
  TrainConfig tc = train_from(merged);
  require(tc.mode == RewardMode::PwdFinal || tc.mode == RewardMode::Apwd,
          "incremental: test-function modes do not support frozen archives");
  tc.policies = 0;
  int new_policies = merged.get_int("incremental.new_policies", 1);

  RunDir run(out);
  run.set_parent(parent);
  Config snap = merged;
  snap.set("kind", "incremental");
  snap.set("seed", std::to_string(seed));
  run.snapshot(snap);

  WurlTrainer trainer(env, tc, seed);
  int loaded = detail::load_frozen_into(trainer, parent);
  require(loaded >= 1, "incremental: parent run has no policies");
  std::vector<EpisodeRecord> recs;
  train_incremental(trainer, new_policies, &recs);
  require_state(trainer.frozen_intact(), "incremental: frozen policy changed during training");

  detail::write_metrics(run, recs);
  detail::save_policies(run, trainer);
  detail::export_trajectories(run, env, trainer, merged.get_int("eval.traj_episodes", 2));
  detail::write_diversity(run, env, trainer, merged, seed);
  run.finalize("incremental", seed);
  return run.root();
}

inline std::string cmd_eval(const Config& cfg, std::uint64_t seed, const std::string& out) {
  EvalConfig ec = eval_from(cfg);
  int episodes = cfg.get_int("eval.episodes", 10);
  RunDir run(out);
  Config snap = cfg;
  snap.set("kind", "eval");
  snap.set("seed", std::to_string(seed));
  run.snapshot(snap);
  SeedSeq seeds(splitmix64(seed ^ 0x9e3779b97f4a7c15ull));

  std::string text;
  std::string parent = cfg.get("eval.parent", "");
  EnvConfig env;
  if (!parent.empty()) {
    if (!file_exists(parent + "/config.snapshot.txt"))
      throw ConfigError("eval.parent: no config snapshot under '" + parent + "'");
    Config pcfg = Config::parse_file(parent + "/config.snapshot.txt");
    env = env_from(pcfg);
    TrainConfig tc = train_from(pcfg);
    tc.policies = 0;
    WurlTrainer holder(env, tc, seed);
    int loaded = detail::load_frozen_into(holder, parent);
    require(loaded >= 2, "eval: parent run has fewer than two policies");
    run.set_parent(parent);
    std::vector<StateBatch> archives = detail::eval_archives(env, holder, episodes, seeds.at(1));
    DiversityReport rep = evaluate_diversity(archives, ec, seeds.raw(2));
    double baseline = detail::random_baseline_wd(env, loaded, episodes, ec, seeds.at(3));
    text = rep.to_text();
    char line[128];
    std::snprintf(line, sizeof line, "random_baseline_wd %.9g\n", baseline);
    text += line;
    std::snprintf(line, sizeof line, "trained_over_random %.9g\n",
                  baseline > 0.0 ? rep.mean_pairwise_wd / baseline : 0.0);
    text += line;
  } else {
    // No trained run given: report the random-action baseline on its own.
    env = env_from(cfg);
    int policies = cfg.get_int("train.policies", 10);
    require(policies >= 2, "eval: need at least two policies");
    std::vector<StateBatch> archives;
    for (int i = 0; i < policies; ++i) {
      Rng rng = seeds.at(3).at(std::uint64_t(i)).rng(1);
      archives.push_back(collect_random_archive(env, episodes, rng));
    }
    DiversityReport rep = evaluate_diversity(archives, ec, seeds.raw(2));
    text = "random_only 1\n" + rep.to_text();
  }
  run.write_text("diversity_report.txt", text);
  run.finalize("eval", seed);
  return run.root();
}

inline std::string cmd_hierarchy(const Config& cfg, std::uint64_t seed, const std::string& out) {
  std::string parent = cfg.get("hierarchy.parent");
  if (!file_exists(parent + "/config.snapshot.txt"))
    throw ConfigError("hierarchy.parent: no config snapshot under '" + parent + "'");
  Config pcfg = Config::parse_file(parent + "/config.snapshot.txt");

  Config env_cfg = cfg;
  if (!cfg.has("env.name")) env_cfg.set("env.name", "free_run_nav");
  EnvConfig env = env_from(env_cfg);
  require(!env.goals.empty(), "hierarchy: the meta task needs env goals");

  // Sub-policies rebuilt with the parent's architecture, then frozen weights.
  TrainConfig ptc = train_from(pcfg);
  ptc.policies = 0;
  EnvConfig penv = env_from(pcfg);
  WurlTrainer holder(penv, ptc, seed);
  int loaded = detail::load_frozen_into(holder, parent);
  require(loaded >= 2, "hierarchy: parent run has fewer than two sub-policies");
  std::vector<SacAgent> subs;
  for (auto& u : holder.units()) subs.push_back(u->agent);

  RunDir run(out);
  run.set_parent(parent);
  Config snap = cfg;
  snap.set("kind", "hierarchy");
  snap.set("seed", std::to_string(seed));
  snap.set("env.name", env_cfg.get("env.name"));
  run.snapshot(snap);

  int macro_steps = cfg.get_int("hrl.macro_steps", 10);
  int iterations = cfg.get_int("hrl.iterations", 60);
  int eval_episodes = cfg.get_int("hrl.eval_episodes", 20);
  MetaEnv menv(env, std::move(subs), macro_steps);
  SeedSeq seeds(splitmix64(seed ^ 0xda3e39cb94b95bdbull));
  Rng train_rng = seeds.at(0).rng(0);
  MetaPolicy meta(menv.obs_dim(), menv.actions(), menv.suggested_obs_scale(), ppo_from(cfg),
                  seeds.at(2));
  std::vector<MetaCurvePoint> curve = meta.train(menv, iterations, train_rng);

  std::string curve_text;
  char line[160];
  for (const auto& pt : curve) {
    std::snprintf(line, sizeof line, "iter %d mean_return %.17g mean_length %.17g\n",
                  pt.iteration, pt.mean_return, pt.mean_length);
    curve_text += line;
  }
  run.write_text("meta_curve.txt", curve_text);

  // Greedy meta-policy vs the uniform-random option baseline.
  auto run_episodes = [&](auto&& pick) {
    double total = 0.0;
    for (int e = 0; e < eval_episodes; ++e) {
      Vec s = menv.reset();
      double ret = 0.0;
      while (!menv.done()) {
        StepResult r = menv.step(pick(s));
        ret += r.reward;
        s = r.obs;
      }
      total += ret;
    }
    return total / double(eval_episodes);
  };
  double meta_return = run_episodes([&](const Vec& s) { return meta.act_greedy(s); });
  Rng base_rng = seeds.at(1).rng(0);
  double random_return =
      run_episodes([&](const Vec&) { return int(uniform_int(base_rng, menv.actions())); });

  std::string rep;
  std::snprintf(line, sizeof line, "sub_policies %d\niterations %d\n", loaded, iterations);
  rep += line;
  std::snprintf(line, sizeof line, "meta_return %.9g\nrandom_return %.9g\nmargin %.9g\n",
                meta_return, random_return, meta_return - random_return);
  rep += line;
  run.write_text("hierarchy_report.txt", rep);
  run.finalize("hierarchy", seed);
  return run.root();
}

inline std::string gradcheck_report(const std::vector<GradCheckResult>& results) {
  std::string out;
  char line[128];
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-4s %-18s rel_err %.3g\n", r.ok ? "ok" : "FAIL",
                  r.name.c_str(), r.rel_err);
    out += line;
  }
  out += all_checks_pass(results) ? "all gradient checks passed\n"
                                  : "gradient checks FAILED\n";
  return out;
}

inline bool cmd_gradcheck(const std::string& out = "") {
  std::vector<GradCheckResult> results = run_gradient_checks();
  std::string report = gradcheck_report(results);
  if (!out.empty()) {
    RunDir run(out);
    run.write_text("gradcheck_report.txt", report);
    run.finalize("gradcheck", 0);
  }
  std::fputs(report.c_str(), stdout);
  return all_checks_pass(results);
}

}  // namespace wurl
