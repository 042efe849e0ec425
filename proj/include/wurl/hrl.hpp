#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "wurl/env.hpp"
#include "wurl/nn.hpp"
#include "wurl/sac.hpp"

namespace wurl {

// Semi-MDP over a particle task: each meta action picks one frozen low-level
// policy and runs it deterministically for macro_steps base steps. The meta
// observation appends a one-hot of the current goal index to the base
// observation, and the meta reward is the exact sum of base rewards.
class MetaEnv {
 public:
  MetaEnv(EnvConfig base_cfg, std::vector<SacAgent> subs, int macro_steps)
      : cfg_(std::move(base_cfg)),
        env_(cfg_),
        subs_(std::move(subs)),
        macro_steps_(macro_steps) {
    require(!subs_.empty(), "MetaEnv: need at least one sub-policy");
    require(macro_steps_ >= 1, "MetaEnv: macro_steps must be positive");
  }

  int actions() const { return int(subs_.size()); }
  int goal_slots() const { return int(cfg_.goals.size()); }
  int obs_dim() const { return ParticleEnv::kObsDim + goal_slots(); }
  int macro_horizon() const { return (cfg_.horizon + macro_steps_ - 1) / macro_steps_; }
  bool done() const { return env_.done(); }
  const EnvConfig& base_config() const { return cfg_; }

  Vec suggested_obs_scale() const {
    Vec s{1.0 / cfg_.half_extent, 1.0 / cfg_.half_extent, 1.0 / cfg_.v_max, 1.0 / cfg_.v_max};
    s.resize(std::size_t(obs_dim()), 1.0);
    return s;
  }

  Vec reset() {
    Vec base = env_.reset();
    return meta_obs(base);
  }

  StepResult step(int option) {
    require_state(!env_.done(), "MetaEnv::step: episode is over");
    require(option >= 0 && option < actions(), "MetaEnv::step: bad sub-policy index");
    SacAgent& sub = subs_[std::size_t(option)];
    StepResult last;
    double total = 0.0;
    Vec s = env_.obs();
    Rng dummy(0);  // deterministic actions never draw from it
    for (int h = 0; h < macro_steps_ && !env_.done(); ++h) {
      last = env_.step(sub.act(s, true, dummy));
      total += last.reward;
      s = last.obs;
    }
    StepResult out;
    out.obs = meta_obs(s);
    out.reward = total;
    out.done = env_.done();
    out.terminal = last.terminal;
    return out;
  }

 private:
  Vec meta_obs(const Vec& base) const {
    Vec o = base;
    o.resize(std::size_t(obs_dim()), 0.0);
    int g = env_.goal_index();
    if (g < goal_slots()) o[std::size_t(ParticleEnv::kObsDim + g)] = 1.0;
    return o;
  }

  EnvConfig cfg_;
  ParticleEnv env_;
  std::vector<SacAgent> subs_;
  int macro_steps_;
};

struct PpoConfig {
  int hidden = 64;
  int depth = 2;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double lam = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.01;
  int epochs = 4;
  int minibatch = 64;
  int batch_episodes = 8;
};

struct MetaCurvePoint {
  int iteration = 0;
  double mean_return = 0.0;
  double mean_length = 0.0;
};

// Clipped-surrogate PPO with a categorical actor; discrete actions index the
// frozen sub-policies.
class MetaPolicy {
 public:
  MetaPolicy(int obs_dim, int n_actions, Vec obs_scale, const PpoConfig& cfg,
             const SeedSeq& seeds)
      : obs_dim_(obs_dim), n_actions_(n_actions), cfg_(cfg), obs_scale_(std::move(obs_scale)) {
    require(n_actions >= 2, "MetaPolicy: need at least two actions");
    require(int(obs_scale_.size()) == obs_dim, "MetaPolicy: obs_scale size mismatch");
    Rng r0 = seeds.rng(0), r1 = seeds.rng(1);
    pi_.emplace(make_widths(obs_dim, n_actions, cfg), Head::Linear, r0);
    v_.emplace(make_widths(obs_dim, 1, cfg), Head::Linear, r1);
    opt_pi_ = Adam(pi_->n_params(), {.lr = cfg.actor_lr});
    opt_v_ = Adam(v_->n_params(), {.lr = cfg.critic_lr});
  }

  int act(std::span<const double> obs, Rng& rng) const {
    Vec p = probs(obs);
    double u = uniform01(rng), c = 0.0;
    for (int a = 0; a < n_actions_; ++a) {
      c += p[std::size_t(a)];
      if (u <= c) return a;
    }
    return n_actions_ - 1;
  }

  int act_greedy(std::span<const double> obs) const {
    Vec p = probs(obs);
    return int(std::max_element(p.begin(), p.end()) - p.begin());
  }

  Vec probs(std::span<const double> obs) const {
    Vec y = pi_->forward1(scaled(obs));
    softmax_inplace(y);
    return y;
  }

  double value(std::span<const double> obs) const { return v_->forward1(scaled(obs))[0]; }

  // Clipped PPO surrogate with entropy bonus, as a minimized loss.
  double actor_loss(const Matrix& S, const std::vector<int>& acts, const Vec& adv,
                    const Vec& logp_old, Vec* grad = nullptr) const {
    int B = S.rows;
    Matrix Y;
    MlpCache cache;
    pi_->forward(S, Y, grad ? &cache : nullptr);
    Matrix dY(B, n_actions_);
    double loss = 0.0;
    Vec p(std::size_t(n_actions_), 0.0);
    for (int i = 0; i < B; ++i) {
      softmax_row(Y.row(i), p);
      int a = acts[std::size_t(i)];
      double logp = std::log(std::max(p[std::size_t(a)], 1e-300));
      double ratio = std::exp(logp - logp_old[std::size_t(i)]);
      double A = adv[std::size_t(i)];
      double clipped = std::clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip);
      double surr1 = ratio * A, surr2 = clipped * A;
      double ent = 0.0;
      for (int c = 0; c < n_actions_; ++c)
        if (p[std::size_t(c)] > 0.0) ent -= p[std::size_t(c)] * std::log(p[std::size_t(c)]);
      loss += -std::min(surr1, surr2) - cfg_.entropy_coef * ent;
      if (grad) {
        double dlogp = surr1 <= surr2 ? -ratio * A / double(B) : 0.0;
        for (int c = 0; c < n_actions_; ++c) {
          double onehot = c == a ? 1.0 : 0.0;
          double dent = p[std::size_t(c)] *
                        (std::log(std::max(p[std::size_t(c)], 1e-300)) + ent);
          dY(i, c) = dlogp * (onehot - p[std::size_t(c)]) +
                     cfg_.entropy_coef * dent / double(B);
        }
      }
    }
    if (grad) pi_->backward(cache, dY, *grad, nullptr);
    return loss / double(B);
  }

  double value_loss(const Matrix& S, const Vec& ret, Vec* grad = nullptr) const {
    int B = S.rows;
    Matrix Y;
    MlpCache cache;
    v_->forward(S, Y, grad ? &cache : nullptr);
    Matrix dY(B, 1);
    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
      double e = Y(i, 0) - ret[std::size_t(i)];
      loss += 0.5 * e * e;
      dY(i, 0) = e / double(B);
    }
    if (grad) v_->backward(cache, dY, *grad, nullptr);
    return loss / double(B);
  }

  Mlp& pi() { return *pi_; }
  Mlp& v() { return *v_; }

  // One PPO iteration: collect batch_episodes episodes, then a few epochs of
  // clipped minibatch updates. Returns the batch's mean undiscounted return.
  template <class EnvT>
  MetaCurvePoint iterate(EnvT& env, Rng& rng) {
    Matrix S;
    std::vector<int> acts;
    Vec rews, vals, logps;
    std::vector<int> ep_end;  // exclusive end row of each episode
    Vec boot;                 // bootstrap value at each episode's last obs
    double ret_sum = 0.0;

    std::vector<Vec> rows;
    for (int e = 0; e < cfg_.batch_episodes; ++e) {
      Vec s = env.reset();
      double ep_ret = 0.0;
      bool terminal = false;
      while (!env.done()) {
        Vec pr = probs(s);
        double u = uniform01(rng), c = 0.0;
        int a = n_actions_ - 1;
        for (int k = 0; k < n_actions_; ++k) {
          c += pr[std::size_t(k)];
          if (u <= c) {
            a = k;
            break;
          }
        }
        StepResult res = env.step(a);
        rows.push_back(s);
        acts.push_back(a);
        rews.push_back(res.reward);
        vals.push_back(value(s));
        logps.push_back(std::log(std::max(pr[std::size_t(a)], 1e-300)));
        ep_ret += res.reward;
        terminal = res.terminal;
        s = res.obs;
      }
      boot.push_back(terminal ? 0.0 : value(s));
      ep_end.push_back(int(rows.size()));
      ret_sum += ep_ret;
    }

    int n = int(rows.size());
    S = Matrix(n, obs_dim_);
    for (int i = 0; i < n; ++i) {
      Vec sc = scaled(rows[std::size_t(i)]);
      for (int d = 0; d < obs_dim_; ++d) S(i, d) = sc[std::size_t(d)];
    }

    // GAE within each episode, bootstrapping through time-limit endings.
    Vec adv(std::size_t(n), 0.0), ret(std::size_t(n), 0.0);
    int begin = 0;
    for (std::size_t e = 0; e < ep_end.size(); ++e) {
      int end = ep_end[e];
      double running = 0.0;
      for (int t = end - 1; t >= begin; --t) {
        double v_next = t + 1 < end ? vals[std::size_t(t + 1)] : boot[e];
        double delta = rews[std::size_t(t)] + cfg_.gamma * v_next - vals[std::size_t(t)];
        running = delta + cfg_.gamma * cfg_.lam * running;
        adv[std::size_t(t)] = running;
        ret[std::size_t(t)] = running + vals[std::size_t(t)];
      }
      begin = end;
    }
    double am = 0.0, av = 0.0;
    for (double a : adv) am += a;
    am /= double(n);
    for (double a : adv) av += sqr(a - am);
    double as = std::sqrt(av / double(n));
    if (as > 1e-8)
      for (double& a : adv) a = (a - am) / as;

    std::vector<int> order(std::size_t(n), 0);
    std::iota(order.begin(), order.end(), 0);
    Vec gpi(std::size_t(pi_->n_params()), 0.0), gv(std::size_t(v_->n_params()), 0.0);
    for (int ep = 0; ep < cfg_.epochs; ++ep) {
      std::shuffle(order.begin(), order.end(), rng);
      for (int start = 0; start < n; start += cfg_.minibatch) {
        int m = std::min(cfg_.minibatch, n - start);
        Matrix Sb(m, obs_dim_);
        std::vector<int> ab(std::size_t(m), 0);
        Vec advb(std::size_t(m), 0.0), lob(std::size_t(m), 0.0), retb(std::size_t(m), 0.0);
        for (int i = 0; i < m; ++i) {
          int src = order[std::size_t(start + i)];
          for (int d = 0; d < obs_dim_; ++d) Sb(i, d) = S(src, d);
          ab[std::size_t(i)] = acts[std::size_t(src)];
          advb[std::size_t(i)] = adv[std::size_t(src)];
          lob[std::size_t(i)] = logps[std::size_t(src)];
          retb[std::size_t(i)] = ret[std::size_t(src)];
        }
        std::fill(gpi.begin(), gpi.end(), 0.0);
        actor_loss(Sb, ab, advb, lob, &gpi);
        opt_pi_.step(pi_->params(), gpi);
        std::fill(gv.begin(), gv.end(), 0.0);
        value_loss(Sb, retb, &gv);
        opt_v_.step(v_->params(), gv);
      }
    }

    MetaCurvePoint pt;
    pt.mean_return = ret_sum / double(cfg_.batch_episodes);
    pt.mean_length = double(n) / double(cfg_.batch_episodes);
    return pt;
  }

  template <class EnvT>
  std::vector<MetaCurvePoint> train(EnvT& env, int iterations, Rng& rng) {
    require(iterations >= 1, "MetaPolicy::train: need at least one iteration");
    std::vector<MetaCurvePoint> curve;
    for (int it = 0; it < iterations; ++it) {
      MetaCurvePoint pt = iterate(env, rng);
      pt.iteration = it;
      curve.push_back(pt);
    }
    return curve;
  }

 private:
  static std::vector<int> make_widths(int in, int out, const PpoConfig& cfg) {
    std::vector<int> w{in};
    for (int i = 0; i < cfg.depth; ++i) w.push_back(cfg.hidden);
    w.push_back(out);
    return w;
  }

  Vec scaled(std::span<const double> obs) const {
    require(int(obs.size()) == obs_dim_, "MetaPolicy: bad observation size");
    Vec s(obs.begin(), obs.end());
    for (std::size_t d = 0; d < s.size(); ++d) s[d] *= obs_scale_[d];
    return s;
  }

  static void softmax_row(const double* y, Vec& p) {
    int n = int(p.size());
    double mx = y[0];
    for (int c = 1; c < n; ++c) mx = std::max(mx, y[c]);
    double z = 0.0;
    for (int c = 0; c < n; ++c) {
      p[std::size_t(c)] = std::exp(y[c] - mx);
      z += p[std::size_t(c)];
    }
    for (int c = 0; c < n; ++c) p[std::size_t(c)] /= z;
  }

  static void softmax_inplace(Vec& y) {
    Vec p(y.size(), 0.0);
    softmax_row(y.data(), p);
    y = p;
  }

  int obs_dim_, n_actions_;
  PpoConfig cfg_;
  Vec obs_scale_;
  std::optional<Mlp> pi_, v_;
  Adam opt_pi_, opt_v_;
};

}  // namespace wurl
