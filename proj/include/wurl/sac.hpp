#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wurl/matrix.hpp"
#include "wurl/nn.hpp"
#include "wurl/replay.hpp"
#include "wurl/rng.hpp"

namespace wurl {

struct SacConfig {
  int hidden = 64;
  int depth = 2;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double discount = 0.99;
  double tau = 0.005;   // target smoothing
  double alpha = 0.1;   // fixed entropy temperature
  int batch = 128;
  std::size_t capacity = 100000;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
};

struct SacDiag {
  bool updated = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;
};

// Soft actor-critic with a squashed-Gaussian policy and twin critics.
// Observations are scaled by obs_scale before entering any net; critics see
// the normalized action tanh(z) rather than the scaled env action.
class SacAgent {
 public:
  SacAgent(int obs_dim, int act_dim, Vec action_scale, Vec obs_scale, SacConfig cfg,
           const SeedSeq& seeds)
      : cfg_(cfg),
        obs_dim_(obs_dim),
        act_dim_(act_dim),
        ascale_(std::move(action_scale)),
        oscale_(std::move(obs_scale)),
        buffer_(cfg.capacity) {
    require(obs_dim >= 1 && act_dim >= 1, "SacAgent: bad dimensions");
    require(int(ascale_.size()) == act_dim && int(oscale_.size()) == obs_dim,
            "SacAgent: scale size mismatch");
    for (double s : ascale_) require(s > 0, "SacAgent: action scale must be positive");
    require(cfg.batch >= 1 && cfg.tau > 0 && cfg.tau <= 1, "SacAgent: bad config");

    std::vector<int> pi_w{obs_dim};
    std::vector<int> q_w{obs_dim + act_dim};
    for (int l = 0; l < cfg.depth; ++l) {
      pi_w.push_back(cfg.hidden);
      q_w.push_back(cfg.hidden);
    }
    pi_w.push_back(2 * act_dim);  // mean and raw log-std
    q_w.push_back(1);

    Rng r0 = seeds.rng(0), r1 = seeds.rng(1), r2 = seeds.rng(2);
    actor_ = Mlp(pi_w, Head::Linear, r0);
    q1_ = Mlp(q_w, Head::Linear, r1);
    q2_ = Mlp(q_w, Head::Linear, r2);
    qt1_ = q1_;
    qt2_ = q2_;
    opt_actor_ = Adam(actor_.n_params(), {.lr = cfg.actor_lr});
    opt_q1_ = Adam(q1_.n_params(), {.lr = cfg.critic_lr});
    opt_q2_ = Adam(q2_.n_params(), {.lr = cfg.critic_lr});
  }

  const SacConfig& config() const { return cfg_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  Mlp& actor() { return actor_; }
  const Mlp& actor() const { return actor_; }
  Mlp& q1() { return q1_; }
  Mlp& q2() { return q2_; }
  Mlp& target_q1() { return qt1_; }
  Mlp& target_q2() { return qt2_; }

  Vec act(std::span<const double> obs, bool deterministic, Rng& rng) const {
    require(int(obs.size()) == obs_dim_, "SacAgent::act: bad observation size");
    Vec in(obs.begin(), obs.end());
    for (int k = 0; k < obs_dim_; ++k) in[std::size_t(k)] *= oscale_[std::size_t(k)];
    Vec out = actor_.forward1(in);
    Vec a(std::size_t(act_dim_), 0.0);
    for (int k = 0; k < act_dim_; ++k) {
      double z = out[std::size_t(k)];
      if (!deterministic) {
        double logstd = std::clamp(out[std::size_t(act_dim_ + k)], cfg_.log_std_min, cfg_.log_std_max);
        z += std::exp(logstd) * std_normal(rng);
      }
      a[std::size_t(k)] = ascale_[std::size_t(k)] * std::tanh(z);
    }
    return a;
  }

  void add(Transition t) {
    require(int(t.s.size()) == obs_dim_ && int(t.s2.size()) == obs_dim_ &&
                int(t.a.size()) == act_dim_,
            "SacAgent::add: shape mismatch");
    buffer_.add(std::move(t));
  }

  // One gradient step on a uniform batch: critics toward the soft Bellman
  // target, actor against min of the fresh critics, then a Polyak update of
  // the target critics. No-op (with signal) until the buffer holds a batch.
  SacDiag update(Rng& rng) {
    SacDiag diag;
    if (buffer_.size() < std::size_t(cfg_.batch)) return diag;
    const int B = cfg_.batch;
    buffer_.sample_indices(B, rng, idx_);

    Matrix S(B, obs_dim_), A(B, act_dim_), S2(B, obs_dim_);
    Vec r(std::size_t(B), 0.0);
    std::vector<char> term(std::size_t(B), 0);
    for (int i = 0; i < B; ++i) {
      const Transition& t = buffer_.at(idx_[std::size_t(i)]);
      for (int k = 0; k < obs_dim_; ++k) {
        S(i, k) = t.s[std::size_t(k)] * oscale_[std::size_t(k)];
        S2(i, k) = t.s2[std::size_t(k)] * oscale_[std::size_t(k)];
      }
      for (int k = 0; k < act_dim_; ++k)
        A(i, k) = t.a[std::size_t(k)] / ascale_[std::size_t(k)];  // back to tanh space
      r[std::size_t(i)] = t.r;
      term[std::size_t(i)] = t.terminal ? 1 : 0;
    }

    // Soft Bellman target from the target critics and a fresh policy sample.
    Matrix eps2(B, act_dim_);
    for (double& e : eps2.a) e = std_normal(rng);
    Matrix T2, LOGP2;
    policy_sample(S2, eps2, T2, LOGP2, nullptr, nullptr, nullptr);
    Matrix qin2 = concat(S2, T2);
    Matrix qv1, qv2;
    qt1_.forward(qin2, qv1);
    qt2_.forward(qin2, qv2);
    Vec y(std::size_t(B), 0.0);
    for (int i = 0; i < B; ++i) {
      double q = std::min(qv1(i, 0), qv2(i, 0)) - cfg_.alpha * LOGP2(i, 0);
      y[std::size_t(i)] = r[std::size_t(i)] + (term[std::size_t(i)] ? 0.0 : cfg_.discount * q);
    }

    grad_q1_.assign(std::size_t(q1_.n_params()), 0.0);
    grad_q2_.assign(std::size_t(q2_.n_params()), 0.0);
    diag.critic_loss = critic_loss_grad(S, A, y, &grad_q1_, &grad_q2_);
    opt_q1_.step(q1_.params(), grad_q1_);
    opt_q2_.step(q2_.params(), grad_q2_);

    Matrix eps(B, act_dim_);
    for (double& e : eps.a) e = std_normal(rng);
    grad_actor_.assign(std::size_t(actor_.n_params()), 0.0);
    double entropy = 0.0;
    diag.actor_loss = actor_loss_grad(S, eps, &grad_actor_, &entropy);
    opt_actor_.step(actor_.params(), grad_actor_);

    polyak(qt1_, q1_, cfg_.tau);
    polyak(qt2_, q2_, cfg_.tau);

    diag.updated = true;
    diag.entropy = entropy;
    return diag;
  }

  // L = 0.5 mean (q1 - y)^2 + 0.5 mean (q2 - y)^2 on already-scaled S and
  // tanh-space A. Gradients accumulate into g1 / g2 when given.
  double critic_loss_grad(const Matrix& S, const Matrix& A, const Vec& y, Vec* g1, Vec* g2) {
    const int B = S.rows;
    Matrix qin = concat(S, A);
    MlpCache c1, c2;
    Matrix v1, v2;
    q1_.forward(qin, v1, g1 ? &c1 : nullptr);
    q2_.forward(qin, v2, g2 ? &c2 : nullptr);
    double loss = 0.0;
    Matrix d1(B, 1), d2(B, 1);
    for (int i = 0; i < B; ++i) {
      double e1 = v1(i, 0) - y[std::size_t(i)];
      double e2 = v2(i, 0) - y[std::size_t(i)];
      loss += 0.5 * (e1 * e1 + e2 * e2) / B;
      d1(i, 0) = e1 / B;
      d2(i, 0) = e2 / B;
    }
    if (g1) q1_.backward(c1, d1, *g1);
    if (g2) q2_.backward(c2, d2, *g2);
    return loss;
  }

  // L = mean( alpha * log pi(a|s) - min_q(s, a) ) with reparametrized a and
  // fixed noise eps; critics are held constant. Used by update() and the
  // finite-difference suite.
  double actor_loss_grad(const Matrix& S, const Matrix& eps, Vec* ga, double* entropy_out = nullptr) {
    const int B = S.rows;
    Matrix T, LOGP, MU, RAW;
    MlpCache actor_cache;
    policy_sample(S, eps, T, LOGP, ga ? &actor_cache : nullptr, &MU, &RAW);

    Matrix qin = concat(S, T);
    MlpCache c1, c2;
    Matrix v1, v2;
    q1_.forward(qin, v1, ga ? &c1 : nullptr);
    q2_.forward(qin, v2, ga ? &c2 : nullptr);

    double loss = 0.0, entropy = 0.0;
    for (int i = 0; i < B; ++i) {
      loss += (cfg_.alpha * LOGP(i, 0) - std::min(v1(i, 0), v2(i, 0))) / B;
      entropy -= LOGP(i, 0) / B;
    }
    if (entropy_out) *entropy_out = entropy;
    if (!ga) return loss;

    // dq/dt via the argmin critic only.
    Matrix d1(B, 1), d2(B, 1);
    for (int i = 0; i < B; ++i) {
      if (v1(i, 0) <= v2(i, 0))
        d1(i, 0) = -1.0 / B;
      else
        d2(i, 0) = -1.0 / B;
    }
    scratch_gq_.assign(std::size_t(q1_.n_params()), 0.0);  // discarded
    Matrix dqin1, dqin2;
    q1_.backward(c1, d1, scratch_gq_, &dqin1);
    scratch_gq_.assign(std::size_t(q2_.n_params()), 0.0);
    q2_.backward(c2, d2, scratch_gq_, &dqin2);

    // Chain into the actor head: columns [0, act) are means, [act, 2 act) raw
    // log-stds (clamp masks their gradient outside the box).
    Matrix dOut(B, 2 * act_dim_);
    const double eg = 1e-6;
    for (int i = 0; i < B; ++i) {
      for (int k = 0; k < act_dim_; ++k) {
        double t = T(i, k);
        double sk = ascale_[std::size_t(k)];
        double raw = RAW(i, k);
        bool inside = raw > cfg_.log_std_min && raw < cfg_.log_std_max;
        double logstd = std::clamp(raw, cfg_.log_std_min, cfg_.log_std_max);
        double sigma = std::exp(logstd);
        double one_m_t2 = 1.0 - t * t;
        double dq_dt = dqin1(i, obs_dim_ + k) + dqin2(i, obs_dim_ + k);  // one is zero
        double glogp_z = 2.0 * sk * t * one_m_t2 / (sk * one_m_t2 + eg);
        double dmu = cfg_.alpha / B * glogp_z + dq_dt * one_m_t2;
        double draw =
            cfg_.alpha / B * (-1.0 + glogp_z * sigma * eps(i, k)) + dq_dt * one_m_t2 * sigma * eps(i, k);
        dOut(i, k) = dmu;
        dOut(i, act_dim_ + k) = inside ? draw : 0.0;
      }
    }
    actor_.backward(actor_cache, dOut, *ga);
    return loss;
  }

  void write(std::FILE* f) const {
    std::fprintf(f, "sacagent 1 %d %d\n", obs_dim_, act_dim_);
    std::fprintf(f, "ascale");
    for (double v : ascale_) std::fprintf(f, " %.17g", v);
    std::fprintf(f, "\noscale");
    for (double v : oscale_) std::fprintf(f, " %.17g", v);
    std::fprintf(f, "\n");
    actor_.write(f);
    q1_.write(f);
    q2_.write(f);
    qt1_.write(f);
    qt2_.write(f);
  }

  // Rebuilds nets and scales; optimizer state and replay buffer start fresh.
  static SacAgent read(std::FILE* f, SacConfig cfg) {
    int version = 0, od = 0, ad = 0;
    if (std::fscanf(f, " sacagent %d %d %d", &version, &od, &ad) != 3 || version != 1 || od < 1 ||
        ad < 1)
      throw ConfigError("checkpoint: bad sacagent header");
    Vec as(std::size_t(ad), 0.0), os(std::size_t(od), 0.0);
    char tag[16] = {0};
    if (std::fscanf(f, "%15s", tag) != 1 || std::string(tag) != "ascale")
      throw ConfigError("checkpoint: missing ascale");
    for (double& v : as)
      if (std::fscanf(f, "%lg", &v) != 1) throw ConfigError("checkpoint: bad ascale");
    if (std::fscanf(f, "%15s", tag) != 1 || std::string(tag) != "oscale")
      throw ConfigError("checkpoint: missing oscale");
    for (double& v : os)
      if (std::fscanf(f, "%lg", &v) != 1) throw ConfigError("checkpoint: bad oscale");
    SacAgent agent(od, ad, as, os, cfg, SeedSeq(0));
    agent.actor_ = Mlp::read(f);
    agent.q1_ = Mlp::read(f);
    agent.q2_ = Mlp::read(f);
    agent.qt1_ = Mlp::read(f);
    agent.qt2_ = Mlp::read(f);
    if (agent.actor_.in_dim() != od || agent.q1_.in_dim() != od + ad)
      throw ConfigError("checkpoint: net shapes do not match header");
    agent.opt_actor_ = Adam(agent.actor_.n_params(), {.lr = cfg.actor_lr});
    agent.opt_q1_ = Adam(agent.q1_.n_params(), {.lr = cfg.critic_lr});
    agent.opt_q2_ = Adam(agent.q2_.n_params(), {.lr = cfg.critic_lr});
    return agent;
  }

  std::uint64_t actor_hash() const { return actor_.param_hash(); }

 private:
  static Matrix concat(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
      std::copy(a.row(i), a.row(i) + a.cols, out.row(i));
      std::copy(b.row(i), b.row(i) + b.cols, out.row(i) + a.cols);
    }
    return out;
  }

  static void polyak(Mlp& target, const Mlp& online, double tau) {
    Vec& tp = target.params();
    const Vec& op = online.params();
    for (std::size_t i = 0; i < tp.size(); ++i) tp[i] = tau * op[i] + (1.0 - tau) * tp[i];
  }

  // Reparametrized squashed-Gaussian sample for already-scaled observations:
  // t = tanh(mu + sigma * eps), log-prob of the scaled env action s * t.
  void policy_sample(const Matrix& S, const Matrix& eps, Matrix& T, Matrix& LOGP,
                     MlpCache* cache, Matrix* MU, Matrix* RAW) {
    const int B = S.rows;
    Matrix out;
    actor_.forward(S, out, cache);
    T.resize(B, act_dim_);
    LOGP.resize(B, 1);
    if (MU) MU->resize(B, act_dim_);
    if (RAW) RAW->resize(B, act_dim_);
    const double eg = 1e-6;
    const double log2pi = 1.8378770664093454836;
    for (int i = 0; i < B; ++i) {
      double lp = 0.0;
      for (int k = 0; k < act_dim_; ++k) {
        double mu = out(i, k);
        double raw = out(i, act_dim_ + k);
        double logstd = std::clamp(raw, cfg_.log_std_min, cfg_.log_std_max);
        double sigma = std::exp(logstd);
        double z = mu + sigma * eps(i, k);
        double t = std::tanh(z);
        T(i, k) = t;
        if (MU) (*MU)(i, k) = mu;
        if (RAW) (*RAW)(i, k) = raw;
        lp += -0.5 * log2pi - logstd - 0.5 * eps(i, k) * eps(i, k) -
              std::log(ascale_[std::size_t(k)] * (1.0 - t * t) + eg);
      }
      LOGP(i, 0) = lp;
    }
  }

  SacConfig cfg_;
  int obs_dim_, act_dim_;
  Vec ascale_, oscale_;
  Mlp actor_, q1_, q2_, qt1_, qt2_;
  Adam opt_actor_, opt_q1_, opt_q2_;
  ReplayBuffer buffer_;
  std::vector<std::size_t> idx_;
  Vec grad_actor_, grad_q1_, grad_q2_, scratch_gq_;
};

}  // namespace wurl
