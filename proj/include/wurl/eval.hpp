#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "wurl/env.hpp"
#include "wurl/nn.hpp"
#include "wurl/ot_primal.hpp"
#include "wurl/sac.hpp"

namespace wurl {

struct DiscriminatorConfig {
  int hidden = 64;
  int depth = 2;
  double lr = 1e-3;
  int epochs = 100;      // passes over the training split
  int batch = 128;
  double holdout = 0.2;  // held-out fraction per class
};

// Softmax classifier from states to policy labels. Inputs are standardized
// with pooled per-dimension statistics before they reach the network.
class Discriminator {
 public:
  Discriminator(int dim, int classes, const DiscriminatorConfig& cfg, Rng& init_rng)
      : dim_(dim),
        classes_(classes),
        cfg_(cfg),
        net_(make_widths(dim, classes, cfg), Head::Linear, init_rng),
        opt_(net_.n_params(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}),
        grad_(std::size_t(net_.n_params()), 0.0),
        shift_(std::size_t(dim), 0.0),
        scale_(std::size_t(dim), 1.0) {
    require(classes >= 2, "Discriminator: need at least two classes");
  }

  void fit_scaling(const Matrix& X) {
    for (int d = 0; d < dim_; ++d) {
      double m = 0.0;
      for (int i = 0; i < X.rows; ++i) m += X(i, d);
      m /= double(X.rows);
      double v = 0.0;
      for (int i = 0; i < X.rows; ++i) v += sqr(X(i, d) - m);
      v /= double(X.rows);
      shift_[std::size_t(d)] = m;
      scale_[std::size_t(d)] = 1.0 / std::max(std::sqrt(v), 1e-8);
    }
  }

  // Mean cross-entropy over the batch, with optional parameter gradients.
  double loss_grad(const Matrix& X, const std::vector<int>& labels, Vec* grad) {
    int B = X.rows;
    require(int(labels.size()) == B, "Discriminator: label count mismatch");
    Matrix Xs = scaled(X);
    Matrix Y;
    MlpCache cache;
    net_.forward(Xs, Y, grad ? &cache : nullptr);
    Matrix dY(B, classes_);
    double loss = 0.0;
    Vec p(std::size_t(classes_), 0.0);
    for (int i = 0; i < B; ++i) {
      softmax_row(Y.row(i), p);
      loss -= std::log(std::max(p[std::size_t(labels[std::size_t(i)])], 1e-300));
      for (int c = 0; c < classes_; ++c)
        dY(i, c) = (p[std::size_t(c)] - (c == labels[std::size_t(i)] ? 1.0 : 0.0)) / double(B);
    }
    if (grad) net_.backward(cache, dY, *grad, nullptr);
    return loss / double(B);
  }

  // One cross-entropy minibatch step; returns the batch loss.
  double step(const Matrix& X, const std::vector<int>& labels) {
    std::fill(grad_.begin(), grad_.end(), 0.0);
    double loss = loss_grad(X, labels, &grad_);
    opt_.step(net_.params(), grad_);
    return loss;
  }

  int predict(std::span<const double> x) const {
    require(int(x.size()) == dim_, "Discriminator::predict: bad input size");
    Vec xs(x.begin(), x.end());
    for (int d = 0; d < dim_; ++d) xs[std::size_t(d)] = (xs[std::size_t(d)] - shift_[std::size_t(d)]) * scale_[std::size_t(d)];
    Vec y = net_.forward1(xs);
    return int(std::max_element(y.begin(), y.end()) - y.begin());
  }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  static std::vector<int> make_widths(int dim, int classes, const DiscriminatorConfig& cfg) {
    std::vector<int> w{dim};
    for (int i = 0; i < cfg.depth; ++i) w.push_back(cfg.hidden);
    w.push_back(classes);
    return w;
  }

  Matrix scaled(const Matrix& X) const {
    Matrix Xs = X;
    for (int i = 0; i < Xs.rows; ++i)
      for (int d = 0; d < dim_; ++d)
        Xs(i, d) = (Xs(i, d) - shift_[std::size_t(d)]) * scale_[std::size_t(d)];
    return Xs;
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

  int dim_, classes_;
  DiscriminatorConfig cfg_;
  Mlp net_;
  Adam opt_;
  Vec grad_, shift_, scale_;
};

struct DsrResult {
  double accuracy = 0.0;  // held-out discriminator success rate
  int held_out = 0;
  int trained_on = 0;
};

// Trains a fresh discriminator on a stratified split of the archives and
// reports held-out accuracy. Every archive needs at least two states so both
// splits are populated.
inline DsrResult discriminator_success_rate(std::span<const StateBatch> archives,
                                            const DiscriminatorConfig& cfg,
                                            const SeedSeq& seeds) {
  require(archives.size() >= 2, "discriminator_success_rate: need at least two archives");
  int dim = archives[0].dim();
  for (const auto& a : archives) {
    require(a.size() >= 2, "discriminator_success_rate: archive too small to split");
    require(a.dim() == dim, "discriminator_success_rate: dimension mismatch");
  }
  Rng split_rng = seeds.rng(0);
  Rng batch_rng = seeds.rng(1);
  Rng init_rng = seeds.rng(2);

  struct Row {
    int archive, index;
  };
  std::vector<Row> train, held;
  for (std::size_t a = 0; a < archives.size(); ++a) {
    std::vector<int> idx(std::size_t(archives[a].size()), 0);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), split_rng);
    int k = std::clamp(int(std::lround(cfg.holdout * double(idx.size()))), 1,
                       int(idx.size()) - 1);
    for (int i = 0; i < int(idx.size()); ++i)
      (i < k ? held : train).push_back(Row{int(a), idx[std::size_t(i)]});
  }

  Discriminator disc(dim, int(archives.size()), cfg, init_rng);
  {
    Matrix all(int(train.size()), dim);
    for (std::size_t i = 0; i < train.size(); ++i) {
      auto pt = archives[std::size_t(train[i].archive)].point(train[i].index);
      for (int d = 0; d < dim; ++d) all(int(i), d) = pt[std::size_t(d)];
    }
    disc.fit_scaling(all);
  }

  int steps_per_epoch = std::max<int>(1, int(train.size()) / cfg.batch);
  Matrix X(cfg.batch, dim);
  std::vector<int> labels(std::size_t(cfg.batch), 0);
  for (int e = 0; e < cfg.epochs; ++e) {
    for (int t = 0; t < steps_per_epoch; ++t) {
      for (int i = 0; i < cfg.batch; ++i) {
        const Row& r = train[std::size_t(uniform_int(batch_rng, int(train.size())))];
        auto pt = archives[std::size_t(r.archive)].point(r.index);
        for (int d = 0; d < dim; ++d) X(i, d) = pt[std::size_t(d)];
        labels[std::size_t(i)] = r.archive;
      }
      disc.step(X, labels);
    }
  }

  int correct = 0;
  for (const Row& r : held)
    if (disc.predict(archives[std::size_t(r.archive)].point(r.index)) == r.archive) ++correct;
  DsrResult res;
  res.held_out = int(held.size());
  res.trained_on = int(train.size());
  res.accuracy = double(correct) / double(held.size());
  return res;
}

// Pairwise projected-WD matrix over archives. Each unordered pair is
// estimated once from its own seed and mirrored, so the matrix is exactly
// symmetric and independent of evaluation order.
inline Matrix pairwise_wd_matrix(std::span<const StateBatch> archives, int projections,
                                 int samples, const SeedSeq& seeds) {
  require(!archives.empty(), "pairwise_wd_matrix: no archives");
  int n = int(archives.size());
  Matrix M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      SeedSeq pair_seeds = seeds.at(std::uint64_t(i)).at(std::uint64_t(j));
      Rng ri = pair_seeds.rng(0);
      Rng rj = pair_seeds.rng(1);
      Rng dirs = pair_seeds.rng(2);
      StateBatch a =
          samples > 0 ? archives[std::size_t(i)].sample(samples, ri) : archives[std::size_t(i)];
      StateBatch b =
          samples > 0 ? archives[std::size_t(j)].sample(samples, rj) : archives[std::size_t(j)];
      double d = projected_wd(a, b, projections, dirs);
      M(i, j) = d;
      M(j, i) = d;
    }
  }
  return M;
}

struct EvalConfig {
  int projections = 64;  // directions per pairwise estimate
  int wd_samples = 256;  // subsample per archive for the WD matrix
  DiscriminatorConfig disc;
};

struct DiversityReport {
  int policies = 0;
  double dsr = 0.0;
  double mean_pairwise_wd = 0.0;
  Matrix wd;
  std::vector<int> sample_counts;
  DsrResult dsr_detail;

  std::string to_text() const {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "policies %d\n", policies);
    out += line;
    std::snprintf(line, sizeof line, "dsr %.9g\n", dsr);
    out += line;
    std::snprintf(line, sizeof line, "mean_pairwise_wd %.9g\n", mean_pairwise_wd);
    out += line;
    out += "samples";
    for (int c : sample_counts) {
      std::snprintf(line, sizeof line, " %d", c);
      out += line;
    }
    out += "\nwd_matrix\n";
    for (int i = 0; i < wd.rows; ++i) {
      for (int j = 0; j < wd.cols; ++j) {
        std::snprintf(line, sizeof line, j + 1 == wd.cols ? "%.9g" : "%.9g ", wd(i, j));
        out += line;
      }
      out += "\n";
    }
    return out;
  }
};

inline DiversityReport evaluate_diversity(std::span<const StateBatch> archives,
                                          const EvalConfig& cfg, std::uint64_t seed) {
  SeedSeq seeds(seed);
  DiversityReport rep;
  rep.policies = int(archives.size());
  for (const auto& a : archives) rep.sample_counts.push_back(a.size());
  rep.wd = pairwise_wd_matrix(archives, cfg.projections, cfg.wd_samples, seeds.at(0));
  int pairs = 0;
  for (int i = 0; i < rep.wd.rows; ++i)
    for (int j = i + 1; j < rep.wd.cols; ++j) {
      rep.mean_pairwise_wd += rep.wd(i, j);
      ++pairs;
    }
  if (pairs > 0) rep.mean_pairwise_wd /= double(pairs);
  if (archives.size() >= 2) {
    rep.dsr_detail = discriminator_success_rate(archives, cfg.disc, seeds.at(1));
    rep.dsr = rep.dsr_detail.accuracy;
  }
  return rep;
}

// Visited-state archive from rollouts of a trained policy. Deterministic
// rollouts repeat the same trajectory in this deterministic environment;
// stochastic ones sample the policy's actual visitation distribution.
inline StateBatch collect_archive(const EnvConfig& env_cfg, SacAgent& agent, int episodes,
                                  bool deterministic, Rng& rng) {
  require(episodes >= 1, "collect_archive: need at least one episode");
  ParticleEnv env(env_cfg);
  StateBatch out(ParticleEnv::kObsDim);
  for (int e = 0; e < episodes; ++e) {
    Vec s = env.reset();
    while (!env.done()) {
      StepResult res = env.step(agent.act(s, deterministic, rng));
      out.push_back(res.obs);
      s = res.obs;
    }
  }
  return out;
}

// Baseline archive from a uniform-random policy.
inline StateBatch collect_random_archive(const EnvConfig& env_cfg, int episodes, Rng& rng) {
  require(episodes >= 1, "collect_random_archive: need at least one episode");
  ParticleEnv env(env_cfg);
  StateBatch out(ParticleEnv::kObsDim);
  for (int e = 0; e < episodes; ++e) {
    Vec s = env.reset();
    while (!env.done()) {
      Vec a{uniform_in(rng, -env_cfg.a_max, env_cfg.a_max),
            uniform_in(rng, -env_cfg.a_max, env_cfg.a_max)};
      StepResult res = env.step(a);
      out.push_back(res.obs);
      s = res.obs;
    }
  }
  return out;
}

}  // namespace wurl
