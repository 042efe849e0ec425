#pragma once

#include <cmath>

#include "wurl/batch.hpp"
#include "wurl/matrix.hpp"
#include "wurl/nn.hpp"
#include "wurl/rng.hpp"

namespace wurl {

inline Matrix to_matrix(const StateBatch& b) {
  require(!b.empty(), "to_matrix: empty batch");
  Matrix m(b.size(), b.dim());
  m.a = b.flat();
  return m;
}

enum class DualForm { Tf1, Tf2 };
enum class Side { First, Second };

struct DualConfig {
  DualForm form = DualForm::Tf1;
  int hidden = 64;
  int depth = 2;          // hidden layers
  double lr = 1e-3;
  double clamp = 0.01;    // TF1 weight box
  double beta = 1.0;      // TF2 smoothing
  double exp_cap = 20.0;  // TF2 exponent clip
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
};

// Adversarial test functions for the dual Wasserstein estimates. TF1 keeps a
// single critic f with box-clamped weights (a crude Lipschitz proxy), TF2
// keeps a potential pair (mu, nu) with the smoothed exponential penalty.
class TestFunctionPair {
 public:
  TestFunctionPair(int dim, DualConfig cfg, Rng& rng) : cfg_(cfg) {
    require(dim >= 1, "TestFunctionPair: dim must be >= 1");
    require(cfg.hidden >= 1 && cfg.depth >= 1, "TestFunctionPair: bad architecture");
    require(cfg.beta > 0.0, "TestFunctionPair: beta must be positive");
    std::vector<int> widths{dim};
    for (int l = 0; l < cfg.depth; ++l) widths.push_back(cfg.hidden);
    widths.push_back(1);
    AdamConfig ac{.lr = cfg.lr, .beta1 = cfg.adam_beta1, .beta2 = cfg.adam_beta2};
    a_ = Mlp(widths, Head::Linear, rng);
    opt_a_ = Adam(a_.n_params(), ac);
    if (cfg_.form == DualForm::Tf1) {
      a_.clamp_params(cfg_.clamp);
    } else {
      b_ = Mlp(widths, Head::Linear, rng);
      opt_b_ = Adam(b_.n_params(), ac);
    }
    ga_.resize(std::size_t(a_.n_params()), 0.0);
    if (cfg_.form == DualForm::Tf2) gb_.resize(std::size_t(b_.n_params()), 0.0);
  }

  DualForm form() const { return cfg_.form; }
  const DualConfig& config() const { return cfg_; }
  void set_beta(double beta) {
    require(beta > 0.0, "TestFunctionPair: beta must be positive");
    cfg_.beta = beta;
  }

  Mlp& first_net() { return a_; }
  Mlp& second_net() {
    require_state(cfg_.form == DualForm::Tf2, "TestFunctionPair: TF1 has a single net");
    return b_;
  }

  void zero() {
    a_.zero_params();
    if (cfg_.form == DualForm::Tf2) b_.zero_params();
  }

  // Dual gap estimate of the distance: mean f(X) - mean f(Y), respectively
  // mean mu(X) - mean nu(Y).
  double estimate(const Matrix& X, const Matrix& Y) const {
    check_batches(X, Y, false);
    const Mlp& right = cfg_.form == DualForm::Tf1 ? a_ : b_;
    Matrix fx, fy;
    a_.forward(X, fx);
    right.forward(Y, fy);
    return mean(fx) - mean(fy);
  }

  // Training objective (what update() ascends). For TF1 this is the gap; for
  // TF2 the gap minus the smoothed constraint penalty over paired samples.
  double objective(const Matrix& X, const Matrix& Y) const {
    return const_cast<TestFunctionPair*>(this)->objective_grad(X, Y, nullptr, nullptr);
  }

  // One ascent step. Returns the objective at the pre-update parameters.
  double update(const Matrix& X, const Matrix& Y) {
    std::fill(ga_.begin(), ga_.end(), 0.0);
    std::fill(gb_.begin(), gb_.end(), 0.0);
    double obj = objective_grad(X, Y, &ga_, cfg_.form == DualForm::Tf2 ? &gb_ : nullptr);
    for (double& g : ga_) g = -g;  // Adam descends
    opt_a_.step(a_.params(), ga_);
    if (cfg_.form == DualForm::Tf1) {
      a_.clamp_params(cfg_.clamp);
    } else {
      for (double& g : gb_) g = -g;
      opt_b_.step(b_.params(), gb_);
    }
    return obj;
  }

  // Intrinsic reward of a state: the side whose distribution the test function
  // pushes up gets +f / +mu, the other side gets -f / -nu.
  double state_reward(std::span<const double> state, Side side) const {
    require(int(state.size()) == a_.in_dim(), "state_reward: dimension mismatch");
    if (side == Side::First) return a_.forward1(state)[0];
    const Mlp& right = cfg_.form == DualForm::Tf1 ? a_ : b_;
    return -right.forward1(state)[0];
  }

  // Batched variant used when relabeling whole episodes.
  Vec rewards_for(const Matrix& states, Side side) const {
    const Mlp& net = side == Side::First || cfg_.form == DualForm::Tf1 ? a_ : b_;
    Matrix out;
    net.forward(states, out);
    Vec r = out.a;
    if (side == Side::Second)
      for (double& v : r) v = -v;
    return r;
  }

  // Objective with optional analytic gradients; shared by update() and the
  // finite-difference suite.
  double objective_grad(const Matrix& X, const Matrix& Y, Vec* ga, Vec* gb) {
    check_batches(X, Y, cfg_.form == DualForm::Tf2);
    if (cfg_.form == DualForm::Tf1) {
      MlpCache cx, cy;
      Matrix fx, fy;
      a_.forward(X, fx, ga ? &cx : nullptr);
      a_.forward(Y, fy, ga ? &cy : nullptr);
      if (ga) {
        Matrix dx(X.rows, 1), dy(Y.rows, 1);
        for (double& v : dx.a) v = 1.0 / X.rows;
        for (double& v : dy.a) v = -1.0 / Y.rows;
        a_.backward(cx, dx, *ga);
        a_.backward(cy, dy, *ga);
      }
      return mean(fx) - mean(fy);
    }

    // TF2, paired samples: gap - beta * mean_i exp((mu_i - nu_i - c_i) / beta).
    MlpCache cx, cy;
    Matrix mu, nu;
    a_.forward(X, mu, ga ? &cx : nullptr);
    b_.forward(Y, nu, gb ? &cy : nullptr);
    const int B = X.rows;
    double gap = 0.0, penalty = 0.0;
    Matrix dmu(B, 1), dnu(B, 1);
    for (int i = 0; i < B; ++i) {
      double c = euclid({X.row(i), std::size_t(X.cols)}, {Y.row(i), std::size_t(Y.cols)});
      double t = (mu(i, 0) - nu(i, 0) - c) / cfg_.beta;
      // Linear extension above the cap keeps the penalty finite without
      // killing the restoring gradient on badly violated pairs.
      double ecap = std::exp(cfg_.exp_cap);
      bool capped = t > cfg_.exp_cap;
      double e = capped ? ecap * (1.0 + (t - cfg_.exp_cap)) : std::exp(t);
      gap += mu(i, 0) - nu(i, 0);
      penalty += e;
      double de = capped ? ecap : e;  // d(beta * e)/d mu_i
      dmu(i, 0) = (1.0 - de) / B;
      dnu(i, 0) = -(1.0 - de) / B;
    }
    if (ga) a_.backward(cx, dmu, *ga);
    if (gb) b_.backward(cy, dnu, *gb);
    return gap / B - cfg_.beta * (penalty / B);
  }

 private:
  static double mean(const Matrix& m) {
    double s = 0.0;
    for (double v : m.a) s += v;
    return s / double(m.a.size());
  }

  void check_batches(const Matrix& X, const Matrix& Y, bool paired) const {
    require(X.rows >= 1 && Y.rows >= 1, "TestFunctionPair: empty batch");
    require(X.cols == a_.in_dim() && Y.cols == a_.in_dim(),
            "TestFunctionPair: dimension mismatch");
    if (paired) require(X.rows == Y.rows, "TestFunctionPair: TF2 needs paired batches");
  }

  DualConfig cfg_;
  Mlp a_, b_;
  Adam opt_a_, opt_b_;
  Vec ga_, gb_;
};

inline double tf1_update(TestFunctionPair& pair, const Matrix& X, const Matrix& Y) {
  require_state(pair.form() == DualForm::Tf1, "tf1_update: pair is not TF1");
  return pair.update(X, Y);
}

inline double tf2_update(TestFunctionPair& pair, const Matrix& X, const Matrix& Y, double beta) {
  require_state(pair.form() == DualForm::Tf2, "tf2_update: pair is not TF2");
  pair.set_beta(beta);
  return pair.update(X, Y);
}

inline double state_reward(const TestFunctionPair& pair, std::span<const double> state,
                           Side side) {
  return pair.state_reward(state, side);
}

}  // namespace wurl
