#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "wurl/common.hpp"
#include "wurl/matrix.hpp"
#include "wurl/rng.hpp"

namespace wurl {

enum class Head { Linear, Tanh };

struct MlpCache {
  Matrix x;                 // batch input
  std::vector<Matrix> pre;  // pre-activations per layer
  std::vector<Matrix> act;  // post-activations per layer (act.back() = output)
  bool ready = false;
};

// Fully connected net, ReLU hidden layers, linear or tanh output head.
// Parameters live in one flat vector (per layer: W row-major, then b) so
// optimizers, clamping, hashing and serialization stay trivial.
class Mlp {
 public:
  Mlp() = default;

  Mlp(std::vector<int> widths, Head head, Rng& rng) : widths_(std::move(widths)), head_(head) {
    require(widths_.size() >= 2, "Mlp: need at least input and output widths");
    for (int w : widths_) require(w >= 1, "Mlp: widths must be positive");
    int total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      offsets_.push_back(total);
      total += widths_[l + 1] * widths_[l] + widths_[l + 1];
    }
    params_.resize(std::size_t(total));
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      double bound = 1.0 / std::sqrt(double(widths_[l]));
      double* p = params_.data() + offsets_[l];
      int count = widths_[l + 1] * widths_[l] + widths_[l + 1];
      for (int i = 0; i < count; ++i) p[i] = uniform_in(rng, -bound, bound);
    }
  }

  int in_dim() const { return widths_.front(); }
  int out_dim() const { return widths_.back(); }
  int layer_count() const { return int(widths_.size()) - 1; }
  int n_params() const { return int(params_.size()); }
  const std::vector<int>& widths() const { return widths_; }
  Head head() const { return head_; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  MatView weight(int l) const {
    return {const_cast<double*>(params_.data()) + offsets_[std::size_t(l)],
            widths_[std::size_t(l) + 1], widths_[std::size_t(l)]};
  }
  double* bias(int l) const {
    return const_cast<double*>(params_.data()) + offsets_[std::size_t(l)] +
           widths_[std::size_t(l) + 1] * widths_[std::size_t(l)];
  }
  // Same views over an external flat buffer with identical layout (gradients).
  MatView weight_in(Vec& buf, int l) const {
    return {buf.data() + offsets_[std::size_t(l)], widths_[std::size_t(l) + 1],
            widths_[std::size_t(l)]};
  }
  double* bias_in(Vec& buf, int l) const {
    return buf.data() + offsets_[std::size_t(l)] + widths_[std::size_t(l) + 1] * widths_[std::size_t(l)];
  }

  void forward(const Matrix& X, Matrix& Y, MlpCache* cache = nullptr) const {
    require(X.cols == in_dim(), "Mlp::forward: input width mismatch");
    require(X.rows >= 1, "Mlp::forward: empty batch");
    const int L = layer_count();
    if (cache) {
      cache->x = X;
      cache->pre.assign(std::size_t(L), Matrix());
      cache->act.assign(std::size_t(L), Matrix());
    }
    Matrix cur = X;
    Matrix z;
    for (int l = 0; l < L; ++l) {
      affine_forward(cur, weight(l), bias(l), z);
      if (cache) cache->pre[std::size_t(l)] = z;
      if (l + 1 < L) {
        for (double& v : z.a) v = v > 0.0 ? v : 0.0;
      } else if (head_ == Head::Tanh) {
        for (double& v : z.a) v = std::tanh(v);
      }
      if (cache) cache->act[std::size_t(l)] = z;
      cur = std::move(z);
    }
    Y = std::move(cur);
    if (cache) cache->ready = true;
  }

  Vec forward1(std::span<const double> x) const {
    Matrix X(1, int(x.size()));
    std::copy(x.begin(), x.end(), X.a.begin());
    Matrix Y;
    forward(X, Y);
    return Y.a;
  }

  // Accumulates parameter gradients into g (flat, same layout as params).
  // dY is the loss gradient at the output. Pass dX to also get input grads.
  void backward(const MlpCache& cache, const Matrix& dY, Vec& g, Matrix* dX = nullptr) const {
    require_state(cache.ready, "Mlp::backward: cache not populated by forward");
    require(int(g.size()) == n_params(), "Mlp::backward: bad gradient buffer size");
    require(dY.rows == cache.x.rows && dY.cols == out_dim(), "Mlp::backward: bad dY shape");
    const int L = layer_count();

    Matrix dZ = dY;
    if (head_ == Head::Tanh) {
      const Matrix& y = cache.act[std::size_t(L) - 1];
      for (std::size_t i = 0; i < dZ.a.size(); ++i) dZ.a[i] *= 1.0 - y.a[i] * y.a[i];
    }
    Matrix dA;
    for (int l = L - 1; l >= 0; --l) {
      const Matrix& input = l == 0 ? cache.x : cache.act[std::size_t(l) - 1];
      Vec& gref = g;
      bool need_dx = l > 0 || dX != nullptr;
      affine_backward(input, weight(l), dZ, weight_in(gref, l), bias_in(gref, l),
                      need_dx ? &dA : nullptr);
      if (l > 0) {
        const Matrix& pre = cache.pre[std::size_t(l) - 1];
        dZ = dA;
        for (std::size_t i = 0; i < dZ.a.size(); ++i)
          if (pre.a[i] <= 0.0) dZ.a[i] = 0.0;
      } else if (dX) {
        *dX = dA;
      }
    }
  }

  void clamp_params(double c) {
    require(c > 0.0, "Mlp::clamp_params: bound must be positive");
    for (double& p : params_) p = std::clamp(p, -c, c);
  }

  void zero_params() { std::fill(params_.begin(), params_.end(), 0.0); }

  std::uint64_t param_hash() const { return hash_doubles(params_); }

  void write(std::FILE* f) const {
    std::fprintf(f, "mlp %zu", widths_.size());
    for (int w : widths_) std::fprintf(f, " %d", w);
    std::fprintf(f, " %s\n", head_ == Head::Linear ? "linear" : "tanh");
    std::fprintf(f, "%d\n", n_params());
    for (double p : params_) std::fprintf(f, "%.17g\n", p);
  }

  static Mlp read(std::FILE* f) {
    std::size_t nw = 0;
    if (std::fscanf(f, " mlp %zu", &nw) != 1 || nw < 2 || nw > 64)
      throw ConfigError("checkpoint: bad mlp header");
    Mlp net;
    net.widths_.resize(nw);
    for (auto& w : net.widths_) {
      if (std::fscanf(f, "%d", &w) != 1 || w < 1) throw ConfigError("checkpoint: bad width");
    }
    char headbuf[16] = {0};
    if (std::fscanf(f, "%15s", headbuf) != 1) throw ConfigError("checkpoint: missing head");
    std::string h = headbuf;
    if (h == "linear")
      net.head_ = Head::Linear;
    else if (h == "tanh")
      net.head_ = Head::Tanh;
    else
      throw ConfigError("checkpoint: unknown head '" + h + "'");
    int total = 0;
    for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
      net.offsets_.push_back(total);
      total += net.widths_[l + 1] * net.widths_[l] + net.widths_[l + 1];
    }
    int count = 0;
    if (std::fscanf(f, "%d", &count) != 1 || count != total)
      throw ConfigError("checkpoint: parameter count mismatch");
    net.params_.resize(std::size_t(total));
    for (double& p : net.params_) {
      if (std::fscanf(f, "%lg", &p) != 1) throw ConfigError("checkpoint: truncated parameters");
      if (!std::isfinite(p)) throw ConfigError("checkpoint: non-finite parameter");
    }
    return net;
  }

 private:
  std::vector<int> widths_;
  Head head_ = Head::Linear;
  std::vector<int> offsets_;
  Vec params_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(int n, AdamConfig cfg = {}) : cfg_(cfg), m_(std::size_t(n), 0.0), v_(std::size_t(n), 0.0) {}

  // One descent step. Pass negated gradients to ascend.
  void step(Vec& params, const Vec& grads) {
    require(params.size() == m_.size() && grads.size() == m_.size(), "Adam::step: size mismatch");
    ++t_;
    double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
      params[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
    }
  }

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  Vec m_, v_;
  long t_ = 0;
};

// Central finite differences against an analytic gradient. Returns the worst
// relative error over all coordinates.
template <class LossFn>
double max_rel_grad_err(Vec& params, const Vec& analytic, LossFn&& loss, double h = 1e-5) {
  require(params.size() == analytic.size(), "max_rel_grad_err: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double save = params[i];
    params[i] = save + h;
    double lp = loss();
    params[i] = save - h;
    double lm = loss();
    params[i] = save;
    double fd = (lp - lm) / (2.0 * h);
    double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-6});
    worst = std::max(worst, std::fabs(fd - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace wurl
