#pragma once

#include <initializer_list>
#include <span>
#include <vector>

#include "wurl/common.hpp"

namespace wurl {

// A set of points in R^d, flat row-major storage. Invariants (non-empty when
// consumed, uniform dimension, finite entries) are enforced on mutation.
class StateBatch {
 public:
  StateBatch() = default;
  explicit StateBatch(int dim) : dim_(dim) { require(dim >= 1, "StateBatch: dim must be >= 1"); }

  static StateBatch from(std::initializer_list<std::initializer_list<double>> rows) {
    StateBatch b;
    for (const auto& r : rows) {
      Vec v(r);
      b.push_back(v);
    }
    return b;
  }

  void push_back(std::span<const double> pt) {
    require(!pt.empty(), "StateBatch: empty point");
    require(all_finite(pt), "StateBatch: non-finite coordinate");
    if (dim_ == 0) dim_ = int(pt.size());
    require(int(pt.size()) == dim_, "StateBatch: inconsistent dimension");
    data_.insert(data_.end(), pt.begin(), pt.end());
    ++n_;
  }

  void append(const StateBatch& other) {
    if (other.n_ == 0) return;
    if (dim_ == 0) dim_ = other.dim_;
    require(other.dim_ == dim_, "StateBatch: inconsistent dimension");
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    n_ += other.n_;
  }

  int size() const { return n_; }
  int dim() const { return dim_; }
  bool empty() const { return n_ == 0; }

  std::span<const double> point(int i) const {
    return {data_.data() + std::size_t(i) * dim_, std::size_t(dim_)};
  }
  const double* ptr(int i) const { return data_.data() + std::size_t(i) * dim_; }
  const Vec& flat() const { return data_; }

  // Copy keeping only the listed coordinates (e.g. position-only distances).
  StateBatch select_dims(std::span<const int> dims) const {
    for (int d : dims) require(d >= 0 && d < dim_, "select_dims: index out of range");
    StateBatch out(int(dims.size()));
    Vec tmp(dims.size());
    for (int i = 0; i < n_; ++i) {
      const double* p = ptr(i);
      for (std::size_t k = 0; k < dims.size(); ++k) tmp[k] = p[dims[k]];
      out.push_back(tmp);
    }
    return out;
  }

  // Uniform subsample of m points with replacement.
  template <class RngT>
  StateBatch sample(int m, RngT& rng) const {
    require_state(n_ > 0, "StateBatch::sample: empty batch");
    StateBatch out(dim_);
    for (int i = 0; i < m; ++i) out.push_back(point(int(rng() % std::uint64_t(n_))));
    return out;
  }

 private:
  int dim_ = 0;
  int n_ = 0;
  Vec data_;
};

inline double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += sqr(a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace wurl
