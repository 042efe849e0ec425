#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "wurl/batch.hpp"
#include "wurl/common.hpp"
#include "wurl/rng.hpp"

namespace wurl {

// ---------------------------------------------------------------------------
// 1-D optimal transport between uniform empirical measures.
//
// Sorting both supports and matching mass north-west-corner style is exact in
// one dimension for costs |x - y|^p with p >= 1. For equal cardinalities the
// coupling degenerates to "pair i-th smallest with i-th smallest".
// ---------------------------------------------------------------------------

struct MatchEntry {
  int i, j;   // original indices into xs / ys
  double w;   // coupling mass
};

struct MatchingMatrix {
  int rows = 0, cols = 0;
  std::vector<MatchEntry> entries;  // in scan order over the sorted supports

  std::vector<std::vector<double>> dense() const {
    std::vector<std::vector<double>> P(rows, std::vector<double>(cols, 0.0));
    for (const auto& e : entries) P[e.i][e.j] += e.w;
    return P;
  }
  Vec row_sums() const {
    Vec r(rows, 0.0);
    for (const auto& e : entries) r[e.i] += e.w;
    return r;
  }
  Vec col_sums() const {
    Vec c(cols, 0.0);
    for (const auto& e : entries) c[e.j] += e.w;
    return c;
  }
};

namespace detail {
inline std::vector<int> sorted_order(std::span<const double> xs) {
  std::vector<int> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return xs[a] < xs[b]; });
  return idx;
}
}  // namespace detail

// Optimal coupling of two uniform 1-D empirical measures (any cardinalities).
// Mass is tracked in integer units of 1/(n*m) so marginals come out exact.
inline MatchingMatrix matching_matrix(std::span<const double> xs, std::span<const double> ys) {
  const int n = int(xs.size()), m = int(ys.size());
  require(n >= 1 && m >= 1, "matching_matrix: empty support");
  require(all_finite(xs) && all_finite(ys), "matching_matrix: non-finite value");

  auto ox = detail::sorted_order(xs);
  auto oy = detail::sorted_order(ys);

  MatchingMatrix P;
  P.rows = n;
  P.cols = m;
  P.entries.reserve(std::size_t(n) + m);
  const double unit = 1.0 / (double(n) * double(m));

  int i = 0, j = 0;
  long long u = m, v = n;  // units left in current row / column
  while (i < n && j < m) {
    long long w = std::min(u, v);
    P.entries.push_back({ox[std::size_t(i)], oy[std::size_t(j)], double(w) * unit});
    u -= w;
    v -= w;
    if (u == 0) { ++i; u = m; }
    if (v == 0) { ++j; v = n; }
  }
  return P;
}

// Mean transport cost |x - y|^p under the optimal 1-D coupling. p = 1 gives
// the Wasserstein-1 distance itself.
inline double wd_1d(std::span<const double> xs, std::span<const double> ys, double p = 1.0) {
  const int n = int(xs.size()), m = int(ys.size());
  require(n >= 1 && m >= 1, "wd_1d: empty support");
  require(all_finite(xs) && all_finite(ys), "wd_1d: non-finite value");
  require(p >= 1.0, "wd_1d: cost exponent must be >= 1");

  auto cost = [p](double d) { return p == 1.0 ? std::fabs(d) : std::pow(std::fabs(d), p); };

  if (n == m) {
    std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += cost(a[std::size_t(k)] - b[std::size_t(k)]);
    return s / n;
  }
  auto P = matching_matrix(xs, ys);
  double s = 0.0;
  for (const auto& e : P.entries)
    s += e.w * cost(xs[std::size_t(e.i)] - ys[std::size_t(e.j)]);
  return s;
}

// Pairwise Euclidean costs between two batches.
struct CostMatrix {
  int rows = 0, cols = 0;
  std::vector<double> c;
  double at(int i, int j) const { return c[std::size_t(i) * cols + j]; }

  static CostMatrix euclidean(const StateBatch& a, const StateBatch& b) {
    require(a.dim() == b.dim(), "CostMatrix: dimension mismatch");
    require(!a.empty() && !b.empty(), "CostMatrix: empty batch");
    CostMatrix out;
    out.rows = a.size();
    out.cols = b.size();
    out.c.resize(std::size_t(a.size()) * b.size());
    for (int i = 0; i < a.size(); ++i)
      for (int j = 0; j < b.size(); ++j)
        out.c[std::size_t(i) * out.cols + j] = euclid(a.point(i), b.point(j));
    return out;
  }
};

namespace detail {
inline void project(const StateBatch& b, const Vec& v, std::vector<double>& out) {
  out.resize(std::size_t(b.size()));
  for (int i = 0; i < b.size(); ++i) {
    const double* p = b.ptr(i);
    double s = 0.0;
    for (int k = 0; k < b.dim(); ++k) s += p[k] * v[std::size_t(k)];
    out[std::size_t(i)] = s;
  }
}

inline void check_pair(const StateBatch& a, const StateBatch& b, int k) {
  require(!a.empty() && !b.empty(), "ot: empty batch");
  require(a.dim() == b.dim(), "ot: dimension mismatch");
  require(k >= 1, "ot: need at least one projection");
}
}  // namespace detail

// Sliced Wasserstein estimate: average over K random directions of the 1-D
// distance between the projected batches.
inline double sliced_wd(const StateBatch& a, const StateBatch& b, int k_proj, Rng& rng,
                        double p = 1.0) {
  detail::check_pair(a, b, k_proj);
  std::vector<double> pa, pb;
  double acc = 0.0;
  for (int k = 0; k < k_proj; ++k) {
    Vec v = sample_direction(rng, a.dim());
    detail::project(a, v, pa);
    detail::project(b, v, pb);
    acc += wd_1d(pa, pb, p);
  }
  return acc / k_proj;
}

// Projected Wasserstein estimate: couple via the 1-D matching per direction
// but charge the full-dimensional Euclidean cost. Upper-bounds the true WD.
inline double projected_wd(const StateBatch& a, const StateBatch& b, int k_proj, Rng& rng) {
  detail::check_pair(a, b, k_proj);
  std::vector<double> pa, pb;
  double acc = 0.0;
  for (int k = 0; k < k_proj; ++k) {
    Vec v = sample_direction(rng, a.dim());
    detail::project(a, v, pa);
    detail::project(b, v, pb);
    auto P = matching_matrix(pa, pb);
    double dir = 0.0;
    for (const auto& e : P.entries) dir += e.w * euclid(a.point(e.i), b.point(e.j));
    acc += dir;
  }
  return acc / k_proj;
}

// Per-state credits r_i = (1/K) sum_k sum_j P^(k)_ij C_ij: each visited state
// earns the coupling-weighted cost of the target mass matched to it, so the
// credits of one episode sum to the projected-WD estimate itself.
inline Vec amortized_rewards(const StateBatch& states, const StateBatch& target, int k_proj,
                             Rng& rng) {
  detail::check_pair(states, target, k_proj);
  std::vector<double> pa, pb;
  Vec credits(std::size_t(states.size()), 0.0);
  for (int k = 0; k < k_proj; ++k) {
    Vec v = sample_direction(rng, states.dim());
    detail::project(states, v, pa);
    detail::project(target, v, pb);
    auto P = matching_matrix(pa, pb);
    for (const auto& e : P.entries)
      credits[std::size_t(e.i)] += e.w * euclid(states.point(e.i), target.point(e.j));
  }
  for (double& c : credits) c /= k_proj;
  return credits;
}

// ---------------------------------------------------------------------------
// Brute-force exact Wasserstein-1 between small uniform empirical measures.
// Equal cardinalities reduce to an assignment problem (permutation scan);
// unequal ones are lifted to lcm(n, m) points by duplication, which is exact
// because some optimal coupling of rational uniform marginals is integral on
// that refined grid.
// ---------------------------------------------------------------------------
inline double exact_wd_oracle(const StateBatch& a, const StateBatch& b, int max_lifted = 10) {
  require(!a.empty() && !b.empty(), "exact_wd_oracle: empty batch");
  require(a.dim() == b.dim(), "exact_wd_oracle: dimension mismatch");

  const long long n = a.size(), m = b.size();
  const long long l = std::lcm(n, m);
  require(l <= max_lifted, "exact_wd_oracle: instance too large for brute force");

  StateBatch la(a.dim()), lb(b.dim());
  for (int i = 0; i < a.size(); ++i)
    for (long long r = 0; r < l / n; ++r) la.push_back(a.point(i));
  for (int j = 0; j < b.size(); ++j)
    for (long long r = 0; r < l / m; ++r) lb.push_back(b.point(j));

  auto C = CostMatrix::euclidean(la, lb);
  std::vector<int> perm(std::size_t(l), 0);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < int(l); ++i) {
      s += C.at(i, perm[std::size_t(i)]);
      if (s >= best * l) break;
    }
    best = std::min(best, s / double(l));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Distance from one batch to its nearest neighbour among candidate archives.
// Each candidate gets its own child seed so the result does not depend on
// evaluation order.
struct MinDistanceResult {
  double value = 0.0;
  int argmin = -1;
  Vec all;
};

inline MinDistanceResult min_pairwise_distance(const StateBatch& batch,
                                               std::span<const StateBatch> archives, int k_proj,
                                               const SeedSeq& seeds) {
  require(!archives.empty(), "min_pairwise_distance: no archives");
  MinDistanceResult out;
  out.all.reserve(archives.size());
  for (std::size_t j = 0; j < archives.size(); ++j) {
    Rng rng = seeds.rng(j);
    double d = projected_wd(batch, archives[j], k_proj, rng);
    out.all.push_back(d);
    if (out.argmin < 0 || d < out.value) {
      out.value = d;
      out.argmin = int(j);
    }
  }
  return out;
}

}  // namespace wurl
