#include "wurl/ot_primal.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "wurl/batch.hpp"
#include "wurl/rng.hpp"

using namespace wurl;

namespace {

StateBatch random_batch(Rng& rng, int n, int d, double scale) {
  StateBatch b(d);
  Vec pt(std::size_t(d), 0.0);
  for (int i = 0; i < n; ++i) {
    for (auto& x : pt) x = uniform_in(rng, -scale, scale);
    b.push_back(pt);
  }
  return b;
}

}  // namespace

TEST(Wd1d, HandComputedPairs) {
  // Sorted matching pairs 0-2 and 1-3, each at cost 2.
  EXPECT_DOUBLE_EQ(wd_1d(Vec{0, 1}, Vec{2, 3}), 2.0);
  // Same multiset, order scrambled.
  EXPECT_DOUBLE_EQ(wd_1d(Vec{5, 1, 3}, Vec{1, 3, 5}), 0.0);
  // Unequal sizes: the single left point carries half mass to 0 and half to 2.
  EXPECT_DOUBLE_EQ(wd_1d(Vec{0}, Vec{0, 2}), 1.0);
}

TEST(Wd1d, QuadraticCost) {
  // Pairs (0,2) and (1,3): mean of 4 and 4.
  EXPECT_DOUBLE_EQ(wd_1d(Vec{0, 1}, Vec{2, 3}, 2.0), 4.0);
}

TEST(Wd1d, SymmetryAndIdentity) {
  Rng rng(101);
  for (int t = 0; t < 50; ++t) {
    int n = 1 + uniform_int(rng, 9), m = 1 + uniform_int(rng, 9);
    Vec xs(std::size_t(n), 0.0), ys(std::size_t(m), 0.0);
    for (auto& x : xs) x = uniform_in(rng, -5, 5);
    for (auto& y : ys) y = uniform_in(rng, -5, 5);
    EXPECT_DOUBLE_EQ(wd_1d(xs, ys), wd_1d(ys, xs));
    EXPECT_DOUBLE_EQ(wd_1d(xs, xs), 0.0);
    EXPECT_GE(wd_1d(xs, ys), 0.0);
  }
}

TEST(Wd1d, AgreesWithBruteForceOracle) {
  Rng rng(202);
  for (int t = 0; t < 60; ++t) {
    int n = 1 + uniform_int(rng, 6);
    auto a = random_batch(rng, n, 1, 10.0);
    auto b = random_batch(rng, n, 1, 10.0);
    Vec xs(a.flat()), ys(b.flat());
    EXPECT_NEAR(wd_1d(xs, ys), exact_wd_oracle(a, b), 1e-9);
  }
}

TEST(Wd1d, Errors) {
  EXPECT_THROW(wd_1d(Vec{}, Vec{1.0}), std::invalid_argument);
  EXPECT_THROW(wd_1d(Vec{1.0}, Vec{0.0}, 0.5), std::invalid_argument);
}

TEST(MatchingMatrix, EqualSizesIsHalfIdentity) {
  auto P = matching_matrix(Vec{0, 1}, Vec{0, 1}).dense();
  EXPECT_DOUBLE_EQ(P[0][0], 0.5);
  EXPECT_DOUBLE_EQ(P[0][1], 0.0);
  EXPECT_DOUBLE_EQ(P[1][0], 0.0);
  EXPECT_DOUBLE_EQ(P[1][1], 0.5);
}

TEST(MatchingMatrix, TwoToThreeSplit) {
  auto P = matching_matrix(Vec{0, 1}, Vec{0, 1, 2}).dense();
  EXPECT_NEAR(P[0][0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(P[0][1], 1.0 / 6, 1e-15);
  EXPECT_NEAR(P[0][2], 0.0, 1e-15);
  EXPECT_NEAR(P[1][0], 0.0, 1e-15);
  EXPECT_NEAR(P[1][1], 1.0 / 6, 1e-15);
  EXPECT_NEAR(P[1][2], 1.0 / 3, 1e-15);
}

TEST(MatchingMatrix, UnsortedInputsKeepOriginalIndices) {
  // Sorted x: 0 (idx 1), 3 (idx 0); sorted y: 1 (idx 0), 2 (idx 1).
  auto P = matching_matrix(Vec{3, 0}, Vec{1, 2}).dense();
  EXPECT_DOUBLE_EQ(P[0][0], 0.0);
  EXPECT_DOUBLE_EQ(P[0][1], 0.5);
  EXPECT_DOUBLE_EQ(P[1][0], 0.5);
  EXPECT_DOUBLE_EQ(P[1][1], 0.0);
}

TEST(MatchingMatrix, MarginalsExactOnRandomInstances) {
  Rng rng(303);
  for (int t = 0; t < 100; ++t) {
    int n = 1 + uniform_int(rng, 12), m = 1 + uniform_int(rng, 12);
    Vec xs(std::size_t(n), 0.0), ys(std::size_t(m), 0.0);
    for (auto& x : xs) x = uniform_in(rng, -3, 3);
    for (auto& y : ys) y = uniform_in(rng, -3, 3);
    auto P = matching_matrix(xs, ys);
    for (double r : P.row_sums()) EXPECT_NEAR(r, 1.0 / n, 1e-12);
    for (double c : P.col_sums()) EXPECT_NEAR(c, 1.0 / m, 1e-12);
    EXPECT_LE(int(P.entries.size()), n + m - 1);
    for (const auto& e : P.entries) EXPECT_GT(e.w, 0.0);
  }
}

TEST(MatchingMatrix, CouplingIsMonotoneOnSortedValues) {
  Rng rng(404);
  for (int t = 0; t < 30; ++t) {
    int n = 2 + uniform_int(rng, 8), m = 2 + uniform_int(rng, 8);
    Vec xs(std::size_t(n), 0.0), ys(std::size_t(m), 0.0);
    for (auto& x : xs) x = uniform_in(rng, -3, 3);
    for (auto& y : ys) y = uniform_in(rng, -3, 3);
    auto P = matching_matrix(xs, ys);
    for (std::size_t k = 1; k < P.entries.size(); ++k) {
      EXPECT_LE(xs[std::size_t(P.entries[k - 1].i)], xs[std::size_t(P.entries[k].i)]);
      EXPECT_LE(ys[std::size_t(P.entries[k - 1].j)], ys[std::size_t(P.entries[k].j)]);
    }
  }
}

TEST(SlicedWd, IdenticalBatchesGiveZero) {
  Rng bseed(1);
  auto a = random_batch(bseed, 12, 3, 5.0);
  Rng rng(7);
  EXPECT_DOUBLE_EQ(sliced_wd(a, a, 25, rng), 0.0);
}

TEST(SlicedWd, PointMassesMatchAnalyticFactor) {
  // Two point masses 10 apart in 2-D: per direction the 1-D distance is
  // 10 |v_1|, and E|v_1| on the circle is 2 / pi.
  auto a = StateBatch::from({{0, 0}});
  auto b = StateBatch::from({{10, 0}});
  Rng rng(99);
  double est = sliced_wd(a, b, 10000, rng);
  double expect = 10.0 * 2.0 / 3.14159265358979323846;
  EXPECT_NEAR(est, expect, 0.02 * expect);
}

TEST(SlicedWd, NeverExceedsProjectedWdOnSharedDirections) {
  Rng bseed(2);
  for (int t = 0; t < 20; ++t) {
    int d = 2 + uniform_int(bseed, 3);
    auto a = random_batch(bseed, 3 + uniform_int(bseed, 10), d, 4.0);
    auto b = random_batch(bseed, 3 + uniform_int(bseed, 10), d, 4.0);
    Rng r1(505 + std::uint64_t(t)), r2(505 + std::uint64_t(t));
    EXPECT_LE(sliced_wd(a, b, 8, r1), projected_wd(a, b, 8, r2) + 1e-9);
  }
}

TEST(ProjectedWd, TranslationRecoversShiftNorm) {
  Rng bseed(3);
  auto a = random_batch(bseed, 40, 2, 6.0);
  StateBatch b(2);
  for (int i = 0; i < a.size(); ++i) {
    Vec p(a.point(i).begin(), a.point(i).end());
    p[0] += 3.0;
    p[1] += 4.0;
    b.push_back(p);
  }
  Rng rng(11);
  EXPECT_NEAR(projected_wd(a, b, 3, rng), 5.0, 1e-9);
}

TEST(ProjectedWd, UpperBoundsExactDistance) {
  Rng bseed(4);
  for (int t = 0; t < 25; ++t) {
    int d = 1 + uniform_int(bseed, 3);
    int n = 2 + uniform_int(bseed, 4);
    auto a = random_batch(bseed, n, d, 5.0);
    auto b = random_batch(bseed, n, d, 5.0);
    Rng rng(606 + std::uint64_t(t));
    EXPECT_GE(projected_wd(a, b, 6, rng), exact_wd_oracle(a, b) - 1e-9);
  }
}

TEST(ProjectedWd, DuplicatingBothBatchesIsInvariant) {
  Rng bseed(5);
  auto a = random_batch(bseed, 7, 3, 4.0);
  auto b = random_batch(bseed, 9, 3, 4.0);
  StateBatch a2 = a, b2 = b;
  a2.append(a);
  b2.append(b);
  Rng r1(77), r2(77);
  EXPECT_NEAR(projected_wd(a, b, 12, r1), projected_wd(a2, b2, 12, r2), 1e-12);

  Vec xs(a.flat().begin(), a.flat().begin() + a.size());  // reuse as plain 1-D data
  Vec xs2 = xs;
  xs2.insert(xs2.end(), xs.begin(), xs.end());
  Vec ys{0.5, -1.0, 2.0};
  Vec ys2 = ys;
  ys2.insert(ys2.end(), ys.begin(), ys.end());
  EXPECT_NEAR(wd_1d(xs, ys), wd_1d(xs2, ys2), 1e-12);
}

TEST(ProjectedWd, Errors) {
  auto a = StateBatch::from({{0, 0}});
  auto b3 = StateBatch::from({{0, 0, 0}});
  Rng rng(1);
  EXPECT_THROW(projected_wd(a, b3, 4, rng), std::invalid_argument);
  EXPECT_THROW(projected_wd(a, a, 0, rng), std::invalid_argument);
  StateBatch empty;
  EXPECT_THROW(projected_wd(a, empty, 4, rng), std::invalid_argument);
}

TEST(AmortizedRewards, TwoPointHandCase) {
  // Projections along either 1-D direction keep the pairing 0-2, 1-3, so each
  // state earns half the mass times cost 2.
  auto s = StateBatch::from({{0}, {1}});
  auto t = StateBatch::from({{2}, {3}});
  Rng rng(13);
  Vec r = amortized_rewards(s, t, 1, rng);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0], 1.0, 1e-12);
  EXPECT_NEAR(r[1], 1.0, 1e-12);
}

TEST(AmortizedRewards, CreditsSumToProjectedWd) {
  Rng bseed(6);
  for (int t = 0; t < 30; ++t) {
    int d = 2 + uniform_int(bseed, 3);
    auto s = random_batch(bseed, 2 + uniform_int(bseed, 20), d, 5.0);
    auto tgt = random_batch(bseed, 2 + uniform_int(bseed, 20), d, 5.0);
    Rng r1(808 + std::uint64_t(t)), r2(808 + std::uint64_t(t));
    double w = projected_wd(s, tgt, 10, r1);
    Vec credits = amortized_rewards(s, tgt, 10, r2);
    double sum = 0.0;
    for (double c : credits) {
      EXPECT_GE(c, 0.0);
      sum += c;
    }
    EXPECT_NEAR(sum, w, 1e-9 * std::max(1.0, std::fabs(w)));
  }
}

TEST(AmortizedRewards, DiagonalOfCouplingTimesCostTransposed) {
  // One direction in 1-D: r_i must equal sum_j P_ij C_ij exactly.
  auto s = StateBatch::from({{0}, {4}});
  auto t = StateBatch::from({{1}, {2}, {6}});
  Rng r1(21), r2(21);
  Vec credits = amortized_rewards(s, t, 1, r1);
  Vec ps(s.flat()), pt(t.flat());
  auto P = matching_matrix(ps, pt).dense();
  auto C = CostMatrix::euclidean(s, t);
  for (int i = 0; i < s.size(); ++i) {
    double ri = 0.0;
    for (int j = 0; j < t.size(); ++j) ri += P[std::size_t(i)][std::size_t(j)] * C.at(i, j);
    EXPECT_NEAR(credits[std::size_t(i)], ri, 1e-12);
  }
}

TEST(ExactOracle, HandComputedAndTranslation) {
  auto a = StateBatch::from({{0}, {1}});
  auto b = StateBatch::from({{2}, {3}});
  EXPECT_NEAR(exact_wd_oracle(a, b), 2.0, 1e-12);

  // Translation law in 2-D.
  Rng bseed(7);
  auto p = random_batch(bseed, 5, 2, 3.0);
  StateBatch q(2);
  for (int i = 0; i < p.size(); ++i) {
    Vec pt(p.point(i).begin(), p.point(i).end());
    pt[0] += 1.0;
    pt[1] += 1.0;
    q.push_back(pt);
  }
  EXPECT_NEAR(exact_wd_oracle(p, q), std::sqrt(2.0), 1e-9);
}

TEST(ExactOracle, UnequalSizesViaDuplication) {
  // {0} vs {0, 2}: half the mass moves distance 2.
  auto a = StateBatch::from({{0}});
  auto b = StateBatch::from({{0}, {2}});
  EXPECT_NEAR(exact_wd_oracle(a, b), 1.0, 1e-12);
  // 2 vs 3 points in 1-D must agree with the analytic 1-D solver.
  auto c = StateBatch::from({{0}, {1}});
  auto d = StateBatch::from({{0}, {1}, {2}});
  EXPECT_NEAR(exact_wd_oracle(c, d), wd_1d(Vec{0, 1}, Vec{0, 1, 2}), 1e-12);
}

TEST(ExactOracle, RejectsOversizedInstances) {
  Rng bseed(8);
  auto a = random_batch(bseed, 11, 2, 1.0);
  EXPECT_THROW(exact_wd_oracle(a, a), std::invalid_argument);
  // lcm(4, 6) = 12 > 10 as well.
  auto b = random_batch(bseed, 4, 2, 1.0);
  auto c = random_batch(bseed, 6, 2, 1.0);
  EXPECT_THROW(exact_wd_oracle(b, c), std::invalid_argument);
}

TEST(ExactOracle, MixingTargetsNeverHelps) {
  // W(p, 0.5 q1 + 0.5 q2) <= 0.5 W(p, q1) + 0.5 W(p, q2): gluing the two
  // conditional couplings is feasible for the mixture.
  Rng bseed(9);
  for (int t = 0; t < 40; ++t) {
    int d = 1 + uniform_int(bseed, 2);
    auto p = random_batch(bseed, 2, d, 4.0);
    auto q1 = random_batch(bseed, 2, d, 4.0);
    auto q2 = random_batch(bseed, 2, d, 4.0);
    StateBatch mix = q1;
    mix.append(q2);
    double lhs = exact_wd_oracle(p, mix);
    double rhs = 0.5 * exact_wd_oracle(p, q1) + 0.5 * exact_wd_oracle(p, q2);
    EXPECT_LE(lhs, rhs + 1e-9);
  }
}

TEST(MinPairwiseDistance, PicksNearestArchive) {
  auto batch = StateBatch::from({{0, 0}, {0.5, 0}});
  std::vector<StateBatch> archives;
  archives.push_back(StateBatch::from({{30, 30}, {31, 30}}));
  archives.push_back(StateBatch::from({{1, 0}, {1.5, 0}}));
  archives.push_back(StateBatch::from({{-20, 5}, {-21, 5}}));
  auto res = min_pairwise_distance(batch, archives, 16, SeedSeq(5));
  EXPECT_EQ(res.argmin, 1);
  ASSERT_EQ(res.all.size(), 3u);
  EXPECT_LT(res.value, 2.0);
  EXPECT_GT(res.all[0], res.value);
  EXPECT_GT(res.all[2], res.value);
  EXPECT_THROW(min_pairwise_distance(batch, {}, 16, SeedSeq(5)), std::invalid_argument);
}

TEST(MinPairwiseDistance, StableUnderArchiveOrder) {
  Rng bseed(10);
  auto batch = random_batch(bseed, 6, 2, 2.0);
  std::vector<StateBatch> archives;
  for (int j = 0; j < 3; ++j) archives.push_back(random_batch(bseed, 5, 2, 6.0));
  auto res = min_pairwise_distance(batch, archives, 8, SeedSeq(17));
  // Same archives, same per-slot seeds: values must reproduce exactly.
  auto res2 = min_pairwise_distance(batch, archives, 8, SeedSeq(17));
  for (std::size_t j = 0; j < res.all.size(); ++j) EXPECT_DOUBLE_EQ(res.all[j], res2.all[j]);
}
