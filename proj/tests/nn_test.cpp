#include "wurl/nn.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdio>

#include "wurl/rng.hpp"

using namespace wurl;

namespace {

Matrix random_matrix(Rng& rng, int r, int c, double scale) {
  Matrix m(r, c);
  for (double& v : m.a) v = uniform_in(rng, -scale, scale);
  return m;
}

double mse_loss(const Mlp& net, const Matrix& X, const Matrix& T, Vec* grads) {
  MlpCache cache;
  Matrix Y;
  net.forward(X, Y, grads ? &cache : nullptr);
  double loss = 0.0;
  Matrix dY(Y.rows, Y.cols);
  for (std::size_t i = 0; i < Y.a.size(); ++i) {
    double e = Y.a[i] - T.a[i];
    loss += e * e;
    dY.a[i] = 2.0 * e / double(Y.rows);
  }
  loss /= double(Y.rows);
  if (grads) net.backward(cache, dY, *grads);
  return loss;
}

}  // namespace

TEST(Mlp, SingleLinearLayerIsAffineMap) {
  Rng rng(1);
  Mlp net({2, 2}, Head::Linear, rng);
  // Overwrite with hand-picked parameters: W = [[1,2],[3,4]], b = [10, 20].
  net.params() = Vec{1, 2, 3, 4, 10, 20};
  Vec y = net.forward1(Vec{1, 1});
  ASSERT_EQ(y.size(), 2u);
  EXPECT_DOUBLE_EQ(y[0], 13.0);
  EXPECT_DOUBLE_EQ(y[1], 27.0);
}

TEST(Mlp, ZeroParamsGiveZeroOutput) {
  Rng rng(2);
  Mlp net({3, 8, 8, 2}, Head::Linear, rng);
  net.zero_params();
  for (double v : net.forward1(Vec{0.3, -4.0, 2.5})) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Mlp, TanhHeadStaysBounded) {
  Rng rng(3);
  Mlp net({2, 16, 3}, Head::Tanh, rng);
  for (double& p : net.params()) p *= 50.0;
  Vec y = net.forward1(Vec{100.0, -40.0});
  for (double v : y) {
    EXPECT_LE(v, 1.0);
    EXPECT_GE(v, -1.0);
  }
}

TEST(Mlp, BackwardRequiresForwardCache) {
  Rng rng(4);
  Mlp net({2, 4, 1}, Head::Linear, rng);
  MlpCache cache;
  Matrix dY(1, 1);
  Vec g(std::size_t(net.n_params()), 0.0);
  EXPECT_THROW(net.backward(cache, dY, g), std::logic_error);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    Head head = trial % 2 == 0 ? Head::Linear : Head::Tanh;
    Mlp net({3, 8, 8, 2}, head, rng);
    Matrix X = random_matrix(rng, 5, 3, 2.0);
    Matrix T = random_matrix(rng, 5, 2, 0.8);
    Vec grads(std::size_t(net.n_params()), 0.0);
    mse_loss(net, X, T, &grads);
    double err = max_rel_grad_err(net.params(), grads,
                                  [&] { return mse_loss(net, X, T, nullptr); });
    EXPECT_LT(err, 1e-4) << "head " << int(head);
  }
}

TEST(Mlp, InputGradientsMatchFiniteDifferences) {
  Rng rng(6);
  Mlp net({4, 8, 1}, Head::Linear, rng);
  Matrix X = random_matrix(rng, 3, 4, 1.5);
  MlpCache cache;
  Matrix Y;
  net.forward(X, Y, &cache);
  Matrix dY(3, 1);
  for (double& v : dY.a) v = 1.0;  // loss = sum of outputs
  Vec g(std::size_t(net.n_params()), 0.0);
  Matrix dX;
  net.backward(cache, dY, g, &dX);

  const double h = 1e-6;
  for (std::size_t i = 0; i < X.a.size(); ++i) {
    Matrix Xp = X, Xm = X;
    Xp.a[i] += h;
    Xm.a[i] -= h;
    Matrix Yp, Ym;
    net.forward(Xp, Yp);
    net.forward(Xm, Ym);
    double sp = 0.0, sm = 0.0;
    for (double v : Yp.a) sp += v;
    for (double v : Ym.a) sm += v;
    double fd = (sp - sm) / (2.0 * h);
    EXPECT_NEAR(dX.a[i], fd, 1e-4 * std::max(1.0, std::fabs(fd)));
  }
}

TEST(Mlp, LearnsXor) {
  Rng rng(7);
  Mlp net({2, 8, 8, 1}, Head::Linear, rng);
  Matrix X(4, 2), T(4, 1);
  double xs[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  double ts[4] = {0, 1, 1, 0};
  for (int i = 0; i < 4; ++i) {
    X(i, 0) = xs[i][0];
    X(i, 1) = xs[i][1];
    T(i, 0) = ts[i];
  }
  Adam opt(net.n_params(), {.lr = 0.01});
  Vec grads(std::size_t(net.n_params()), 0.0);
  double loss = 1.0;
  for (int step = 0; step < 800; ++step) {
    std::fill(grads.begin(), grads.end(), 0.0);
    loss = mse_loss(net, X, T, &grads);
    opt.step(net.params(), grads);
  }
  EXPECT_LT(loss, 0.01);
}

TEST(Mlp, ClampBoundsEveryParameter) {
  Rng rng(8);
  Mlp net({2, 8, 1}, Head::Linear, rng);
  for (double& p : net.params()) p *= 100.0;
  net.clamp_params(0.01);
  for (double p : net.params()) {
    EXPECT_LE(p, 0.01);
    EXPECT_GE(p, -0.01);
  }
  EXPECT_THROW(net.clamp_params(0.0), std::invalid_argument);
}

TEST(Mlp, CheckpointRoundTripsBitExactly) {
  Rng rng(9);
  Mlp net({3, 16, 16, 4}, Head::Tanh, rng);
  std::string path = testing::TempDir() + "/mlp_roundtrip.txt";
  std::FILE* f = std::fopen(path.c_str(), "w");
  ASSERT_NE(f, nullptr);
  net.write(f);
  std::fclose(f);

  f = std::fopen(path.c_str(), "r");
  ASSERT_NE(f, nullptr);
  Mlp back = Mlp::read(f);
  std::fclose(f);

  ASSERT_EQ(back.n_params(), net.n_params());
  for (int i = 0; i < net.n_params(); ++i)
    EXPECT_EQ(back.params()[std::size_t(i)], net.params()[std::size_t(i)]);
  EXPECT_EQ(back.param_hash(), net.param_hash());
  EXPECT_EQ(back.head(), net.head());
  EXPECT_EQ(back.widths(), net.widths());
}

TEST(Mlp, CorruptCheckpointIsRejected) {
  Rng rng(10);
  Mlp net({2, 4, 1}, Head::Linear, rng);
  std::string path = testing::TempDir() + "/mlp_corrupt.txt";
  std::FILE* f = std::fopen(path.c_str(), "w");
  ASSERT_NE(f, nullptr);
  net.write(f);
  std::fclose(f);

  // Truncate away the tail of the parameter list.
  f = std::fopen(path.c_str(), "r+");
  ASSERT_NE(f, nullptr);
  std::fseek(f, 0, SEEK_END);
  long size = std::ftell(f);
  ASSERT_EQ(0, ftruncate(fileno(f), size / 2));
  std::fclose(f);

  f = std::fopen(path.c_str(), "r");
  ASSERT_NE(f, nullptr);
  EXPECT_THROW(Mlp::read(f), ConfigError);
  std::fclose(f);
}

TEST(Adam, ZeroGradientLeavesParamsUntouched) {
  Adam opt(3);
  Vec params{1.0, -2.0, 0.5};
  Vec zero(3, 0.0);
  Vec before = params;
  opt.step(params, zero);
  opt.step(params, zero);
  EXPECT_EQ(params, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With constant gradient 1 the bias-corrected ratio is exactly 1, so the
  // first update is lr / (1 + eps) regardless of betas.
  Adam opt(1, {.lr = 1e-3});
  Vec params{0.0};
  Vec grads{1.0};
  opt.step(params, grads);
  EXPECT_NEAR(params[0], -1e-3, 1e-10);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, SizeMismatchThrows) {
  Adam opt(2);
  Vec params{1.0, 2.0};
  Vec grads{1.0};
  EXPECT_THROW(opt.step(params, grads), std::invalid_argument);
}
