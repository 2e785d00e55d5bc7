#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rcid/diffkit.hpp"
#include "rcid/rng.hpp"

using namespace rcid;
using namespace rcid::diffkit;

TEST(Backward, Identity) {
  Tape tape;
  const Var w = tape.leaf(3.0);
  EXPECT_EQ(tape.backward(w)[w], 1.0);
}

TEST(Backward, LinearLayer) {
  Tape tape;
  const Var w = tape.leaf(0.7);
  const Var b = tape.leaf(-1.2);
  const Var y = w * 2.0 + b;
  const auto g = tape.backward(y);
  EXPECT_EQ(g[w], 2.0);
  EXPECT_EQ(g[b], 1.0);
}

TEST(Backward, ScalarOpsAgainstFiniteDifferences) {
  const auto f = [](auto x, auto y) {
    using std::exp, std::log, std::sqrt, std::tanh;
    using diffkit::softplus;
    return tanh(x * y) + exp(x) / (y + 3.0) - log(y) * sqrt(x) + softplus(x - y) - (-x);
  };
  for (double x = 0.3; x < 2.0; x += 0.4) {
    for (double y = 0.5; y < 3.0; y += 0.6) {
      Tape tape;
      const Var vx = tape.leaf(x);
      const Var vy = tape.leaf(y);
      const auto g = tape.backward(f(vx, vy));
      const double h = 1e-6;
      const double fx = (f(x + h, y) - f(x - h, y)) / (2 * h);
      const double fy = (f(x, y + h) - f(x, y - h)) / (2 * h);
      EXPECT_NEAR(g[vx], fx, 1e-7 * std::max(1.0, std::abs(fx)));
      EXPECT_NEAR(g[vy], fy, 1e-7 * std::max(1.0, std::abs(fy)));
    }
  }
}

TEST(Backward, DenseChainAgainstFiniteDifferences) {
  Rng rng = make_rng(3, StreamDomain::NetInit);
  Matrix w(3, 4);
  Matrix b(3, 1);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = standard_normal(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = standard_normal(rng);
  Vector x(4);
  x << 0.1, -0.4, 0.9, 0.3;
  Vector scale(3);
  scale << 2.0, 0.5, 1.5;
  const auto loss = [&](const Matrix& wv, const Matrix& bv) {
    const Vector z = (wv * x + bv.col(0)).array().tanh();
    const Vector s = z.unaryExpr([](double v) { return softplus(v); }).cwiseProduct(scale);
    return s.squaredNorm() + s(1) * s(2);
  };
  Tape tape;
  const auto lw = tape.dense_leaf(w);
  const auto lb = tape.dense_leaf(b);
  const auto s = tape.mul_const(
      tape.softplus(tape.tanh(tape.add(tape.matvec(lw, tape.dense_constant(x)), lb))), scale);
  const Var out = tape.squared_norm(s) + tape.component(s, 1) * tape.component(s, 2);
  EXPECT_NEAR(out.value(), loss(w, b), 1e-12);
  const auto g = tape.backward(out);
  const Matrix gw = g[lw];
  const Matrix gb = g[lb];
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Matrix up = w, dn = w;
    up(i) += h;
    dn(i) -= h;
    EXPECT_NEAR(gw(i), (loss(up, b) - loss(dn, b)) / (2 * h), 1e-7);
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    Matrix up = b, dn = b;
    up(i) += h;
    dn(i) -= h;
    EXPECT_NEAR(gb(i), (loss(w, up) - loss(w, dn)) / (2 * h), 1e-7);
  }
}

TEST(Backward, ChainDecompositionTwoParameterToy) {
  // theta = softplus(W x); L = (theta_0 - 1)^2 + theta_0 theta_1.
  Matrix w(2, 2);
  w << 0.3, -0.2, 0.5, 0.1;
  Vector x(2);
  x << 1.5, -0.7;
  Tape tape;
  const auto lw = tape.dense_leaf(w);
  const auto th = tape.softplus(tape.matvec(lw, tape.dense_constant(x)));
  const Var t0 = tape.component(th, 0);
  const Var t1 = tape.component(th, 1);
  const Var l = (t0 - 1.0) * (t0 - 1.0) + t0 * t1;
  const Matrix gw = tape.backward(l)[lw];

  const auto theta = [&](const Matrix& m) {
    return Vector((m * x).unaryExpr([](double v) { return softplus(v); }));
  };
  const Vector th0 = theta(w);
  Vector dl(2);
  dl << 2 * (th0(0) - 1) + th0(1), th0(0);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Matrix up = w, dn = w;
    up(i) += h;
    dn(i) -= h;
    const Vector jcol = (theta(up) - theta(dn)) / (2 * h);
    EXPECT_NEAR(gw(i), dl.dot(jcol), 1e-8);
  }
}

TEST(Backward, UnusedLeafHasZeroGradient) {
  Tape tape;
  const Var a = tape.leaf(1.0);
  const Var b = tape.leaf(2.0);
  Matrix m = Matrix::Ones(2, 2);
  const auto dm = tape.dense_leaf(m);
  const auto g = tape.backward(a * 3.0);
  EXPECT_EQ(g[b], 0.0);
  EXPECT_TRUE(g[dm].isZero());
  EXPECT_EQ(g.find(dm), nullptr);
}

TEST(Backward, SqrtAtZeroUsesZeroSubgradient) {
  Tape tape;
  const Var a = tape.leaf(0.0);
  EXPECT_EQ(tape.backward(sqrt(a * a))[a], 0.0);
}

TEST(Backward, ClearReusesTape) {
  Tape tape;
  for (int rep = 0; rep < 3; ++rep) {
    tape.clear();
    const Var a = tape.leaf(2.0);
    EXPECT_EQ(tape.backward(a * a)[a], 4.0);
  }
}

TEST(Adam, ZeroGradientLeavesParamsAndCountsStep) {
  Matrix p = Matrix::Constant(2, 2, 0.5);
  const Matrix g = Matrix::Zero(2, 2);
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  AdamState st(std::span<const Matrix* const>(gs), {});
  adam_step(ps, gs, st);
  EXPECT_EQ(st.step, 1u);
  EXPECT_TRUE((p.array() == 0.5).all());
}

TEST(Adam, FirstStepIsLrTimesSign) {
  for (const double gv : {3.0, -0.02, 0.5}) {
    Matrix p = Matrix::Zero(1, 1);
    Matrix g = Matrix::Constant(1, 1, gv);
    Matrix* ps[] = {&p};
    const Matrix* gs[] = {&g};
    AdamState st(std::span<const Matrix* const>(gs), {});
    adam_step(ps, gs, st);
    EXPECT_NEAR(p(0), -1e-3 * (gv > 0 ? 1 : -1), 1e-3 * 1e-6);
  }
}

TEST(Adam, TwoStepsMatchHandRolledRecurrence) {
  const double g = 0.7, lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0, v = 0, x = 1.0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    x -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  Matrix p = Matrix::Constant(1, 1, 1.0);
  Matrix gm = Matrix::Constant(1, 1, g);
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&gm};
  AdamState st(std::span<const Matrix* const>(gs), {});
  adam_step(ps, gs, st);
  adam_step(ps, gs, st);
  EXPECT_NEAR(p(0), x, 1e-15);
}

TEST(Adam, ClipsToGlobalNorm) {
  Matrix a = Matrix::Constant(1, 1, 30.0);
  Matrix b = Matrix::Constant(1, 1, 40.0);
  const Matrix* gs[] = {&a, &b};
  EXPECT_DOUBLE_EQ(global_norm(gs), 50.0);
  // Clipping rescales both gradients; Adam's first step stays lr * sign.
  Matrix pa = Matrix::Zero(1, 1), pb = Matrix::Zero(1, 1);
  Matrix* ps[] = {&pa, &pb};
  AdamState st(std::span<const Matrix* const>(gs), {});
  adam_step(ps, gs, st);
  EXPECT_NEAR(pa(0), -1e-3, 1e-9);
  EXPECT_NEAR(pb(0), -1e-3, 1e-9);
}

TEST(Adam, ShapeMismatchThrows) {
  Matrix p = Matrix::Zero(2, 1);
  Matrix g = Matrix::Zero(3, 1);
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  AdamState st(std::span<const Matrix* const>(gs), {});
  EXPECT_THROW(adam_step(ps, gs, st), InvalidInput);
}

TEST(Softplus, StableAndConsistent) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_EQ(softplus(800.0), 800.0);
  EXPECT_GT(softplus(-800.0), -1.0);
  EXPECT_GE(softplus(-800.0), 0.0);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-15);
}
