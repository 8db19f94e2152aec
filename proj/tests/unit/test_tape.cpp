#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "normclash/error.hpp"
#include "normclash/model.hpp"
#include "normclash/tape.hpp"

using namespace normclash;
using normclash::testing::check_gradients;

TEST(Tape, ReluForward) {
  Tape t;
  Var x = t.leaf(Tensor::vector({-1, 0, 2}));
  EXPECT_EQ(t.value(t.relu(x)), Tensor::vector({0, 0, 2}));
}

TEST(Tape, IdentityMatmul) {
  Tape t;
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  Var v = t.leaf(Tensor({1, 3}, {0.5, -2, 7}));
  Var out = t.matmul(v, t.leaf(eye));
  EXPECT_EQ(t.value(out).data()[0], 0.5);
  EXPECT_EQ(t.value(out).data()[1], -2.0);
  EXPECT_EQ(t.value(out).data()[2], 7.0);
}

TEST(Tape, CrossEntropyOfUniformLogits) {
  Tape t;
  Var z = t.leaf(Tensor({1, 2}, 0.0));
  const std::vector<int> y{0};
  EXPECT_NEAR(t.value(t.softmax_cross_entropy(z, y))[0], std::log(2.0), 1e-15);
}

TEST(Tape, CrossEntropyIsStableForHugeLogits) {
  Tape t;
  Var z = t.leaf(Tensor({1, 3}, std::vector<double>{1000.0, 0.0, -1000.0}));
  const std::vector<int> y{1};
  const double l = t.value(t.softmax_cross_entropy(z, y))[0];
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_NEAR(l, 1000.0, 1e-9);
}

TEST(Tape, SumOfSquaresGradient) {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}), true);
  GradientMap g = t.backward(t.sum(t.mul(x, x)));
  EXPECT_EQ(g.at(x), Tensor::vector({2, 4}));
}

TEST(Tape, ReluSubgradientAtZeroIsZero) {
  Tape t;
  Var x = t.leaf(Tensor::vector({0.0}), true);
  EXPECT_EQ(t.backward(t.sum(t.relu(x))).at(x)[0], 0.0);
}

TEST(Tape, ClampPassesGradientInsideOnly) {
  Tape t;
  Var x = t.leaf(Tensor::vector({-1.0, 0.5, 2.0}), true);
  EXPECT_EQ(t.backward(t.sum(t.clamp(x, 0.0, 1.0))).at(x), Tensor::vector({0, 1, 0}));
}

TEST(Tape, ShapeErrorsNameThePrimitive) {
  Tape t;
  Var a = t.leaf(Tensor({2, 3}));
  Var b = t.leaf(Tensor({4, 2}));
  try {
    t.matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4, 2]"), std::string::npos) << msg;
  }
  EXPECT_THROW(t.add(a, b), ShapeError);
  EXPECT_THROW(t.add_bias(a, t.leaf(Tensor({2}))), ShapeError);
  const std::vector<int> y{0};
  EXPECT_THROW(t.softmax_cross_entropy(a, y), ShapeError);
}

TEST(Tape, BackwardNeedsAScalarAndRunsOnce) {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}), true);
  EXPECT_THROW(t.backward(x), TapeError);
  Var s = t.sum(x);
  t.backward(s);
  EXPECT_THROW(t.backward(s), TapeError);
}

TEST(Tape, UnreachedLeafGetsZeroGradient) {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}), true);
  Var unused = t.leaf(Tensor::vector({3, 4, 5}), true);
  GradientMap g = t.backward(t.sum(x));
  ASSERT_TRUE(g.contains(unused));
  EXPECT_EQ(g.at(unused), Tensor({3}, 0.0));
}

TEST(Tape, LogitMarginValueAndGradient) {
  Tape t;
  Var z = t.leaf(Tensor({1, 2}, std::vector<double>{3.0, 1.0}), true);
  const std::vector<int> y{0};
  const std::vector<double> w{1.0};
  Var m = t.logit_margin(z, y, w, 0.0);
  EXPECT_EQ(t.value(m)[0], 2.0);
  EXPECT_EQ(t.backward(m).at(z), Tensor({1, 2}, std::vector<double>{1.0, -1.0}));

  Tape t2;
  Var z2 = t2.leaf(Tensor({1, 2}, std::vector<double>{1.0, 3.0}), true);
  Var m2 = t2.logit_margin(z2, y, w, 0.5);
  EXPECT_EQ(t2.value(m2)[0], -0.5);  // floored at -kappa
  EXPECT_EQ(t2.backward(m2).at(z2), Tensor({1, 2}, 0.0));
}

// Every primitive through one composite expression, against central
// differences.
TEST(Tape, PrimitiveGradientsMatchFiniteDifferences) {
  Rng rng = make_stream(11, 0);
  Tensor a({3, 4}), b({4, 5}), bias({5}), m({3, 5});
  for (Tensor* t : {&a, &b, &bias, &m}) {
    for (auto& v : t->data()) v = standard_normal(rng);
  }
  const std::vector<int> y{0, 4, 2};
  const std::vector<double> w{0.5, 1.5, -1.0};
  auto build = [&](Tape& t, bool rg, std::vector<Var>* leaves) {
    Var va = t.leaf(a, rg), vb = t.leaf(b, rg), vbias = t.leaf(bias, rg), vm = t.leaf(m, rg);
    if (leaves) *leaves = {va, vb, vbias, vm};
    Var h = t.add_bias(t.matmul(va, vb), vbias);
    Var r = t.add(t.relu(h), t.mul(t.clamp(h, -0.7, 0.9), vm));
    Var l1 = t.softmax_cross_entropy(r, y);
    Var l2 = t.scale(t.logit_margin(r, y, w, 10.0), 0.3);
    return t.add(t.add(l1, l2), t.scale(t.mean(t.mul(r, r)), 0.1));
  };
  Tape t;
  std::vector<Var> leaves;
  GradientMap g = t.backward(build(t, true, &leaves));
  std::vector<Tensor> analytic;
  for (Var v : leaves) analytic.push_back(g.at(v));
  auto loss = [&]() {
    Tape f;
    return f.value(build(f, false, nullptr))[0];
  };
  const auto r = check_gradients({&a, &b, &bias, &m}, analytic, loss);
  EXPECT_LT(r.max_relative_error, 1e-5);
  EXPECT_EQ(r.checked, a.size() + b.size() + bias.size() + m.size());
}

TEST(Tape, RandomNetworksPassGradientCheck) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = normclash::testing::random_network(seed);
    EXPECT_LT(normclash::testing::check_network(c).max_relative_error, 1e-5) << "seed " << seed;
  }
}

TEST(Tape, BackwardIsLinearInTheLoss) {
  auto c = normclash::testing::random_network(5);
  const double wa = 0.75, wb = -2.5;
  const std::vector<double> ones(c.labels.size(), 1.0);
  auto grad = [&](double ka, double kb) {
    Tape t;
    Var in = t.leaf(c.x, true);
    Var z = forward(t, c.params, in);
    Var l = t.add(t.scale(t.softmax_cross_entropy(z, c.labels), ka), t.scale(t.logit_margin(z, c.labels, ones, 1.0), kb));
    return t.backward(l).take(in);
  };
  const Tensor g1 = grad(1.0, 0.0), g2 = grad(0.0, 1.0), g = grad(wa, wb);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], wa * g1[i] + wb * g2[i], 1e-12);
}

TEST(Tape, ForwardAndBackwardAreBitReproducible) {
  auto c = normclash::testing::random_network(9, 16);
  auto run = [&]() {
    Tape t;
    Var in = t.leaf(c.x, true);
    std::vector<Var> pv;
    Var l = t.softmax_cross_entropy(forward(t, c.params, in, true, &pv), c.labels);
    GradientMap g = t.backward(l);
    std::vector<Tensor> out{t.value(l), g.at(in)};
    for (Var v : pv) out.push_back(g.at(v));
    return out;
  };
  EXPECT_EQ(run(), run());
}
