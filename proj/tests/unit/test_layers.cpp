#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "cyclegen/nn/adam.hpp"
#include "cyclegen/nn/layers.hpp"

using namespace cyclegen;
using namespace cyclegen::nn;

namespace {

using LD = long double;

LD sig(LD x) { return 1.0L / (1.0L + std::exp(-x)); }

Seq random_seq(Index features, Index steps, Index batch, Rng& rng) {
  Seq s(features, steps, batch);
  s.data = rng.normal_matrix(features, steps * batch);
  return s;
}

// Plain per-sample LSTM recurrence, gate order (i, f, g, o).
std::vector<std::vector<LD>> lstm_reference(const Lstm& l, const Seq& x, Index b) {
  const Index h = l.hidden();
  std::vector<LD> hp(h, 0.0L), cp(h, 0.0L);
  std::vector<std::vector<LD>> out;
  for (Index t = 0; t < x.steps; ++t) {
    std::vector<LD> hn(h), cn(h);
    for (Index j = 0; j < h; ++j) {
      LD a[4];
      for (int g = 0; g < 4; ++g) {
        const Index row = g * h + j;
        LD s = l.b(row, 0);
        for (Index k = 0; k < l.input(); ++k) s += static_cast<LD>(l.W(row, k)) * x.step(t)(k, b);
        for (Index k = 0; k < h; ++k) s += static_cast<LD>(l.U(row, k)) * hp[k];
        a[g] = s;
      }
      cn[j] = sig(a[1]) * cp[j] + sig(a[0]) * std::tanh(a[2]);
      hn[j] = sig(a[3]) * std::tanh(cn[j]);
    }
    hp = hn;
    cp = cn;
    out.push_back(hn);
  }
  return out;
}

// Reset-after GRU: n = tanh(Wn x + bwn + r * (Un h + bun)), h' = (1 - z) n + z h.
std::vector<std::vector<LD>> gru_reference(const Gru& g, const Seq& x, Index b) {
  const Index h = g.hidden();
  std::vector<LD> hp(h, 0.0L);
  std::vector<std::vector<LD>> out;
  for (Index t = 0; t < x.steps; ++t) {
    std::vector<LD> hn(h);
    for (Index j = 0; j < h; ++j) {
      LD wx[3], uh[3];
      for (int q = 0; q < 3; ++q) {
        const Index row = q * h + j;
        wx[q] = g.bw(row, 0);
        uh[q] = g.bu(row, 0);
        for (Index k = 0; k < g.input(); ++k) wx[q] += static_cast<LD>(g.W(row, k)) * x.step(t)(k, b);
        for (Index k = 0; k < h; ++k) uh[q] += static_cast<LD>(g.U(row, k)) * hp[k];
      }
      const LD r = sig(wx[0] + uh[0]);
      const LD z = sig(wx[1] + uh[1]);
      const LD n = std::tanh(wx[2] + r * uh[2]);
      hn[j] = (1.0L - z) * n + z * hp[j];
    }
    hp = hn;
    out.push_back(hn);
  }
  return out;
}

// L = sum(R .* H) for a fixed random R; returns (L, dL/dH).
template <class Layer>
double probe_loss(const Layer& layer, const Seq& x, const Matrix& R) {
  typename Layer::Cache cache;
  return (layer.forward(x, cache).data.array() * R.array()).sum();
}

template <class Layer>
void expect_gradients_match(Layer layer, Seq x, Rng& rng) {
  typename Layer::Cache cache;
  const Seq h = layer.forward(x, cache);
  const Matrix R = rng.normal_matrix(h.data.rows(), h.data.cols());
  Seq dh = h;
  dh.data = R;
  Layer grad = zeros_like(layer);
  const Seq dx = layer.backward(cache, dh, grad);

  const double step = 1e-6;
  auto fd = [&](double& slot) {
    const double keep = slot;
    slot = keep + step;
    const double up = probe_loss(layer, x, R);
    slot = keep - step;
    const double down = probe_loss(layer, x, R);
    slot = keep;
    return (up - down) / (2.0 * step);
  };

  auto params = tensors(layer);
  auto grads = tensors(grad);
  for (std::size_t k = 0; k < params.size(); ++k)
    for (Index i = 0; i < params[k]->size(); ++i)
      EXPECT_NEAR((*grads[k])(i), fd((*params[k])(i)), 1e-6) << "tensor " << k << " entry " << i;
  for (Index i = 0; i < x.data.size(); ++i) EXPECT_NEAR(dx.data(i), fd(x.data(i)), 1e-6) << "input " << i;
}

}  // namespace

TEST(Dense, ForwardIsAffine) {
  Dense d = Dense::zeros(2, 1);
  d.W << 2.0, -1.0;
  d.b << 0.5;
  Matrix x(2, 2);
  x << 1.0, 3.0, 4.0, 0.0;
  const Matrix y = d.forward(x);
  EXPECT_DOUBLE_EQ(y(0, 0), 2.0 - 4.0 + 0.5);
  EXPECT_DOUBLE_EQ(y(0, 1), 6.0 + 0.5);
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
  Rng rng(1);
  Dense d = Dense::init(3, 2, rng);
  Matrix x = rng.normal_matrix(3, 4);
  const Matrix R = rng.normal_matrix(2, 4);
  Dense grad = zeros_like(d);
  const Matrix dx = d.backward(x, R, grad);
  auto loss = [&] { return (d.forward(x).array() * R.array()).sum(); };
  const double step = 1e-6;
  for (Index i = 0; i < d.W.size(); ++i) {
    const double keep = d.W(i);
    d.W(i) = keep + step;
    const double up = loss();
    d.W(i) = keep - step;
    const double down = loss();
    d.W(i) = keep;
    EXPECT_NEAR(grad.W(i), (up - down) / (2 * step), 1e-7);
  }
  for (Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + step;
    const double up = loss();
    x(i) = keep - step;
    const double down = loss();
    x(i) = keep;
    EXPECT_NEAR(dx(i), (up - down) / (2 * step), 1e-7);
  }
}

TEST(Lstm, SingleStepHandSetWeightsMatchHighPrecisionOracle) {
  Lstm l = Lstm::zeros(1, 1);
  l.W << 0.5, -0.3, 0.8, 0.1;
  l.U << 0.2, 0.4, -0.6, 0.7;
  l.b << 0.1, 0.2, -0.1, 0.05;
  Seq x(1, 1, 1);
  x.data(0, 0) = 0.7;
  Lstm::Cache cache;
  const double h = l.forward(x, cache).data(0, 0);

  const LD i = sig(0.5L * 0.7L + 0.1L), g = std::tanh(0.8L * 0.7L - 0.1L), o = sig(0.1L * 0.7L + 0.05L);
  const LD c = i * g;  // previous cell state is zero
  EXPECT_NEAR(h, static_cast<double>(o * std::tanh(c)), 1e-15);
}

TEST(Lstm, ForwardMatchesPerSampleReference) {
  Rng rng(2);
  const Lstm l = Lstm::init(3, 4, rng);
  const Seq x = random_seq(3, 6, 2, rng);
  Lstm::Cache cache;
  const Seq h = l.forward(x, cache);
  for (Index b = 0; b < 2; ++b) {
    const auto ref = lstm_reference(l, x, b);
    for (Index t = 0; t < 6; ++t)
      for (Index j = 0; j < 4; ++j) EXPECT_NEAR(h.step(t)(j, b), static_cast<double>(ref[t][j]), 1e-13);
  }
}

TEST(Lstm, ZeroWeightsGiveZeroOutput) {
  Rng rng(3);
  const Lstm l = Lstm::zeros(2, 3);
  Lstm::Cache cache;
  EXPECT_TRUE(l.forward(random_seq(2, 4, 3, rng), cache).data.isZero());
}

TEST(Lstm, BackwardMatchesFiniteDifferences) {
  Rng rng(4);
  const Lstm l = Lstm::init(2, 3, rng);
  expect_gradients_match(l, random_seq(2, 5, 2, rng), rng);
}

TEST(Gru, ForwardMatchesPerSampleReference) {
  Rng rng(5);
  const Gru g = Gru::init(3, 4, rng);
  const Seq x = random_seq(3, 6, 2, rng);
  Gru::Cache cache;
  const Seq h = g.forward(x, cache);
  for (Index b = 0; b < 2; ++b) {
    const auto ref = gru_reference(g, x, b);
    for (Index t = 0; t < 6; ++t)
      for (Index j = 0; j < 4; ++j) EXPECT_NEAR(h.step(t)(j, b), static_cast<double>(ref[t][j]), 1e-13);
  }
}

TEST(Gru, BackwardMatchesFiniteDifferences) {
  Rng rng(6);
  const Gru g = Gru::init(2, 3, rng);
  expect_gradients_match(g, random_seq(2, 5, 2, rng), rng);
}

TEST(Gru, ParameterCount) {
  Rng rng(7);
  EXPECT_EQ(parameter_count(Gru::init(3, 5, rng)), 3u * 5 * 3 + 3u * 5 * 5 + 2u * 3 * 5);
  EXPECT_EQ(parameter_count(Lstm::init(3, 5, rng)), 4u * 5 * 3 + 4u * 5 * 5 + 4u * 5);
}

TEST(Adam, FirstStepMovesEachParameterByLearningRate) {
  Dense p = Dense::zeros(2, 1);
  p.W << 1.0, -2.0;
  p.b << 0.5;
  Dense g = zeros_like(p);
  g.W << 0.3, -4.0;
  g.b << 1e-3;
  Adam adam(p);
  adam.step(p, g, {0.01, 0.9, 0.999, 1e-8});
  EXPECT_NEAR(p.W(0, 0), 1.0 - 0.01 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(p.W(0, 1), -2.0 + 0.01 * 4.0 / (4.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p.b(0, 0), 0.5 - 0.01 * 1e-3 / (1e-3 + 1e-8), 1e-15);
  EXPECT_EQ(adam.steps, 1);
}

TEST(Adam, TwoStepBiasCorrectionOracle) {
  Dense p = Dense::zeros(1, 1);
  p.W << 0.0;
  Dense g = zeros_like(p);
  Adam adam(p);
  const double lr = 0.1, b1 = 0.5, b2 = 0.9, eps = 1e-8;
  g.W << 2.0;
  adam.step(p, g, {lr, b1, b2, eps});
  g.W << -1.0;
  adam.step(p, g, {lr, b1, b2, eps});

  double theta = 0.0, m = 0.0, v = 0.0;
  const double gs[] = {2.0, -1.0};
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * gs[t - 1];
    v = b2 * v + (1 - b2) * gs[t - 1] * gs[t - 1];
    theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  EXPECT_NEAR(p.W(0, 0), theta, 1e-15);
}

TEST(Adam, ZeroLearningRateIsNoOp) {
  Rng rng(8);
  Lstm p = Lstm::init(2, 2, rng);
  const Lstm before = p;
  Lstm g = zeros_like(p);
  g.W.setOnes();
  Adam adam(p);
  adam.step(p, g, {0.0, 0.9, 0.999, 1e-8});
  EXPECT_EQ(p.W, before.W);
  EXPECT_EQ(p.U, before.U);
}
