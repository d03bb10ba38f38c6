#include "cyclegen/nn/layers.hpp"

#include <cmath>

namespace cyclegen::nn {

namespace {

Matrix uniform(Index rows, Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = bound * (2.0 * rng.uniform() - 1.0);
  return m;
}

Matrix sigmoid(const Matrix& a) { return a.unaryExpr([](double x) { return nn::sigmoid(x); }); }

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Dense Dense::zeros(Index in, Index out) { return {Matrix::Zero(out, in), Matrix::Zero(out, 1)}; }

Dense Dense::init(Index in, Index out, Rng& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(in));
  Dense d;
  d.W = uniform(out, in, k, rng);
  d.b = uniform(out, 1, k, rng);
  return d;
}

Matrix Dense::forward(const Matrix& x) const { return (W * x).colwise() + b.col(0); }

Matrix Dense::backward(const Matrix& x, const Matrix& dy, Dense& grad) const {
  grad.W.noalias() += dy * x.transpose();
  grad.b.col(0) += dy.rowwise().sum();
  return W.transpose() * dy;
}

Lstm Lstm::zeros(Index in, Index hidden) {
  return {Matrix::Zero(4 * hidden, in), Matrix::Zero(4 * hidden, hidden), Matrix::Zero(4 * hidden, 1)};
}

Lstm Lstm::init(Index in, Index hidden, Rng& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
  Lstm l;
  l.W = uniform(4 * hidden, in, k, rng);
  l.U = uniform(4 * hidden, hidden, k, rng);
  l.b = uniform(4 * hidden, 1, k, rng);
  return l;
}

Seq Lstm::forward(const Seq& x, Cache& cache) const {
  const Index h = hidden(), T = x.steps, B = x.batch;
  cache.steps = T;
  cache.batch = B;
  cache.x = x.data;
  cache.gates.noalias() = W * x.data;
  cache.gates.colwise() += b.col(0);
  cache.c.resize(h, T * B);
  cache.tanh_c.resize(h, T * B);
  cache.h.resize(h, T * B);

  for (Index t = 0; t < T; ++t) {
    auto a = cache.gates.middleCols(t * B, B);
    if (t > 0) a.noalias() += U * cache.h.middleCols((t - 1) * B, B);
    a.topRows(2 * h) = sigmoid(a.topRows(2 * h));
    a.middleRows(2 * h, h) = a.middleRows(2 * h, h).array().tanh().matrix();
    a.bottomRows(h) = sigmoid(a.bottomRows(h));

    auto c = cache.c.middleCols(t * B, B);
    c = a.topRows(h).cwiseProduct(a.middleRows(2 * h, h));
    if (t > 0) c += a.middleRows(h, h).cwiseProduct(cache.c.middleCols((t - 1) * B, B));
    cache.tanh_c.middleCols(t * B, B) = c.array().tanh().matrix();
    cache.h.middleCols(t * B, B) = a.bottomRows(h).cwiseProduct(cache.tanh_c.middleCols(t * B, B));
  }
  Seq out;
  out.data = cache.h;
  out.steps = T;
  out.batch = B;
  return out;
}

Seq Lstm::backward(const Cache& cache, const Seq& dh_ext, Lstm& grad) const {
  const Index h = hidden(), T = cache.steps, B = cache.batch;
  Matrix dA(4 * h, T * B);
  Matrix dh_next = Matrix::Zero(h, B);
  Matrix dc_next = Matrix::Zero(h, B);

  for (Index t = T - 1; t >= 0; --t) {
    const auto a = cache.gates.middleCols(t * B, B);
    const auto ig = a.topRows(h).array();
    const auto fg = a.middleRows(h, h).array();
    const auto gg = a.middleRows(2 * h, h).array();
    const auto og = a.bottomRows(h).array();
    const auto tc = cache.tanh_c.middleCols(t * B, B).array();

    const Matrix dh = dh_ext.step(t) + dh_next;
    const Matrix dc = (dc_next.array() + dh.array() * og * (1.0 - tc.square())).matrix();

    auto da = dA.middleCols(t * B, B);
    da.topRows(h) = (dc.array() * gg * ig * (1.0 - ig)).matrix();
    if (t > 0)
      da.middleRows(h, h) =
          (dc.array() * cache.c.middleCols((t - 1) * B, B).array() * fg * (1.0 - fg)).matrix();
    else
      da.middleRows(h, h).setZero();
    da.middleRows(2 * h, h) = (dc.array() * ig * (1.0 - gg.square())).matrix();
    da.bottomRows(h) = (dh.array() * tc * og * (1.0 - og)).matrix();

    dc_next = (dc.array() * fg).matrix();
    dh_next.noalias() = U.transpose() * da;
  }

  grad.W.noalias() += dA * cache.x.transpose();
  grad.b.col(0) += dA.rowwise().sum();
  if (T > 1)
    grad.U.noalias() += dA.rightCols((T - 1) * B) * cache.h.leftCols((T - 1) * B).transpose();

  Seq dx;
  dx.data.noalias() = W.transpose() * dA;
  dx.steps = T;
  dx.batch = B;
  return dx;
}

Gru Gru::zeros(Index in, Index hidden) {
  return {Matrix::Zero(3 * hidden, in), Matrix::Zero(3 * hidden, hidden), Matrix::Zero(3 * hidden, 1),
          Matrix::Zero(3 * hidden, 1)};
}

Gru Gru::init(Index in, Index hidden, Rng& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
  Gru g;
  g.W = uniform(3 * hidden, in, k, rng);
  g.U = uniform(3 * hidden, hidden, k, rng);
  g.bw = uniform(3 * hidden, 1, k, rng);
  g.bu = uniform(3 * hidden, 1, k, rng);
  return g;
}

Seq Gru::forward(const Seq& x, Cache& cache) const {
  const Index h = hidden(), T = x.steps, B = x.batch;
  cache.steps = T;
  cache.batch = B;
  cache.x = x.data;
  Matrix ax = W * x.data;
  ax.colwise() += bw.col(0);
  cache.r.resize(h, T * B);
  cache.z.resize(h, T * B);
  cache.n.resize(h, T * B);
  cache.hn.resize(h, T * B);
  cache.h.resize(h, T * B);

  Matrix ah(3 * h, B);
  for (Index t = 0; t < T; ++t) {
    if (t > 0) {
      ah.noalias() = U * cache.h.middleCols((t - 1) * B, B);
      ah.colwise() += bu.col(0);
    } else {
      ah = bu.col(0).replicate(1, B);
    }
    const auto axt = ax.middleCols(t * B, B);
    auto r = cache.r.middleCols(t * B, B);
    auto z = cache.z.middleCols(t * B, B);
    auto n = cache.n.middleCols(t * B, B);
    r = sigmoid(axt.topRows(h) + ah.topRows(h));
    z = sigmoid(axt.middleRows(h, h) + ah.middleRows(h, h));
    cache.hn.middleCols(t * B, B) = ah.bottomRows(h);
    n = (axt.bottomRows(h) + r.cwiseProduct(ah.bottomRows(h))).array().tanh().matrix();
    auto ht = cache.h.middleCols(t * B, B);
    ht = (1.0 - z.array()).matrix().cwiseProduct(n);
    if (t > 0) ht += z.cwiseProduct(cache.h.middleCols((t - 1) * B, B));
  }
  Seq out;
  out.data = cache.h;
  out.steps = T;
  out.batch = B;
  return out;
}

Seq Gru::backward(const Cache& cache, const Seq& dh_ext, Gru& grad) const {
  const Index h = hidden(), T = cache.steps, B = cache.batch;
  Matrix dAX(3 * h, T * B);
  Matrix dAH(3 * h, T * B);
  Matrix dh_next = Matrix::Zero(h, B);

  for (Index t = T - 1; t >= 0; --t) {
    const auto r = cache.r.middleCols(t * B, B).array();
    const auto z = cache.z.middleCols(t * B, B).array();
    const auto n = cache.n.middleCols(t * B, B).array();
    const auto hn = cache.hn.middleCols(t * B, B).array();

    const Matrix dh = dh_ext.step(t) + dh_next;
    const auto dha = dh.array();
    Eigen::ArrayXXd h_prev = t > 0 ? Eigen::ArrayXXd(cache.h.middleCols((t - 1) * B, B).array())
                                   : Eigen::ArrayXXd::Zero(h, B);

    const Eigen::ArrayXXd da_n = dha * (1.0 - z) * (1.0 - n.square());
    const Eigen::ArrayXXd da_z = dha * (h_prev - n) * z * (1.0 - z);
    const Eigen::ArrayXXd da_r = da_n * hn * r * (1.0 - r);

    auto dax = dAX.middleCols(t * B, B);
    auto dah = dAH.middleCols(t * B, B);
    dax.topRows(h) = da_r.matrix();
    dax.middleRows(h, h) = da_z.matrix();
    dax.bottomRows(h) = da_n.matrix();
    dah.topRows(2 * h) = dax.topRows(2 * h);
    dah.bottomRows(h) = (da_n * r).matrix();

    dh_next = (dha * z).matrix();
    dh_next.noalias() += U.transpose() * dah;
  }

  grad.W.noalias() += dAX * cache.x.transpose();
  grad.bw.col(0) += dAX.rowwise().sum();
  grad.bu.col(0) += dAH.rowwise().sum();
  if (T > 1)
    grad.U.noalias() += dAH.rightCols((T - 1) * B) * cache.h.leftCols((T - 1) * B).transpose();

  Seq dx;
  dx.data.noalias() = W.transpose() * dAX;
  dx.steps = T;
  dx.batch = B;
  return dx;
}

}  // namespace cyclegen::nn
