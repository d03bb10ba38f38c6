#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cyclegen/rng.hpp"

namespace cyclegen::nn {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A batch of sequences stored time-major: column block t holds the
/// `batch` columns of step t, so `data` is features x (steps * batch).
struct Seq {
  Matrix data;
  Index steps = 0;
  Index batch = 0;

  Seq() = default;
  Seq(Index features, Index steps_, Index batch_)
      : data(Matrix::Zero(features, steps_ * batch_)), steps(steps_), batch(batch_) {}

  Index features() const { return data.rows(); }
  auto step(Index t) { return data.middleCols(t * batch, batch); }
  auto step(Index t) const { return data.middleCols(t * batch, batch); }
};

double sigmoid(double x);

/// y = W x + b applied column-wise.
struct Dense {
  Matrix W;
  Matrix b;  // out x 1

  static Dense zeros(Index in, Index out);
  static Dense init(Index in, Index out, Rng& rng);

  Matrix forward(const Matrix& x) const;
  /// Accumulates parameter gradients into `grad`; returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy, Dense& grad) const;

  template <class F> void visit(F&& f) { f("W", W); f("b", b); }
  template <class F> void visit(F&& f) const { f("W", W); f("b", b); }
};

/// Single LSTM layer, gate order (input, forget, cell, output).
struct Lstm {
  Matrix W;  // 4h x in
  Matrix U;  // 4h x h
  Matrix b;  // 4h x 1

  struct Cache {
    Matrix x;      // in x TB
    Matrix gates;  // 4h x TB, post-activation
    Matrix c;      // h x TB
    Matrix tanh_c; // h x TB
    Matrix h;      // h x TB
    Index steps = 0, batch = 0;
  };

  Index hidden() const { return U.cols(); }
  Index input() const { return W.cols(); }

  static Lstm zeros(Index in, Index hidden);
  static Lstm init(Index in, Index hidden, Rng& rng);

  Seq forward(const Seq& x, Cache& cache) const;
  /// dh holds dL/dh_t from above for every step.
  Seq backward(const Cache& cache, const Seq& dh, Lstm& grad) const;

  template <class F> void visit(F&& f) { f("W", W); f("U", U); f("b", b); }
  template <class F> void visit(F&& f) const { f("W", W); f("U", U); f("b", b); }
};

/// Single GRU layer in the reset-after form:
///   n = tanh(W_n x + bw_n + r * (U_n h + bu_n)), gate order (reset, update, new).
struct Gru {
  Matrix W;   // 3h x in
  Matrix U;   // 3h x h
  Matrix bw;  // 3h x 1
  Matrix bu;  // 3h x 1

  struct Cache {
    Matrix x;
    Matrix r, z, n;  // h x TB each
    Matrix hn;       // U_n h_prev + bu_n
    Matrix h;
    Index steps = 0, batch = 0;
  };

  Index hidden() const { return U.cols(); }
  Index input() const { return W.cols(); }

  static Gru zeros(Index in, Index hidden);
  static Gru init(Index in, Index hidden, Rng& rng);

  Seq forward(const Seq& x, Cache& cache) const;
  Seq backward(const Cache& cache, const Seq& dh, Gru& grad) const;

  template <class F> void visit(F&& f) { f("W", W); f("U", U); f("bw", bw); f("bu", bu); }
  template <class F> void visit(F&& f) const { f("W", W); f("U", U); f("bw", bw); f("bu", bu); }
};

/// Pointers to every tensor of a network, in visit order.
template <class Net>
std::vector<Matrix*> tensors(Net& net) {
  std::vector<Matrix*> out;
  net.visit([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

template <class Net>
Net zeros_like(const Net& net) {
  Net out = net;
  out.visit([](const std::string&, Matrix& m) { m.setZero(); });
  return out;
}

template <class Net>
std::size_t parameter_count(const Net& net) {
  std::size_t n = 0;
  net.visit([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

template <class Net>
bool all_finite(const Net& net) {
  bool ok = true;
  net.visit([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

}  // namespace cyclegen::nn
