#include "cyclegen/evaluate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace cyclegen {

using nn::Index;

namespace {

struct Stacked {
  Matrix X;  // N x 3l
  std::vector<Source> labels;
  std::vector<int> cycles;
};

Stacked stack_points(const std::vector<Matrix>& real, const std::vector<Matrix>& synth,
                     std::vector<int> real_ids, std::vector<int> synth_ids) {
  if (real_ids.empty())
    for (std::size_t k = 0; k < real.size(); ++k) real_ids.push_back(static_cast<int>(k) + 1);
  if (synth_ids.empty())
    for (std::size_t k = 0; k < synth.size(); ++k) synth_ids.push_back(static_cast<int>(k) + 1);
  if (real_ids.size() != real.size() || synth_ids.size() != synth.size())
    throw std::invalid_argument("projection: id list length mismatch");

  Stacked s;
  const auto N = static_cast<Index>(real.size() + synth.size());
  if (N == 0) throw std::invalid_argument("projection: no points");
  const Index D = (real.empty() ? synth : real).front().size();
  s.X.resize(N, D);
  Index row = 0;
  auto add = [&](const std::vector<Matrix>& group, const std::vector<int>& ids, Source src) {
    for (std::size_t k = 0; k < group.size(); ++k) {
      if (group[k].size() != D) throw std::invalid_argument("projection: profiles differ in size");
      s.X.row(row++) = flatten(group[k]).transpose();
      s.labels.push_back(src);
      s.cycles.push_back(ids[k]);
    }
  };
  add(real, real_ids, Source::real);
  add(synth, synth_ids, Source::synthetic);
  return s;
}

/// Conditional probabilities row i with precision beta; returns entropy (nats).
double row_probabilities(const Matrix& D2, Index i, double beta, Eigen::VectorXd& p) {
  const Index N = D2.rows();
  double sum = 0.0;
  // Shift by the nearest distance so exp() never underflows entirely.
  double dmin = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < N; ++j)
    if (j != i) dmin = std::min(dmin, D2(i, j));
  for (Index j = 0; j < N; ++j) {
    p(j) = j == i ? 0.0 : std::exp(-beta * (D2(i, j) - dmin));
    sum += p(j);
  }
  double h = 0.0;
  for (Index j = 0; j < N; ++j) {
    p(j) /= sum;
    if (p(j) > 0.0) h -= p(j) * std::log(p(j));
  }
  return h;
}

}  // namespace

std::string to_string(ProjectionMethod m) { return m == ProjectionMethod::pca ? "pca" : "tsne"; }

Eigen::VectorXd flatten(const Matrix& profile) {
  Eigen::VectorXd v(profile.size());
  Index k = 0;
  for (Index r = 0; r < profile.rows(); ++r)
    for (Index c = 0; c < profile.cols(); ++c) v(k++) = profile(r, c);
  return v;
}

Projection2D pca_project(const std::vector<Matrix>& real, const std::vector<Matrix>& synth,
                         std::vector<int> real_ids, std::vector<int> synth_ids) {
  if (real.size() + synth.size() < 3) throw std::invalid_argument("pca_project: need at least 3 points");
  auto s = stack_points(real, synth, std::move(real_ids), std::move(synth_ids));
  const Index N = s.X.rows();
  const Eigen::RowVectorXd mean = s.X.colwise().mean();
  const Matrix Xc = s.X.rowwise() - mean;
  const Matrix cov = (Xc.transpose() * Xc) / static_cast<double>(N - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("pca_project: eigensolver failed");
  const Index D = cov.rows();
  Matrix basis(D, 2);
  Projection2D out;
  out.method = ProjectionMethod::pca;
  const double total = eig.eigenvalues().sum();
  for (Index c = 0; c < 2 && c < D; ++c) {
    Eigen::VectorXd u = eig.eigenvectors().col(D - 1 - c);
    Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0.0) u = -u;
    basis.col(c) = u;
    out.explained_variance[c] = eig.eigenvalues()(D - 1 - c);
    out.explained_ratio[c] = total > 0.0 ? out.explained_variance[c] / total : 0.0;
  }
  if (D < 2) basis.col(1).setZero();
  out.points = Xc * basis;
  out.labels = std::move(s.labels);
  out.cycles = std::move(s.cycles);
  return out;
}

Matrix tsne_embed(const Matrix& X, const TsneConfig& cfg) {
  const Index N = X.rows();
  if (!(cfg.perplexity > 0.0)) throw std::invalid_argument("tsne: perplexity must be positive");
  if (!(static_cast<double>(N) > 3.0 * cfg.perplexity))
    throw std::invalid_argument("tsne: need N > 3 * perplexity (N=" + std::to_string(N) +
                                ", perplexity=" + std::to_string(cfg.perplexity) + ")");
  if (cfg.iterations < 0) throw std::invalid_argument("tsne: iterations must be >= 0");

  Matrix D2(N, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) D2(i, j) = (X.row(i) - X.row(j)).squaredNorm();

  // Binary search each row's precision to match the target entropy.
  const double target = std::log(cfg.perplexity);
  Matrix P = Matrix::Zero(N, N);
  Eigen::VectorXd row(N);
  for (Index i = 0; i < N; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double dmean = D2.row(i).sum() / static_cast<double>(N - 1);
    if (dmean > 0.0) beta = 1.0 / dmean;
    for (int iter = 0; iter < 200; ++iter) {
      const double h = row_probabilities(D2, i, beta, row);
      if (std::abs(h - target) < 1e-5) break;
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
    }
    P.row(i) = row.transpose();
  }
  P = (P + P.transpose()) / (2.0 * static_cast<double>(N));
  P = P.cwiseMax(1e-12);
  P.diagonal().setZero();

  Rng rng(cfg.seed);
  Matrix Y = rng.normal_matrix(N, 2) * 1e-4;
  Matrix update = Matrix::Zero(N, 2);
  Matrix gains = Matrix::Ones(N, 2);
  Matrix num(N, N);
  Matrix grad(N, 2);
  constexpr int kExaggerationStop = 250;
  constexpr int kMomentumSwitch = 250;

  for (int it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = it < kExaggerationStop ? 12.0 : 1.0;
    const double momentum = it < kMomentumSwitch ? 0.5 : 0.8;
    double qsum = 0.0;
    for (Index i = 0; i < N; ++i) {
      num(i, i) = 0.0;
      for (Index j = i + 1; j < N; ++j) {
        const double q = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
        num(i, j) = num(j, i) = q;
        qsum += 2.0 * q;
      }
    }
    grad.setZero();
    for (Index i = 0; i < N; ++i)
      for (Index j = 0; j < N; ++j) {
        if (i == j) continue;
        const double w = (exaggeration * P(i, j) - num(i, j) / qsum) * num(i, j);
        grad.row(i) += 4.0 * w * (Y.row(i) - Y.row(j));
      }
    for (Index i = 0; i < N; ++i)
      for (Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2;
        gains(i, c) = std::max(gains(i, c), 0.01);
        update(i, c) = momentum * update(i, c) - cfg.learning_rate * gains(i, c) * grad(i, c);
      }
    Y += update;
    Y.rowwise() -= Y.colwise().mean();
  }
  return Y;
}

Projection2D tsne_project(const std::vector<Matrix>& real, const std::vector<Matrix>& synth,
                          const TsneConfig& cfg, std::vector<int> real_ids, std::vector<int> synth_ids) {
  auto s = stack_points(real, synth, std::move(real_ids), std::move(synth_ids));
  Projection2D out;
  out.method = ProjectionMethod::tsne;
  out.points = tsne_embed(s.X, cfg);
  out.labels = std::move(s.labels);
  out.cycles = std::move(s.cycles);
  return out;
}

double overlap_score(const Projection2D& proj) {
  const auto N = static_cast<Index>(proj.labels.size());
  if (proj.points.rows() != N) throw std::invalid_argument("overlap_score: points/labels size mismatch");
  bool has_real = false, has_synth = false;
  for (auto l : proj.labels) (l == Source::real ? has_real : has_synth) = true;
  if (!has_real || !has_synth) throw std::invalid_argument("overlap_score: both labels must be present");

  Index correct = 0;
  for (Index i = 0; i < N; ++i) {
    double best = std::numeric_limits<double>::infinity();
    bool best_has_real = false;
    for (Index j = 0; j < N; ++j) {
      if (j == i) continue;
      const double d = (proj.points.row(i) - proj.points.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        best_has_real = proj.labels[j] == Source::real;
      } else if (d == best && proj.labels[j] == Source::real) {
        best_has_real = true;
      }
    }
    const Source predicted = best_has_real ? Source::real : Source::synthetic;
    if (predicted == proj.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(N);
}

}  // namespace cyclegen
