#pragma once

#include <cmath>
#include <vector>

#include "cyclegen/nn/layers.hpp"

namespace cyclegen::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected ADAM moments for one network. Always minimizes; callers
/// doing ascent pass the negated gradient.
class Adam {
 public:
  Adam() = default;

  template <class Net>
  explicit Adam(const Net& net) {
    net.visit([&](const std::string&, const Matrix& p) {
      m.push_back(Matrix::Zero(p.rows(), p.cols()));
      v.push_back(Matrix::Zero(p.rows(), p.cols()));
    });
  }

  template <class Net>
  void step(Net& params, Net& grads, const AdamConfig& cfg) {
    auto p = tensors(params);
    auto g = tensors(grads);
    ++steps;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(steps));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(steps));
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * *g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k]->cwiseAbs2();
      p[k]->array() -= cfg.learning_rate * (m[k].array() / bc1) /
                       ((v[k].array() / bc2).sqrt() + cfg.eps);
    }
  }

  long steps = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

}  // namespace cyclegen::nn
