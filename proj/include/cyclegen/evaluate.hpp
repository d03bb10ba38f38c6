#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cyclegen/augment.hpp"
#include "cyclegen/nn/layers.hpp"

namespace cyclegen {

enum class ProjectionMethod { pca, tsne };
std::string to_string(ProjectionMethod m);

struct Projection2D {
  Matrix points;               // N x 2
  std::vector<Source> labels;  // one per point
  std::vector<int> cycles;     // caller-supplied ids, one per point
  ProjectionMethod method = ProjectionMethod::pca;
  std::array<double, 2> explained_variance{};  // PCA eigenvalues
  std::array<double, 2> explained_ratio{};     // share of total variance

  std::size_t size() const { return labels.size(); }
};

/// Flattens a 3 x l profile channel by channel into a 3l vector.
Eigen::VectorXd flatten(const Matrix& profile);

/// Joint centering, projection onto the top two covariance eigenvectors.
/// Each component's largest-magnitude loading is made positive.
Projection2D pca_project(const std::vector<Matrix>& real, const std::vector<Matrix>& synth,
                         std::vector<int> real_ids = {}, std::vector<int> synth_ids = {});

struct TsneConfig {
  double perplexity = 10.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
};

/// Exact t-SNE (binary-searched perplexity, early exaggeration, momentum
/// and gains). Requires N > 3 * perplexity.
Projection2D tsne_project(const std::vector<Matrix>& real, const std::vector<Matrix>& synth,
                          const TsneConfig& cfg, std::vector<int> real_ids = {},
                          std::vector<int> synth_ids = {});

/// Lower-level entry taking row-vector points directly.
Matrix tsne_embed(const Matrix& X, const TsneConfig& cfg);

/// Leave-one-out 1-nearest-neighbour label accuracy; ties resolve to real.
double overlap_score(const Projection2D& proj);

}  // namespace cyclegen
