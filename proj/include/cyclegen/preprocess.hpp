#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cyclegen/dataio.hpp"

namespace cyclegen {

constexpr int kChannels = 3;  // voltage, current, temperature

/// Channel extrema in original units. `degenerate` marks a constant channel.
struct ChannelScale {
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;
  bool operator==(const ChannelScale&) const = default;
};

struct Standardized {
  std::vector<double> values;
  ChannelScale scale;
};

struct PreprocessedCycle {
  int cycle_index = 0;
  std::vector<double> v_norm;
  std::vector<double> i_norm;
  std::vector<double> t_norm;
  std::array<ChannelScale, kChannels> scale{};
  double c_raw = 0.0;
  double c_smooth = 0.0;

  std::size_t length() const { return v_norm.size(); }
  /// 3 x l matrix, rows (voltage, current, temperature).
  Eigen::MatrixXd profile() const;
  bool operator==(const PreprocessedCycle&) const = default;
};

/// Resamples onto l uniformly spaced time points by linear interpolation.
RawCycle downsample_cycle(const RawCycle& cycle, int l);

/// Maps onto [-1, 1] with the sequence's own extrema; constant input
/// yields zeros with the degenerate flag set.
Standardized minmax_standardize(std::span<const double> seq);

/// Inverse of minmax_standardize for a stored scale.
std::vector<double> destandardize(std::span<const double> norm, const ChannelScale& scale);

/// Centered moving mean with half-window m; the first and last m entries
/// are copied unchanged.
std::vector<double> smooth_capacity(std::span<const double> caps, int m);

/// True when every step is <= 0. Reported, never enforced.
bool is_nonincreasing(std::span<const double> series);

std::vector<PreprocessedCycle> preprocess_dataset(const CycleDataset& ds, int l, int m);

/// CSV `cycle,t_index,v_norm,i_norm,t_norm` plus a JSON sidecar holding
/// scales and capacities.
void write_preprocessed(const std::vector<PreprocessedCycle>& cycles,
                        const std::filesystem::path& csv_path,
                        const std::filesystem::path& sidecar_path);
std::vector<PreprocessedCycle> read_preprocessed(const std::filesystem::path& csv_path,
                                                 const std::filesystem::path& sidecar_path);

}  // namespace cyclegen
