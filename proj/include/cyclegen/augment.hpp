#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cyclegen/preprocess.hpp"
#include "cyclegen/rcgan.hpp"

namespace cyclegen {

struct SyntheticProvenance {
  std::string checkpoint_id;
  std::uint64_t seed = 0;
  std::size_t position = 0;   // index into the requested capacity list
  bool extrapolated = false;  // capacity outside the training range +- 10%
  bool operator==(const SyntheticProvenance&) const = default;
};

struct SyntheticCycle {
  double cond_capacity = 0.0;
  std::vector<double> v_norm;
  std::vector<double> i_norm;
  std::vector<double> t_norm;
  SyntheticProvenance provenance;

  Matrix profile() const;
  bool operator==(const SyntheticCycle&) const = default;
};

/// (c[k] + c[k+1]) / 2 for every adjacent pair.
std::vector<double> midpoint_capacities(std::span<const double> c_smooth);

/// One generator draw per capacity with fresh noise; deterministic in `seed`.
std::vector<SyntheticCycle> generate_cycles(const GanParams& params, std::span<const double> caps,
                                            std::uint64_t seed, const std::string& checkpoint_id = "");

enum class Source { real, synthetic };
std::string to_string(Source s);

/// Element of a predictor training set. Real cycles carry their measured
/// capacity as target; synthetic cycles carry their conditioning capacity.
struct TrainingCycle {
  int cycle_index = 0;  // real: cycle k; synthetic: insertion position + 1
  Source source = Source::real;
  Matrix profile;       // 3 x l
  double target = 0.0;  // Ah
  double capacity = 0.0;  // ordering key: smoothed or conditioning capacity
  bool operator==(const TrainingCycle&) const = default;
};

std::vector<TrainingCycle> to_training_set(const std::vector<PreprocessedCycle>& real);

/// real followed by synthetic, stably sorted by descending capacity.
std::vector<TrainingCycle> merge(const std::vector<PreprocessedCycle>& real,
                                 const std::vector<SyntheticCycle>& synth);

/// Denormalized export of a synthetic cycle inserted between two real
/// cycles; per-channel extrema are linearly interpolated by capacity.
RawCycle denormalize_synthetic(const SyntheticCycle& synth, const PreprocessedCycle& before,
                               const PreprocessedCycle& after);

/// Preprocessed CSV schema plus a `source` column; targets go to a sidecar.
void write_training_set(const std::vector<TrainingCycle>& set, const std::filesystem::path& csv_path,
                        const std::filesystem::path& sidecar_path);
std::vector<TrainingCycle> read_training_set(const std::filesystem::path& csv_path,
                                             const std::filesystem::path& sidecar_path);

void write_synthetic(const std::vector<SyntheticCycle>& cycles, const std::filesystem::path& csv_path,
                     const std::filesystem::path& sidecar_path);
std::vector<SyntheticCycle> read_synthetic(const std::filesystem::path& csv_path,
                                           const std::filesystem::path& sidecar_path);

}  // namespace cyclegen
