#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclegen/augment.hpp"
#include "cyclegen/dataio.hpp"
#include "cyclegen/evaluate.hpp"
#include "cyclegen/predictor.hpp"
#include "cyclegen/rcgan.hpp"
#include "cyclegen/report.hpp"

namespace cyclegen {

struct Seeds {
  std::uint64_t gan = 0;
  std::uint64_t augment = 0;
  std::uint64_t predictor = 0;
};

/// One document governing a whole run. Every sub-config is validated on
/// load; seeds must be given explicitly.
struct ExperimentConfig {
  std::string battery = "surrogate";
  std::optional<SurrogateConfig> surrogate;
  std::string cycles_path;
  std::string capacity_path;
  int K = 40;
  int l = 128;
  int m = 2;
  GanSpec gan;            // gan.l mirrors l
  TrainConfig gan_train;  // seed mirrors seeds.gan
  PredictorSpec predictor;
  PredictorTrainConfig predictor_train;  // seed mirrors seeds.predictor
  std::string models = "both";
  TsneConfig tsne;  // seed mirrors seeds.augment
  Seeds seeds;
  std::string output_dir;

  void validate() const;
  /// Re-derives the mirrored fields after an override.
  void sync();
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);
/// Parse errors carry the line and column from the JSON reader.
ExperimentConfig load_experiment(const std::filesystem::path& path);

std::vector<CellType> selected_models(const std::string& models);

/// Surrogate data when configured, canonical CSVs otherwise.
CycleDataset load_dataset(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct PreparedData {
  std::vector<PreprocessedCycle> train;
  std::vector<PreprocessedCycle> test;
  int test_m = 0;  // smoothing half-window used on the test split
};

/// Split at K and preprocess both halves. The test split is smoothed with
/// min(m, (n - 1) / 2) so short test sets stay valid.
PreparedData prepare_data(const ExperimentConfig& cfg, const CycleDataset& ds);

/// Midpoint capacities of the training ĉ series, one synthetic cycle each.
std::vector<SyntheticCycle> synthesize_midpoints(const GanParams& params,
                                                 const std::vector<PreprocessedCycle>& train,
                                                 std::uint64_t seed, const std::string& checkpoint_id);

/// Synthetic counterparts at each cycle's own ĉ (projection panels).
std::vector<SyntheticCycle> synthesize_at(const GanParams& params, const std::vector<PreprocessedCycle>& cycles,
                                          std::uint64_t seed, const std::string& checkpoint_id);

struct PredictionResult {
  std::vector<double> predicted;
  RegressionMetrics vs_raw;
  RegressionMetrics vs_smoothed;
};

PredictionResult score_predictor(const PredictorModel& model, const std::vector<PreprocessedCycle>& test);

std::vector<Matrix> profiles_of(const std::vector<PreprocessedCycle>& cycles);
std::vector<Matrix> profiles_of(const std::vector<SyntheticCycle>& cycles);

}  // namespace cyclegen
