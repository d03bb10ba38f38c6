#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclegen/augment.hpp"
#include "cyclegen/nn/layers.hpp"

namespace cyclegen {

enum class CellType { lstm, gru };
std::string to_string(CellType c);
CellType cell_type_from_string(const std::string& s);

struct PredictorSpec {
  CellType cell = CellType::gru;
  int hidden = 64;
  int layers = 2;
  void validate() const;
};

struct PredictorTrainConfig {
  int epochs = 200;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Stacked recurrent layers over the 3 x l profile, dense scalar head on the
/// last hidden state. Outputs are mapped back to Ah with the training-set
/// target mean and standard deviation.
struct PredictorModel {
  PredictorSpec spec;
  int length = 0;
  std::vector<nn::Lstm> lstm;
  std::vector<nn::Gru> gru;
  nn::Dense head;
  double target_mean = 0.0;
  double target_scale = 1.0;
  std::vector<double> epoch_loss;  // mean squared error per epoch, Ah^2

  template <class F> void visit(F&& f) { visit_impl(*this, f); }
  template <class F> void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F> static void visit_impl(Self& s, F& f) {
    for (std::size_t k = 0; k < s.lstm.size(); ++k)
      s.lstm[k].visit([&](const std::string& n, auto& m) { f("lstm" + std::to_string(k) + "." + n, m); });
    for (std::size_t k = 0; k < s.gru.size(); ++k)
      s.gru[k].visit([&](const std::string& n, auto& m) { f("gru" + std::to_string(k) + "." + n, m); });
    s.head.visit([&](const std::string& n, auto& m) { f("head." + n, m); });
  }
};

/// Freshly initialized model (what training starts from).
PredictorModel init_predictor(const PredictorSpec& spec, int length, std::span<const double> targets,
                              std::uint64_t seed);

PredictorModel train_predictor(const std::vector<TrainingCycle>& train_set, const PredictorSpec& spec,
                               const PredictorTrainConfig& cfg);

/// One capacity (Ah) per 3 x l profile, order preserved.
std::vector<double> predict(const PredictorModel& model, const std::vector<Matrix>& profiles);

struct RegressionMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::vector<double> per_cycle_error;  // pred - truth
};

RegressionMetrics metrics(std::span<const double> pred, std::span<const double> truth);

nlohmann::json model_to_json(const PredictorModel& model);
PredictorModel model_from_json(const nlohmann::json& j);
void save_model(const PredictorModel& model, const std::filesystem::path& path);
PredictorModel load_model(const std::filesystem::path& path);

}  // namespace cyclegen
