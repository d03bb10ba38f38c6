#include "cyclegen/predictor.hpp"

#include <cmath>
#include <stdexcept>

#include "cyclegen/csv.hpp"
#include "cyclegen/errors.hpp"
#include "cyclegen/nn/adam.hpp"
#include "cyclegen/nn/serialize.hpp"

namespace cyclegen {

using nn::Index;
using nn::Seq;

namespace {

template <class Layer>
struct StackPass {
  std::vector<typename Layer::Cache> caches;
  Matrix h_last;
};

template <class Layer>
StackPass<Layer> stack_forward(const std::vector<Layer>& layers, const Seq& x) {
  StackPass<Layer> pass;
  pass.caches.resize(layers.size());
  Seq h = x;
  for (std::size_t k = 0; k < layers.size(); ++k) h = layers[k].forward(h, pass.caches[k]);
  pass.h_last = h.step(h.steps - 1);
  return pass;
}

template <class Layer>
void stack_backward(const std::vector<Layer>& layers, const StackPass<Layer>& pass, const Matrix& dh_last,
                    std::vector<Layer>& grads) {
  const auto& top = pass.caches.back();
  Seq dh(layers.back().hidden(), top.steps, top.batch);
  dh.step(top.steps - 1) = dh_last;
  for (std::size_t k = layers.size(); k-- > 0;) dh = layers[k].backward(pass.caches[k], dh, grads[k]);
}

Seq stack_profiles(const std::vector<const Matrix*>& profiles, Index length) {
  const auto B = static_cast<Index>(profiles.size());
  Seq x(kChannels, length, B);
  for (Index b = 0; b < B; ++b) {
    const Matrix& p = *profiles[b];
    if (p.rows() != kChannels || p.cols() != length)
      throw std::invalid_argument("predictor: profile must be 3 x " + std::to_string(length));
    for (Index t = 0; t < length; ++t) x.data.col(t * B + b) = p.col(t);
  }
  return x;
}

/// Scaled outputs (1 x B) for a batch; fills caches when requested.
struct ModelPass {
  StackPass<nn::Lstm> lstm;
  StackPass<nn::Gru> gru;
  Matrix out;
};

ModelPass model_forward(const PredictorModel& m, const Seq& x) {
  ModelPass pass;
  const Matrix& h = m.spec.cell == CellType::lstm ? (pass.lstm = stack_forward(m.lstm, x)).h_last
                                                  : (pass.gru = stack_forward(m.gru, x)).h_last;
  pass.out = m.head.forward(h);
  return pass;
}

void model_backward(const PredictorModel& m, const ModelPass& pass, const Matrix& dout, PredictorModel& grad) {
  const Matrix& h = m.spec.cell == CellType::lstm ? pass.lstm.h_last : pass.gru.h_last;
  const Matrix dh = m.head.backward(h, dout, grad.head);
  if (m.spec.cell == CellType::lstm)
    stack_backward(m.lstm, pass.lstm, dh, grad.lstm);
  else
    stack_backward(m.gru, pass.gru, dh, grad.gru);
}

}  // namespace

std::string to_string(CellType c) { return c == CellType::lstm ? "lstm" : "gru"; }

CellType cell_type_from_string(const std::string& s) {
  if (s == "lstm" || s == "LSTM") return CellType::lstm;
  if (s == "gru" || s == "GRU") return CellType::gru;
  throw std::invalid_argument("unknown cell type '" + s + "'");
}

void PredictorSpec::validate() const {
  if (hidden < 1) throw std::invalid_argument("PredictorSpec: hidden must be >= 1");
  if (layers < 1) throw std::invalid_argument("PredictorSpec: layers must be >= 1");
}

void PredictorTrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("PredictorTrainConfig: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("PredictorTrainConfig: batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("PredictorTrainConfig: learning_rate must be >= 0");
}

PredictorModel init_predictor(const PredictorSpec& spec, int length, std::span<const double> targets,
                              std::uint64_t seed) {
  spec.validate();
  if (targets.empty()) throw std::invalid_argument("predictor: empty training set");
  PredictorModel m;
  m.spec = spec;
  m.length = length;
  double mean = 0.0;
  for (double t : targets) mean += t;
  mean /= static_cast<double>(targets.size());
  double var = 0.0;
  for (double t : targets) var += (t - mean) * (t - mean);
  var /= static_cast<double>(targets.size());
  m.target_mean = mean;
  m.target_scale = var > 0.0 ? std::sqrt(var) : 1.0;

  Rng rng(seed);
  for (int k = 0; k < spec.layers; ++k) {
    const Index in = k == 0 ? kChannels : spec.hidden;
    if (spec.cell == CellType::lstm)
      m.lstm.push_back(nn::Lstm::init(in, spec.hidden, rng));
    else
      m.gru.push_back(nn::Gru::init(in, spec.hidden, rng));
  }
  m.head = nn::Dense::init(spec.hidden, 1, rng);
  return m;
}

PredictorModel train_predictor(const std::vector<TrainingCycle>& train_set, const PredictorSpec& spec,
                               const PredictorTrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train_predictor: empty training set");
  const auto length = static_cast<int>(train_set.front().profile.cols());
  std::vector<double> targets;
  for (const auto& c : train_set) targets.push_back(c.target);
  PredictorModel model = init_predictor(spec, length, targets, cfg.seed);

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  nn::Adam adam(model);
  const nn::AdamConfig acfg{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  const std::size_t N = train_set.size();
  std::vector<std::size_t> order(N);
  for (std::size_t k = 0; k < N; ++k) order[k] = k;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t k = N; k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);
    double sse = 0.0;
    for (std::size_t start = 0; start < N; start += cfg.batch_size) {
      const auto end = std::min(N, start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Matrix*> batch;
      Matrix y(1, static_cast<Index>(end - start));
      for (auto k = start; k < end; ++k) {
        batch.push_back(&train_set[order[k]].profile);
        y(0, static_cast<Index>(k - start)) = (train_set[order[k]].target - model.target_mean) / model.target_scale;
      }
      const auto pass = model_forward(model, stack_profiles(batch, length));
      const Matrix diff = pass.out - y;
      sse += diff.squaredNorm() * model.target_scale * model.target_scale;
      auto grad = nn::zeros_like(model);
      model_backward(model, pass, diff * (2.0 / static_cast<double>(batch.size())), grad);
      adam.step(model, grad, acfg);
    }
    const double loss = sse / static_cast<double>(N);
    if (!std::isfinite(loss))
      throw NumericalError("non-finite predictor loss at epoch " + std::to_string(epoch));
    model.epoch_loss.push_back(loss);
  }
  return model;
}

std::vector<double> predict(const PredictorModel& model, const std::vector<Matrix>& profiles) {
  if (profiles.empty()) return {};
  std::vector<const Matrix*> ptrs;
  for (const auto& p : profiles) ptrs.push_back(&p);
  const auto pass = model_forward(model, stack_profiles(ptrs, model.length));
  std::vector<double> out(profiles.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = model.target_mean + model.target_scale * pass.out(0, static_cast<Index>(k));
  return out;
}

RegressionMetrics metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("metrics: length mismatch");
  if (pred.empty()) throw std::invalid_argument("metrics: empty input");
  RegressionMetrics m;
  double sq = 0.0, abs = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double e = pred[k] - truth[k];
    m.per_cycle_error.push_back(e);
    sq += e * e;
    abs += std::abs(e);
  }
  const auto n = static_cast<double>(pred.size());
  m.rmse = std::sqrt(sq / n);
  m.mae = abs / n;
  return m;
}

nlohmann::json model_to_json(const PredictorModel& m) {
  return {{"format", "cyclegen-predictor/1"},
          {"cell", to_string(m.spec.cell)},
          {"hidden", m.spec.hidden},
          {"layers", m.spec.layers},
          {"length", m.length},
          {"target_mean", m.target_mean},
          {"target_scale", m.target_scale},
          {"epoch_loss", m.epoch_loss},
          {"tensors", nn::to_json(m)}};
}

PredictorModel model_from_json(const nlohmann::json& j) {
  try {
    PredictorSpec spec{cell_type_from_string(j.at("cell").get<std::string>()), j.at("hidden").get<int>(),
                       j.at("layers").get<int>()};
    const double one = 1.0;
    PredictorModel m = init_predictor(spec, j.at("length").get<int>(), std::span<const double>(&one, 1), 0);
    m.target_mean = j.at("target_mean").get<double>();
    m.target_scale = j.at("target_scale").get<double>();
    m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    nn::from_json(j.at("tensors"), m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed predictor model: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(std::string("malformed predictor model: ") + e.what());
  }
}

void save_model(const PredictorModel& model, const std::filesystem::path& path) {
  csv::open_out(path) << model_to_json(model).dump() << '\n';
}

PredictorModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("model not found: " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(csv::open_in(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace cyclegen
