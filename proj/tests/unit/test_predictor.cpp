#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cyclegen/augment.hpp"
#include "cyclegen/dataio.hpp"
#include "cyclegen/predictor.hpp"
#include "test_util.hpp"

using namespace cyclegen;

namespace {

std::vector<TrainingCycle> surrogate_set(int K = 12, int l = 8) {
  SurrogateConfig cfg;
  cfg.n_cycles = K;
  cfg.samples_per_cycle = 30;
  return to_training_set(preprocess_dataset(synth_surrogate(cfg), l, 1));
}

PredictorSpec small_spec(CellType cell) {
  PredictorSpec s;
  s.cell = cell;
  s.hidden = 6;
  s.layers = 2;
  return s;
}

PredictorTrainConfig quick(int epochs) {
  PredictorTrainConfig c;
  c.epochs = epochs;
  c.batch_size = 4;
  c.seed = 3;
  return c;
}

std::vector<Matrix> profiles(const std::vector<TrainingCycle>& set) {
  std::vector<Matrix> out;
  for (const auto& t : set) out.push_back(t.profile);
  return out;
}

class PerCell : public ::testing::TestWithParam<CellType> {};

}  // namespace

TEST(Metrics, HandArithmetic) {
  const auto m = metrics(std::vector<double>{1, 2}, std::vector<double>{0, 2});
  EXPECT_NEAR(m.rmse, std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(m.rmse, 0.70711, 5e-6);
  EXPECT_DOUBLE_EQ(m.mae, 0.5);
  EXPECT_EQ(m.per_cycle_error, (std::vector<double>{1, 0}));
}

TEST(Metrics, PerfectPredictionAndErrors) {
  const std::vector<double> t{1.9, 1.8, 1.7};
  const auto m = metrics(t, t);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_THROW(metrics(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
  EXPECT_THROW(metrics(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(Metrics, RmseDominatesMae) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(5), t(5);
    for (auto& v : p) v = rng.normal();
    for (auto& v : t) v = rng.normal();
    const auto m = metrics(p, t);
    EXPECT_GE(m.rmse, m.mae - 1e-15);
  }
}

TEST_P(PerCell, IdenticalCyclesFitTheirTarget) {
  auto set = surrogate_set(3);
  set = std::vector<TrainingCycle>(8, set.front());
  for (auto& t : set) t.target = 1.85;
  auto cfg = quick(150);
  cfg.learning_rate = 1e-2;
  const auto model = train_predictor(set, small_spec(GetParam()), cfg);
  EXPECT_LT(model.epoch_loss.back(), 1e-6);
  EXPECT_NEAR(predict(model, {set.front().profile})[0], 1.85, 1e-3);
}

TEST_P(PerCell, ZeroLearningRateKeepsInitialization) {
  const auto set = surrogate_set();
  auto cfg = quick(3);
  cfg.learning_rate = 0.0;
  const auto model = train_predictor(set, small_spec(GetParam()), cfg);
  std::vector<double> targets;
  for (const auto& t : set) targets.push_back(t.target);
  const auto init = init_predictor(small_spec(GetParam()), 8, targets, cfg.seed);
  EXPECT_EQ(model_to_json(model)["tensors"], model_to_json(init)["tensors"]);
  EXPECT_EQ(predict(model, profiles(set)), predict(init, profiles(set)));
}

TEST_P(PerCell, LossDecreasesAndIsDeterministic) {
  const auto set = surrogate_set();
  const auto a = train_predictor(set, small_spec(GetParam()), quick(30));
  const auto b = train_predictor(set, small_spec(GetParam()), quick(30));
  ASSERT_EQ(a.epoch_loss.size(), 30u);
  EXPECT_LT(a.epoch_loss.back(), a.epoch_loss.front());
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_EQ(predict(a, profiles(set)), predict(b, profiles(set)));
}

TEST_P(PerCell, PredictIsStatelessAndOrderPreserving) {
  const auto set = surrogate_set();
  const auto model = train_predictor(set, small_spec(GetParam()), quick(5));
  const auto x = profiles(set);
  const auto y = predict(model, x);
  ASSERT_EQ(y.size(), x.size());
  std::vector<Matrix> rev(x.rbegin(), x.rend());
  auto yr = predict(model, rev);
  std::reverse(yr.begin(), yr.end());
  for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(yr[k], y[k], 1e-12);
  const auto dup = predict(model, {x[3], x[3]});
  EXPECT_EQ(dup[0], dup[1]);
  EXPECT_NEAR(dup[0], y[3], 1e-12);
  EXPECT_EQ(predict(model, x), y);
  EXPECT_TRUE(predict(model, {}).empty());
  EXPECT_THROW(predict(model, {Matrix::Zero(3, 9)}), std::invalid_argument);
}

TEST_P(PerCell, SaveLoadRoundTrip) {
  testutil::TempDir dir;
  const auto set = surrogate_set();
  const auto model = train_predictor(set, small_spec(GetParam()), quick(4));
  save_model(model, dir / "m.json");
  const auto back = load_model(dir / "m.json");
  EXPECT_EQ(predict(back, profiles(set)), predict(model, profiles(set)));
  EXPECT_EQ(back.epoch_loss, model.epoch_loss);
  EXPECT_EQ(back.spec.cell, GetParam());
}

INSTANTIATE_TEST_SUITE_P(Cells, PerCell, ::testing::Values(CellType::gru, CellType::lstm),
                         [](const auto& info) { return to_string(info.param); });

TEST(Predictor, EmptyTrainingSetIsRejected) {
  EXPECT_THROW(train_predictor({}, small_spec(CellType::gru), quick(1)), std::invalid_argument);
}

TEST(Predictor, AugmentingWithNothingMatchesBaseline) {
  SurrogateConfig cfg;
  cfg.n_cycles = 10;
  cfg.samples_per_cycle = 30;
  const auto real = preprocess_dataset(synth_surrogate(cfg), 8, 1);
  const auto a = train_predictor(to_training_set(real), small_spec(CellType::gru), quick(6));
  const auto b = train_predictor(merge(real, {}), small_spec(CellType::gru), quick(6));
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_EQ(model_to_json(a).dump(), model_to_json(b).dump());
}

TEST(Predictor, CellNames) {
  EXPECT_EQ(cell_type_from_string("gru"), CellType::gru);
  EXPECT_EQ(cell_type_from_string("lstm"), CellType::lstm);
  EXPECT_THROW(cell_type_from_string("rnn"), std::invalid_argument);
}
