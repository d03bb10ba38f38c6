#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "cyclegen/cli.hpp"
#include "cyclegen/experiment.hpp"
#include "test_util.hpp"

using namespace cyclegen;
using testutil::read_file;
using testutil::TempDir;
using testutil::write_file;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json small_config() {
  return nlohmann::json::parse(R"({
    "battery": "surrogate",
    "data": {"surrogate": {"n_cycles": 16, "samples_per_cycle": 40, "c0": 2.0, "fade_rate": 0.01,
                           "regen_prob": 0.1, "regen_gain": 0.03, "noise_std": 0.005, "seed": 0}},
    "K": 10, "l": 8, "m": 1,
    "gan": {"d": 2, "g_hidden": 4, "d_hidden": 4, "iterations": 30, "batch_size": 4, "checkpoint_every": 10},
    "predictor": {"hidden": 4, "layers": 1, "epochs": 5, "batch_size": 4},
    "evaluate": {"models": "both", "perplexity": 2, "tsne_iterations": 50, "tsne_learning_rate": 100},
    "seeds": {"gan": 1, "augment": 2, "predictor": 3}
  })");
}

std::string write_config(const TempDir& dir, const nlohmann::json& j, const std::string& name = "cfg.json") {
  write_file(dir / name, j.dump(2));
  return (dir / name).string();
}

void run_pipeline(const std::string& cfg, const std::string& out) {
  for (const char* cmd : {"synth-data", "preprocess", "train-gan", "generate", "augment", "train-predictor", "evaluate"}) {
    const auto r = run({cmd, "--config", cfg, "--out", out});
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
  }
}

}  // namespace

TEST(Cli, FullPipelineProducesReportArtifacts) {
  TempDir dir;
  const auto cfg = write_config(dir, small_config());
  const auto out = (dir / "out").string();
  run_pipeline(cfg, out);
  for (const char* f : {"cycles.csv", "capacity.csv", "loss_curves.csv", "loss_curves.svg", "pca.csv", "pca.svg",
                        "pca_test.csv", "tsne.csv", "tsne.svg", "metrics.csv", "metrics_smoothed.csv",
                        "predictions.csv", "overlap.csv", "manifest.json", "augmented.csv", "gan/checkpoint.json",
                        "gan/checkpoints/ckpt-10.json", "gan/checkpoints/ckpt-30.json", "models/gru_original.json",
                        "models/lstm_augmented.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;

  const auto metrics = read_metrics_csv(dir / "out" / "metrics.csv");
  ASSERT_EQ(metrics.size(), 4u);
  EXPECT_EQ(read_file(dir / "out" / "pca.csv").substr(0, 15), "x,y,label,cycle");
  EXPECT_EQ(read_history_csv(dir / "out" / "loss_curves.csv").records.size(), 30u);
  const auto manifest = nlohmann::json::parse(read_file(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["seeds"]["gan"], 1);
  EXPECT_EQ(manifest["gan"]["generator_loss"], "saturating");
}

TEST(Cli, ReplayingTheManifestReproducesEveryCsv) {
  TempDir dir;
  const auto first = (dir / "a").string();
  run_pipeline(write_config(dir, small_config()), first);
  const auto manifest = (dir / "a" / "manifest.json").string();
  const auto second = (dir / "b").string();
  run_pipeline(manifest, second);
  for (const char* f : {"cycles.csv", "capacity.csv", "loss_curves.csv", "augmented.csv", "metrics.csv",
                        "predictions.csv", "pca.csv", "pca_test.csv", "tsne.csv", "overlap.csv"})
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
}

TEST(Cli, ResumeContinuesToTheSameCheckpoint) {
  TempDir dir;
  const auto cfg = write_config(dir, small_config());
  const auto out = (dir / "out").string();
  for (const char* cmd : {"synth-data", "preprocess", "train-gan"}) ASSERT_EQ(run({cmd, "--config", cfg, "--out", out}).code, 0);
  const auto full = read_file(dir / "out" / "gan" / "checkpoint.json");
  ASSERT_EQ(run({"train-gan", "--config", cfg, "--out", out, "--iterations", "10"}).code, 0);
  const auto ckpt = (dir / "out" / "gan" / "checkpoint.json").string();
  std::filesystem::copy_file(ckpt, dir / "ckpt10.json");
  ASSERT_EQ(run({"train-gan", "--config", cfg, "--out", out, "--resume", (dir / "ckpt10.json").string()}).code, 0);
  EXPECT_EQ(read_file(ckpt), full);
}

TEST(Cli, NoAugmentBaselinePassesTheOriginalThrough) {
  TempDir dir;
  const auto cfg = write_config(dir, small_config());
  const auto out = (dir / "out").string();
  for (const char* cmd : {"synth-data", "preprocess"}) ASSERT_EQ(run({cmd, "--config", cfg, "--out", out}).code, 0);
  EXPECT_EQ(run({"train-predictor", "--config", cfg, "--out", out}).code, kExitData);
  const auto r = run({"train-predictor", "--config", cfg, "--out", out, "--no-augment", "--models", "gru"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "models" / "gru_original.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "models" / "lstm_original.json"));
  ASSERT_EQ(run({"augment", "--config", cfg, "--out", out, "--no-augment"}).code, 0);
  EXPECT_EQ(read_training_set(dir / "out" / "augmented.csv", dir / "out" / "augmented.json").size(), 10u);
}

TEST(Cli, MissingArtifactsAreDataErrors) {
  TempDir dir;
  const auto cfg = write_config(dir, small_config());
  const auto out = (dir / "out").string();
  auto r = run({"train-gan", "--config", cfg, "--out", out});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("train"), std::string::npos);
  r = run({"report", "--config", cfg, "--out", out});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("loss_curves.csv"), std::string::npos) << r.err;
  r = run({"augment", "--config", cfg, "--out", out});
  EXPECT_EQ(r.code, kExitData);
}

TEST(Cli, ConfigErrors) {
  TempDir dir;
  EXPECT_EQ(run({"preprocess"}).code, kExitConfig);
  EXPECT_EQ(run({"bogus", "--config", "x"}).code, kExitConfig);
  EXPECT_EQ(run({"preprocess", "--config", (dir / "absent.json").string()}).code, kExitConfig);

  auto j = small_config();
  j["unexpected"] = 1;
  auto r = run({"preprocess", "--config", write_config(dir, j)});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("unexpected"), std::string::npos);

  j = small_config();
  j.erase("seeds");
  EXPECT_EQ(run({"preprocess", "--config", write_config(dir, j)}).code, kExitConfig);

  j = small_config();
  j["gan"]["batch_size"] = 0;
  EXPECT_EQ(run({"train-gan", "--config", write_config(dir, j)}).code, kExitConfig);

  write_file(dir / "broken.json", "{\n  \"battery\": \"x\",\n  \"K\": ,\n}");
  r = run({"preprocess", "--config", (dir / "broken.json").string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;

  r = run({"train-predictor", "--config", write_config(dir, small_config()), "--models", "rnn"});
  EXPECT_EQ(r.code, kExitConfig);
}

TEST(Cli, NonFiniteTrainingIsNumericalFailure) {
  TempDir dir;
  auto j = small_config();
  j["gan"]["learning_rate_g"] = 1e308;
  j["gan"]["learning_rate_d"] = 1e308;
  const auto cfg = write_config(dir, j);
  const auto out = (dir / "out").string();
  for (const char* cmd : {"synth-data", "preprocess"}) ASSERT_EQ(run({cmd, "--config", cfg, "--out", out}).code, 0);
  const auto r = run({"train-gan", "--config", cfg, "--out", out});
  EXPECT_EQ(r.code, kExitNumerical) << r.err;
  EXPECT_NE(r.err.find("iteration"), std::string::npos);
}

TEST(Cli, OutputDirectoryPrecedence) {
  TempDir dir;
  auto j = small_config();
  const auto cfg = write_config(dir, j);
  const auto env_out = (dir / "from_env").string();
  ::setenv("CYCLEGEN_OUT", env_out.c_str(), 1);
  EXPECT_EQ(run({"synth-data", "--config", cfg}).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "from_env" / "cycles.csv"));

  j["output_dir"] = (dir / "from_config").string();
  const auto cfg2 = write_config(dir, j, "cfg2.json");
  EXPECT_EQ(run({"synth-data", "--config", cfg2}).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "from_config" / "cycles.csv"));

  EXPECT_EQ(run({"synth-data", "--config", cfg2, "--out", (dir / "from_flag").string()}).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "from_flag" / "cycles.csv"));
  ::unsetenv("CYCLEGEN_OUT");
}

TEST(Cli, SeedOverrideChangesSurrogate) {
  TempDir dir;
  const auto cfg = write_config(dir, small_config());
  ASSERT_EQ(run({"synth-data", "--config", cfg, "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run({"synth-data", "--config", cfg, "--out", (dir / "b").string(), "--seed", "9"}).code, 0);
  EXPECT_NE(read_file(dir / "a" / "cycles.csv"), read_file(dir / "b" / "cycles.csv"));
}

TEST(Cli, CanonicalInputPathsAreUsed) {
  TempDir dir;
  auto j = small_config();
  const auto out = (dir / "gen").string();
  ASSERT_EQ(run({"synth-data", "--config", write_config(dir, j), "--out", out}).code, 0);
  j["data"] = {{"cycles_path", (dir / "gen" / "cycles.csv").string()},
               {"capacity_path", (dir / "gen" / "capacity.csv").string()}};
  const auto r = run({"preprocess", "--config", write_config(dir, j, "real.json"), "--out", (dir / "p").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_preprocessed(dir / "p" / "preprocessed" / "train.csv", dir / "p" / "preprocessed" / "train.json").size(),
            10u);
}
