#include "cyclegen/experiment.hpp"

#include <algorithm>
#include <initializer_list>
#include <stdexcept>

#include "cyclegen/csv.hpp"
#include "cyclegen/errors.hpp"

namespace cyclegen {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(where + ": missing required key '" + key + "'");
    return;
  }
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

SurrogateConfig surrogate_from_json(const json& j) {
  const std::string w = "data.surrogate";
  check_keys(j, {"n_cycles", "samples_per_cycle", "c0", "fade_rate", "regen_prob", "regen_gain", "noise_std", "seed"},
             w);
  SurrogateConfig s;
  read(j, "n_cycles", s.n_cycles, w, true);
  read(j, "samples_per_cycle", s.samples_per_cycle, w, true);
  read(j, "c0", s.c0, w, true);
  read(j, "fade_rate", s.fade_rate, w, true);
  read(j, "regen_prob", s.regen_prob, w, true);
  read(j, "regen_gain", s.regen_gain, w, true);
  read(j, "noise_std", s.noise_std, w, true);
  read(j, "seed", s.seed, w, true);
  s.validate();
  return s;
}

json surrogate_to_json(const SurrogateConfig& s) {
  return {{"n_cycles", s.n_cycles},   {"samples_per_cycle", s.samples_per_cycle},
          {"c0", s.c0},               {"fade_rate", s.fade_rate},
          {"regen_prob", s.regen_prob}, {"regen_gain", s.regen_gain},
          {"noise_std", s.noise_std}, {"seed", s.seed}};
}

template <class Fn>
auto as_config_error(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void ExperimentConfig::sync() {
  gan.l = l;
  gan_train.seed = seeds.gan;
  predictor_train.seed = seeds.predictor;
  tsne.seed = seeds.augment;
}

void ExperimentConfig::validate() const {
  as_config_error([&] {
    if (surrogate) surrogate->validate();
    else if (cycles_path.empty() || capacity_path.empty())
      throw ConfigError("data: give either 'surrogate' or both 'cycles_path' and 'capacity_path'");
    if (K < 1) throw ConfigError("K must be >= 1");
    if (l < 2) throw ConfigError("l must be >= 2");
    if (m < 0 || 2 * m + 1 > K) throw ConfigError("m must satisfy 0 <= m and 2m+1 <= K");
    gan.validate();
    gan_train.validate();
    predictor.validate();
    predictor_train.validate();
    selected_models(models);
    if (static_cast<long>(K) < gan_train.batch_size) throw ConfigError("gan.batch_size exceeds K");
    return 0;
  });
}

ExperimentConfig experiment_from_json(const json& j) {
  check_keys(j, {"battery", "data", "K", "l", "m", "gan", "predictor", "evaluate", "seeds", "output_dir"}, "config");
  ExperimentConfig c;
  read(j, "battery", c.battery, "config");
  read(j, "K", c.K, "config");
  read(j, "l", c.l, "config");
  read(j, "m", c.m, "config");
  read(j, "output_dir", c.output_dir, "config");

  if (!j.contains("data")) throw ConfigError("config: missing required key 'data'");
  const auto& data = j.at("data");
  check_keys(data, {"surrogate", "cycles_path", "capacity_path"}, "data");
  if (data.contains("surrogate")) c.surrogate = surrogate_from_json(data.at("surrogate"));
  read(data, "cycles_path", c.cycles_path, "data");
  read(data, "capacity_path", c.capacity_path, "data");

  if (j.contains("gan")) {
    const auto& g = j.at("gan");
    check_keys(g, {"d", "g_hidden", "d_hidden", "iterations", "batch_size", "learning_rate_g", "learning_rate_d",
                   "adam_beta1", "adam_beta2", "adam_eps", "prob_clamp", "checkpoint_every",
                   "generator_loss"},
               "gan");
    read(g, "d", c.gan.d, "gan");
    read(g, "g_hidden", c.gan.g_hidden, "gan");
    read(g, "d_hidden", c.gan.d_hidden, "gan");
    read(g, "iterations", c.gan_train.iterations, "gan");
    read(g, "batch_size", c.gan_train.batch_size, "gan");
    read(g, "learning_rate_g", c.gan_train.learning_rate_g, "gan");
    read(g, "learning_rate_d", c.gan_train.learning_rate_d, "gan");
    read(g, "adam_beta1", c.gan_train.adam_beta1, "gan");
    read(g, "adam_beta2", c.gan_train.adam_beta2, "gan");
    read(g, "adam_eps", c.gan_train.adam_eps, "gan");
    read(g, "prob_clamp", c.gan_train.prob_clamp, "gan");
    read(g, "checkpoint_every", c.gan_train.checkpoint_every, "gan");
    if (g.contains("generator_loss")) {
      std::string loss;
      read(g, "generator_loss", loss, "gan");
      c.gan_train.gen_loss = gen_loss_from_string(loss);
    }
  }
  if (j.contains("predictor")) {
    const auto& p = j.at("predictor");
    check_keys(p, {"hidden", "layers", "epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2",
                   "adam_eps"},
               "predictor");
    read(p, "hidden", c.predictor.hidden, "predictor");
    read(p, "layers", c.predictor.layers, "predictor");
    read(p, "epochs", c.predictor_train.epochs, "predictor");
    read(p, "batch_size", c.predictor_train.batch_size, "predictor");
    read(p, "learning_rate", c.predictor_train.learning_rate, "predictor");
    read(p, "adam_beta1", c.predictor_train.adam_beta1, "predictor");
    read(p, "adam_beta2", c.predictor_train.adam_beta2, "predictor");
    read(p, "adam_eps", c.predictor_train.adam_eps, "predictor");
  }
  if (j.contains("evaluate")) {
    const auto& e = j.at("evaluate");
    check_keys(e, {"models", "perplexity", "tsne_iterations", "tsne_learning_rate"}, "evaluate");
    read(e, "models", c.models, "evaluate");
    read(e, "perplexity", c.tsne.perplexity, "evaluate");
    read(e, "tsne_iterations", c.tsne.iterations, "evaluate");
    read(e, "tsne_learning_rate", c.tsne.learning_rate, "evaluate");
  }
  if (!j.contains("seeds")) throw ConfigError("config: missing required key 'seeds'");
  const auto& s = j.at("seeds");
  check_keys(s, {"gan", "augment", "predictor"}, "seeds");
  read(s, "gan", c.seeds.gan, "seeds", true);
  read(s, "augment", c.seeds.augment, "seeds", true);
  read(s, "predictor", c.seeds.predictor, "seeds", true);

  c.sync();
  c.validate();
  return c;
}

json experiment_to_json(const ExperimentConfig& c) {
  json data = json::object();
  if (c.surrogate) data["surrogate"] = surrogate_to_json(*c.surrogate);
  if (!c.cycles_path.empty()) data["cycles_path"] = c.cycles_path;
  if (!c.capacity_path.empty()) data["capacity_path"] = c.capacity_path;
  json j = {{"battery", c.battery},
            {"data", data},
            {"K", c.K},
            {"l", c.l},
            {"m", c.m},
            {"gan",
             {{"d", c.gan.d},
              {"g_hidden", c.gan.g_hidden},
              {"d_hidden", c.gan.d_hidden},
              {"iterations", c.gan_train.iterations},
              {"batch_size", c.gan_train.batch_size},
              {"learning_rate_g", c.gan_train.learning_rate_g},
              {"learning_rate_d", c.gan_train.learning_rate_d},
              {"adam_beta1", c.gan_train.adam_beta1},
              {"adam_beta2", c.gan_train.adam_beta2},
              {"adam_eps", c.gan_train.adam_eps},
              {"prob_clamp", c.gan_train.prob_clamp},
              {"generator_loss", to_string(c.gan_train.gen_loss)},
              {"checkpoint_every", c.gan_train.checkpoint_every}}},
            {"predictor",
             {{"hidden", c.predictor.hidden},
              {"layers", c.predictor.layers},
              {"epochs", c.predictor_train.epochs},
              {"batch_size", c.predictor_train.batch_size},
              {"learning_rate", c.predictor_train.learning_rate},
              {"adam_beta1", c.predictor_train.adam_beta1},
              {"adam_beta2", c.predictor_train.adam_beta2},
              {"adam_eps", c.predictor_train.adam_eps}}},
            {"evaluate",
             {{"models", c.models},
              {"perplexity", c.tsne.perplexity},
              {"tsne_iterations", c.tsne.iterations},
              {"tsne_learning_rate", c.tsne.learning_rate}}},
            {"seeds", {{"gan", c.seeds.gan}, {"augment", c.seeds.augment}, {"predictor", c.seeds.predictor}}}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return experiment_from_json(j);
}

std::vector<CellType> selected_models(const std::string& models) {
  if (models == "gru") return {CellType::gru};
  if (models == "lstm") return {CellType::lstm};
  if (models == "both") return {CellType::gru, CellType::lstm};
  throw ConfigError("models must be one of gru, lstm, both (got '" + models + "')");
}

CycleDataset load_dataset(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  if (!cfg.cycles_path.empty()) return load_canonical(cfg.cycles_path, cfg.capacity_path);
  const auto cycles = out_dir / "cycles.csv";
  const auto capacity = out_dir / "capacity.csv";
  if (std::filesystem::exists(cycles) && std::filesystem::exists(capacity)) return load_canonical(cycles, capacity);
  if (!cfg.surrogate) throw DataError("no dataset found at " + cycles.string());
  auto ds = synth_surrogate(*cfg.surrogate);
  ds.battery_id = cfg.battery;
  return ds;
}

PreparedData prepare_data(const ExperimentConfig& cfg, const CycleDataset& ds) {
  auto [train, test] = split_train_test(ds, cfg.K);
  PreparedData out;
  out.test_m = std::min(cfg.m, static_cast<int>((test.size() - 1) / 2));
  out.train = preprocess_dataset(train, cfg.l, cfg.m);
  out.test = preprocess_dataset(test, cfg.l, out.test_m);
  return out;
}

std::vector<SyntheticCycle> synthesize_midpoints(const GanParams& params,
                                                 const std::vector<PreprocessedCycle>& train,
                                                 std::uint64_t seed, const std::string& checkpoint_id) {
  std::vector<double> caps;
  for (const auto& c : train) caps.push_back(c.c_smooth);
  return generate_cycles(params, midpoint_capacities(caps), seed, checkpoint_id);
}

std::vector<SyntheticCycle> synthesize_at(const GanParams& params, const std::vector<PreprocessedCycle>& cycles,
                                          std::uint64_t seed, const std::string& checkpoint_id) {
  std::vector<double> caps;
  for (const auto& c : cycles) caps.push_back(c.c_smooth);
  return generate_cycles(params, caps, seed, checkpoint_id);
}

PredictionResult score_predictor(const PredictorModel& model, const std::vector<PreprocessedCycle>& test) {
  PredictionResult r;
  r.predicted = predict(model, profiles_of(test));
  std::vector<double> raw, smooth;
  for (const auto& c : test) {
    raw.push_back(c.c_raw);
    smooth.push_back(c.c_smooth);
  }
  r.vs_raw = metrics(r.predicted, raw);
  r.vs_smoothed = metrics(r.predicted, smooth);
  return r;
}

std::vector<Matrix> profiles_of(const std::vector<PreprocessedCycle>& cycles) {
  std::vector<Matrix> out;
  for (const auto& c : cycles) out.push_back(c.profile());
  return out;
}

std::vector<Matrix> profiles_of(const std::vector<SyntheticCycle>& cycles) {
  std::vector<Matrix> out;
  for (const auto& c : cycles) out.push_back(c.profile());
  return out;
}

}  // namespace cyclegen
