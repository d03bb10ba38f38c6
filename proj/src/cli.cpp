#include "cyclegen/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cyclegen/csv.hpp"
#include "cyclegen/errors.hpp"
#include "cyclegen/experiment.hpp"

namespace cyclegen {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<long> iterations;
  std::string resume;
  std::string models;
  bool no_augment = false;
};

/// Where every artifact of a run lives, relative to the output root.
struct Layout {
  fs::path root;

  fs::path cycles() const { return root / "cycles.csv"; }
  fs::path capacity() const { return root / "capacity.csv"; }
  fs::path prep_csv(const std::string& split) const { return root / "preprocessed" / (split + ".csv"); }
  fs::path prep_json(const std::string& split) const { return root / "preprocessed" / (split + ".json"); }
  fs::path checkpoint() const { return root / "gan" / "checkpoint.json"; }
  fs::path periodic_checkpoint(long it) const {
    return root / "gan" / "checkpoints" / ("ckpt-" + std::to_string(it) + ".json");
  }
  fs::path loss_curves() const { return root / "loss_curves.csv"; }
  fs::path synth_csv(const std::string& panel) const { return root / "synthetic" / (panel + ".csv"); }
  fs::path synth_json(const std::string& panel) const { return root / "synthetic" / (panel + ".json"); }
  fs::path augmented_csv() const { return root / "augmented.csv"; }
  fs::path augmented_json() const { return root / "augmented.json"; }
  fs::path model(CellType cell, const std::string& dataset) const {
    return root / "models" / (to_string(cell) + "_" + dataset + ".json");
  }
  fs::path metrics() const { return root / "metrics.csv"; }
  fs::path metrics_smoothed() const { return root / "metrics_smoothed.csv"; }
  fs::path predictions() const { return root / "predictions.csv"; }
  fs::path manifest() const { return root / "manifest.json"; }
};

void require(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw DataError("missing " + what + ": " + p.string());
}

class Runner {
 public:
  Runner(ExperimentConfig cfg, Options opt, std::ostream& out, std::ostream& err)
      : cfg_(std::move(cfg)), opt_(std::move(opt)), out_(out), err_(err) {
    if (!opt_.models.empty()) cfg_.models = opt_.models;
    selected_models(cfg_.models);
    fs::path root;
    if (!opt_.out.empty()) root = opt_.out;
    else if (!cfg_.output_dir.empty()) root = cfg_.output_dir;
    else if (const char* env = std::getenv("CYCLEGEN_OUT"); env && *env) root = env;
    else root = "cyclegen_out";
    layout_.root = root;
  }

  void synth_data() {
    if (!cfg_.surrogate) throw ConfigError("synth-data needs data.surrogate in the config");
    if (opt_.seed) cfg_.surrogate->seed = *opt_.seed;
    auto ds = synth_surrogate(*cfg_.surrogate);
    ds.battery_id = cfg_.battery;
    write_canonical(ds, layout_.cycles(), layout_.capacity());
    out_ << "wrote " << ds.size() << " cycles to " << layout_.cycles().string() << " and "
         << layout_.capacity().string() << '\n';
    write_manifest();
  }

  void preprocess() {
    const auto ds = load_dataset(cfg_, layout_.root);
    const auto prepared = prepare_data(cfg_, ds);
    write_preprocessed(prepared.train, layout_.prep_csv("train"), layout_.prep_json("train"));
    write_preprocessed(prepared.test, layout_.prep_csv("test"), layout_.prep_json("test"));
    std::vector<double> smooth;
    for (const auto& c : prepared.train) smooth.push_back(c.c_smooth);
    out_ << "preprocessed " << prepared.train.size() << " train / " << prepared.test.size()
         << " test cycles (l=" << cfg_.l << ", m=" << cfg_.m << ", test m=" << prepared.test_m
         << "); smoothed capacity nonincreasing: " << (is_nonincreasing(smooth) ? "yes" : "no") << '\n';
    write_manifest();
  }

  void train_gan() {
    if (opt_.seed) cfg_.seeds.gan = *opt_.seed;
    if (opt_.iterations) cfg_.gan_train.iterations = *opt_.iterations;
    cfg_.sync();
    cfg_.validate();
    const auto train = load_split("train");
    std::optional<GanTrainer> trainer;
    if (!opt_.resume.empty()) {
      trainer.emplace(train, load_checkpoint(opt_.resume), cfg_.gan_train);
    } else {
      trainer.emplace(train, cfg_.gan, cfg_.gan_train);
    }
    trainer->run_until(cfg_.gan_train.iterations, [&](const GanCheckpoint& c) {
      save_checkpoint(c, layout_.periodic_checkpoint(c.iteration));
    });
    const auto ckpt = trainer->checkpoint();
    save_checkpoint(ckpt, layout_.checkpoint());
    write_history_csv(ckpt.history, layout_.loss_curves());
    out_ << "trained GAN to iteration " << ckpt.iteration << " (" << ckpt.history.disc_updates()
         << " discriminator / " << ckpt.history.gen_updates() << " generator updates); checkpoint "
         << layout_.checkpoint().string() << '\n';
    write_manifest();
  }

  void generate() {
    if (opt_.seed) cfg_.seeds.augment = *opt_.seed;
    cfg_.sync();
    write_panels(load_checkpoint_or_fail());
    write_manifest();
  }

  void augment() {
    if (opt_.seed) cfg_.seeds.augment = *opt_.seed;
    cfg_.sync();
    const auto train = load_split("train");
    std::vector<TrainingCycle> set;
    if (opt_.no_augment) {
      set = to_training_set(train);
    } else {
      const auto ckpt = load_checkpoint_or_fail();
      const auto synth = synthesize_midpoints(ckpt.params, train, cfg_.seeds.augment, ckpt.id());
      write_synthetic(synth, layout_.synth_csv("midpoints"), layout_.synth_json("midpoints"));
      set = merge(train, synth);
    }
    write_training_set(set, layout_.augmented_csv(), layout_.augmented_json());
    out_ << "augmented set: " << set.size() << " cycles -> " << layout_.augmented_csv().string() << '\n';
    write_manifest();
  }

  void train_predictor() {
    if (opt_.seed) cfg_.seeds.predictor = *opt_.seed;
    cfg_.sync();
    const auto train = load_split("train");
    for (auto cell : selected_models(cfg_.models))
      for (const auto& dataset : datasets()) fit(cell, dataset, train);
    write_manifest();
  }

  void evaluate() {
    if (opt_.seed) cfg_.seeds.predictor = *opt_.seed;
    cfg_.sync();
    const auto train = load_split("train");
    const auto test = load_split("test");
    std::vector<MetricsRow> raw_rows, smooth_rows;
    auto pred_out = open_predictions(test);
    for (auto cell : selected_models(cfg_.models)) {
      for (const auto& dataset : datasets()) {
        const auto path = layout_.model(cell, dataset);
        const auto model = fs::exists(path) ? load_model(path) : fit(cell, dataset, train);
        const auto r = score_predictor(model, test);
        raw_rows.push_back({cfg_.battery, to_string(cell), dataset, r.vs_raw.rmse, r.vs_raw.mae});
        smooth_rows.push_back({cfg_.battery, to_string(cell), dataset, r.vs_smoothed.rmse, r.vs_smoothed.mae});
        for (std::size_t k = 0; k < test.size(); ++k)
          pred_out << test[k].cycle_index << ',' << to_string(cell) << ',' << dataset << ','
                   << csv::format(r.predicted[k]) << ',' << csv::format(test[k].c_raw) << ','
                   << csv::format(test[k].c_smooth) << '\n';
        out_ << to_string(cell) << '/' << dataset << ": rmse " << r.vs_raw.rmse << " mae " << r.vs_raw.mae << '\n';
      }
    }
    write_metrics_csv(raw_rows, layout_.metrics());
    write_metrics_csv(smooth_rows, layout_.metrics_smoothed());
    report();
  }

  void report() {
    cfg_.sync();
    EvalReport rep;
    require(layout_.loss_curves(), "loss history (loss_curves.csv)");
    rep.history = read_history_csv(layout_.loss_curves());
    require(layout_.metrics(), "metrics table (metrics.csv)");
    rep.metrics = read_metrics_csv(layout_.metrics());

    const auto train = load_split("train");
    const auto test = load_split("test");
    if (!fs::exists(layout_.synth_csv("train")) || !fs::exists(layout_.synth_csv("test")))
      write_panels(load_checkpoint_or_fail());
    const auto synth_train = read_synthetic(layout_.synth_csv("train"), layout_.synth_json("train"));
    const auto synth_test = read_synthetic(layout_.synth_csv("test"), layout_.synth_json("test"));

    auto ids = [](const std::vector<PreprocessedCycle>& cs) {
      std::vector<int> out;
      for (const auto& c : cs) out.push_back(c.cycle_index);
      return out;
    };
    const auto rp = profiles_of(train), sp = profiles_of(synth_train);
    const auto rpt = profiles_of(test), spt = profiles_of(synth_test);
    rep.projections.push_back({"pca", pca_project(rp, sp, ids(train), ids(train))});
    rep.projections.push_back({"pca_test", pca_project(rpt, spt, ids(test), ids(test))});
    rep.projections.push_back({"tsne", tsne_project(rp, sp, cfg_.tsne, ids(train), ids(train))});
    if (static_cast<double>(rpt.size() + spt.size()) > 3.0 * cfg_.tsne.perplexity)
      rep.projections.push_back({"tsne_test", tsne_project(rpt, spt, cfg_.tsne, ids(test), ids(test))});
    else
      err_ << "warning: test panel too small for t-SNE at perplexity " << cfg_.tsne.perplexity << "; skipped\n";
    rep.manifest = experiment_to_json(cfg_);
    build_report(rep, layout_.root);
    for (const auto& p : rep.projections)
      out_ << "overlap(" << p.name << ") = " << overlap_score(p.projection) << '\n';
    out_ << "report written to " << layout_.root.string() << '\n';
  }

 private:
  std::vector<std::string> datasets() const {
    if (fs::exists(layout_.augmented_csv())) return {"original", "augmented"};
    if (opt_.no_augment) return {"original"};
    throw DataError("missing augmented set: " + layout_.augmented_csv().string() +
                    " (run augment, or pass --no-augment)");
  }

  PredictorModel fit(CellType cell, const std::string& dataset, const std::vector<PreprocessedCycle>& train) {
    const auto set = dataset == "original" ? to_training_set(train)
                                           : read_training_set(layout_.augmented_csv(), layout_.augmented_json());
    auto spec = cfg_.predictor;
    spec.cell = cell;
    auto model = cyclegen::train_predictor(set, spec, cfg_.predictor_train);
    save_model(model, layout_.model(cell, dataset));
    out_ << "trained " << to_string(cell) << " on " << dataset << " (" << set.size() << " cycles), final loss "
         << (model.epoch_loss.empty() ? 0.0 : model.epoch_loss.back()) << '\n';
    return model;
  }

  std::vector<PreprocessedCycle> load_split(const std::string& split) const {
    require(layout_.prep_csv(split), "preprocessed " + split + " split");
    require(layout_.prep_json(split), "preprocessed " + split + " sidecar");
    return read_preprocessed(layout_.prep_csv(split), layout_.prep_json(split));
  }

  GanCheckpoint load_checkpoint_or_fail() const {
    require(layout_.checkpoint(), "GAN checkpoint");
    return load_checkpoint(layout_.checkpoint());
  }

  void write_panels(const GanCheckpoint& ckpt) {
    const auto train = load_split("train");
    const auto test = load_split("test");
    const auto st = synthesize_at(ckpt.params, train, cfg_.seeds.augment, ckpt.id());
    const auto ss = synthesize_at(ckpt.params, test, cfg_.seeds.augment + 1, ckpt.id());
    write_synthetic(st, layout_.synth_csv("train"), layout_.synth_json("train"));
    write_synthetic(ss, layout_.synth_csv("test"), layout_.synth_json("test"));
    std::size_t extrapolated = 0;
    for (const auto& s : ss) extrapolated += s.provenance.extrapolated;
    out_ << "generated " << st.size() << " train-panel and " << ss.size() << " test-panel synthetic cycles ("
         << extrapolated << " extrapolated)\n";
  }

  std::ofstream open_predictions(const std::vector<PreprocessedCycle>&) const {
    auto out = csv::open_out(layout_.predictions());
    out << "cycle,model,dataset,predicted,c_raw,c_smooth\n";
    return out;
  }

  void write_manifest() const { csv::open_out(layout_.manifest()) << experiment_to_json(cfg_).dump(2) << '\n'; }

  ExperimentConfig cfg_;
  Options opt_;
  std::ostream& out_;
  std::ostream& err_;
  Layout layout_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cyclegen: recurrent conditional GAN augmentation for battery capacity prediction"};
  app.require_subcommand(1);
  Options opt;

  struct Command {
    const char* name;
    const char* help;
    void (Runner::*run)();
  };
  const Command commands[] = {
      {"synth-data", "Write a surrogate battery dataset as canonical CSV", &Runner::synth_data},
      {"preprocess", "Split, downsample, standardize and smooth capacities", &Runner::preprocess},
      {"train-gan", "Train the recurrent conditional GAN", &Runner::train_gan},
      {"generate", "Generate synthetic cycles at the train and test capacities", &Runner::generate},
      {"augment", "Insert one synthetic cycle between each pair of training cycles", &Runner::augment},
      {"train-predictor", "Train LSTM/GRU capacity regressors", &Runner::train_predictor},
      {"evaluate", "Score predictors on the test split and build the report", &Runner::evaluate},
      {"report", "Rebuild projections, overlap scores and SVGs from artifacts", &Runner::report},
  };

  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "Experiment config JSON")->required();
    sub->add_option("--out", opt.out, "Output directory (default: config output_dir, then $CYCLEGEN_OUT)");
    sub->add_option("--seed", opt.seed, "Override the seed used by this command");
    sub->add_option("--models", opt.models, "gru, lstm or both")->check(CLI::IsMember({"gru", "lstm", "both"}));
    sub->add_flag("--no-augment", opt.no_augment, "Baseline: pass the original set through");
    sub->add_option("--iterations", opt.iterations, "Override the GAN iteration budget");
    sub->add_option("--resume", opt.resume, "Resume GAN training from a checkpoint file");
    subs.emplace_back(sub, &c);
  }

  std::vector<const char*> argv{"cyclegen"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, r;
    const int code = app.exit(e, o, r);
    out << o.str();
    err << r.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Runner runner(load_experiment(opt.config), opt, out, err);
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) (runner.*(cmd->run))();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace cyclegen
