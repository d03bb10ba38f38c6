#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclegen/nn/adam.hpp"
#include "cyclegen/nn/layers.hpp"
#include "cyclegen/preprocess.hpp"
#include "cyclegen/rng.hpp"

namespace cyclegen {

using nn::Matrix;

struct GanSpec {
  int l = 128;        // sequence length
  int d = 8;          // per-step noise width
  int g_hidden = 64;  // width of each generator LSTM layer
  int d_hidden = 64;  // width of each discriminator LSTM layer

  void validate() const;
  bool operator==(const GanSpec&) const = default;
};

/// What the generator descends. `saturating` is log(1 - D(G)); the
/// `non_saturating` variant descends -log D(G) instead. V̄_g is recorded
/// as log(1 - D(G)) either way.
enum class GenLoss { saturating, non_saturating };

std::string to_string(GenLoss loss);
GenLoss gen_loss_from_string(const std::string& s);

struct TrainConfig {
  long iterations = 2000;
  int batch_size = 16;
  double learning_rate_g = 2e-4;
  double learning_rate_d = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double prob_clamp = 1e-7;
  GenLoss gen_loss = GenLoss::saturating;
  std::uint64_t seed = 0;
  long checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const;
};

/// Two stacked LSTMs over [noise_t, scaled capacity], then a per-step
/// dense tanh head emitting (v, i, T).
struct Generator {
  nn::Lstm lstm1, lstm2;
  nn::Dense head;

  static Generator zeros(const GanSpec& spec);
  static Generator init(const GanSpec& spec, Rng& rng);

  template <class F> void visit(F&& f) { visit_impl(*this, f); }
  template <class F> void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F> static void visit_impl(Self& s, F& f) {
    s.lstm1.visit([&](const std::string& n, auto& m) { f("gen.lstm1." + n, m); });
    s.lstm2.visit([&](const std::string& n, auto& m) { f("gen.lstm2." + n, m); });
    s.head.visit([&](const std::string& n, auto& m) { f("gen.head." + n, m); });
  }
};

/// Two stacked LSTMs over the 3-channel profile; a single sigmoid unit
/// reads the final hidden state.
struct Discriminator {
  nn::Lstm lstm1, lstm2;
  nn::Dense head;

  static Discriminator zeros(const GanSpec& spec);
  static Discriminator init(const GanSpec& spec, Rng& rng);

  template <class F> void visit(F&& f) { visit_impl(*this, f); }
  template <class F> void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F> static void visit_impl(Self& s, F& f) {
    s.lstm1.visit([&](const std::string& n, auto& m) { f("disc.lstm1." + n, m); });
    s.lstm2.visit([&](const std::string& n, auto& m) { f("disc.lstm2." + n, m); });
    s.head.visit([&](const std::string& n, auto& m) { f("disc.head." + n, m); });
  }
};

/// Affine map of the training smoothed-capacity range onto [-1, 1].
struct CondScale {
  double lo = 0.0;
  double hi = 0.0;
  double apply(double c) const;
  static CondScale from_capacities(std::span<const double> caps);
};

struct GanParams {
  GanSpec spec;
  Generator gen;
  Discriminator disc;
  CondScale cond;

  static GanParams zeros(const GanSpec& spec);
  static GanParams init(const GanSpec& spec, CondScale cond, Rng& rng);
};

/// noise is l x d; returns the 3 x l profile.
Matrix generator_forward(const GanParams& params, const Matrix& noise, double cond);
/// x is 3 x l; returns D(x) in (0, 1).
double discriminator_forward(const GanParams& params, const Matrix& x);

std::vector<Matrix> generate_batch(const GanParams& params, const std::vector<Matrix>& noise,
                                   std::span<const double> conds);
std::vector<double> discriminate_batch(const GanParams& params, const std::vector<Matrix>& profiles);

double clamp_prob(double p, double eps);
/// (1/s) sum [log D(x) + log(1 - D(x_hat))] on clamped probabilities.
double disc_objective_from_probs(std::span<const double> real_p, std::span<const double> fake_p,
                                 double eps);
/// (1/s) sum log(1 - D(G(z|c))) on clamped probabilities.
double gen_objective_from_probs(std::span<const double> fake_p, double eps);

double disc_objective(const GanParams& params, const std::vector<Matrix>& real,
                      const std::vector<Matrix>& fake, double eps);
double gen_objective(const GanParams& params, const std::vector<Matrix>& noise,
                     std::span<const double> conds, double eps);

struct DiscGradient {
  double value = 0.0;
  std::vector<double> real_p, fake_p;
  Discriminator grad;  // d value / d theta_d
};
struct GenGradient {
  double value = 0.0;
  std::vector<double> fake_p;
  Generator grad;  // d value / d theta_g
};

DiscGradient disc_objective_grad(const GanParams& params, const std::vector<Matrix>& real,
                                 const std::vector<Matrix>& fake, double eps);
/// `grad` is d/d theta_g of the descended quantity (see GenLoss); `value`
/// is always V̄_g.
GenGradient gen_objective_grad(const GanParams& params, const std::vector<Matrix>& noise,
                               std::span<const double> conds, double eps,
                               GenLoss loss = GenLoss::saturating);

struct IterationRecord {
  long iter = 0;
  char net = 'G';  // 'D' or 'G'
  double v_d = 0.0;
  double v_g = 0.0;
  bool operator==(const IterationRecord&) const = default;
};

struct TrainHistory {
  std::vector<IterationRecord> records;
  std::vector<long> checkpoints;

  long disc_updates() const;
  long gen_updates() const;
};

/// Mean of v_d and v_g over consecutive blocks of `iters_per_epoch`.
std::vector<IterationRecord> epoch_average(const TrainHistory& h, long iters_per_epoch);

/// CSV `iter,net_updated,v_d,v_g`.
void write_history_csv(const TrainHistory& h, const std::filesystem::path& path);
TrainHistory read_history_csv(const std::filesystem::path& path);

/// Everything needed to continue training bit-identically.
struct GanCheckpoint {
  GanParams params;
  nn::Adam adam_g;
  nn::Adam adam_d;
  long iteration = 0;
  std::uint64_t seed = 0;
  std::string rng_state;
  TrainHistory history;

  std::string id() const { return "ckpt-" + std::to_string(iteration); }
};

nlohmann::json checkpoint_to_json(const GanCheckpoint& ckpt);
GanCheckpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const GanCheckpoint& ckpt, const std::filesystem::path& path);
GanCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Alternating minimax loop: iteration i (from 1) updates the
/// discriminator when i % 3 == 0 and the generator otherwise.
class GanTrainer {
 public:
  using CheckpointCallback = std::function<void(const GanCheckpoint&)>;

  GanTrainer(std::vector<PreprocessedCycle> cycles, const GanSpec& spec, const TrainConfig& cfg);
  GanTrainer(std::vector<PreprocessedCycle> cycles, GanCheckpoint resume, const TrainConfig& cfg);

  void step();
  /// Runs until `iteration() == total`; invokes `cb` at the checkpoint cadence.
  void run_until(long total, const CheckpointCallback& cb = {});

  long iteration() const { return iteration_; }
  const GanParams& params() const { return params_; }
  const TrainHistory& history() const { return history_; }
  GanCheckpoint checkpoint() const;

 private:
  void prepare();

  std::vector<PreprocessedCycle> cycles_;
  std::vector<Matrix> profiles_;
  TrainConfig cfg_;
  GanParams params_;
  nn::Adam adam_g_, adam_d_;
  Rng rng_;
  long iteration_ = 0;
  TrainHistory history_;
};

struct GanTrainResult {
  GanParams params;
  TrainHistory history;
};

GanTrainResult train(const std::vector<PreprocessedCycle>& cycles, const GanSpec& spec,
                     const TrainConfig& cfg, const GanTrainer::CheckpointCallback& cb = {});

/// Average D(x) over the given real cycles.
double mean_disc_output(const GanParams& params, const std::vector<PreprocessedCycle>& cycles);

struct GradientCheckResult {
  double max_rel_error_d = 0.0;
  double max_rel_error_g = 0.0;
  double max_rel_error() const { return std::max(max_rel_error_d, max_rel_error_g); }
};

/// Compares analytic gradients of both objectives with central differences
/// over every parameter. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult gradient_check(const GanParams& params, const std::vector<Matrix>& real,
                                   const std::vector<Matrix>& noise, std::span<const double> conds,
                                   double eps = 1e-7, double step = 1e-5);

/// Random parameters and batches for a tiny spec (l <= 8, widths <= 4).
GradientCheckResult gradient_check(const GanSpec& spec, std::uint64_t seed);

}  // namespace cyclegen
