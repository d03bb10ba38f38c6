#include "cyclegen/rcgan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cyclegen/csv.hpp"
#include "cyclegen/errors.hpp"
#include "cyclegen/nn/serialize.hpp"

namespace cyclegen {

using nn::Index;
using nn::Seq;

namespace {

struct GenPass {
  nn::Lstm::Cache c1, c2;
  Seq h2;
  Matrix y;  // 3 x lB, tanh output
};

struct DiscPass {
  nn::Lstm::Cache c1, c2;
  Matrix h_last;  // hidden x B
  std::vector<double> p;
};

Seq generator_input(const GanParams& params, const std::vector<Matrix>& noise,
                    std::span<const double> conds) {
  const auto& spec = params.spec;
  const auto B = static_cast<Index>(noise.size());
  Seq x(spec.d + 1, spec.l, B);
  for (Index b = 0; b < B; ++b) {
    const auto& z = noise[b];
    if (z.rows() != spec.l || z.cols() != spec.d)
      throw std::invalid_argument("generator: noise must be l x d");
    if (!z.allFinite() || !std::isfinite(conds[b]))
      throw std::invalid_argument("generator: non-finite input");
    const double c = params.cond.apply(conds[b]);
    for (Index t = 0; t < spec.l; ++t) {
      x.data.block(0, t * B + b, spec.d, 1) = z.row(t).transpose();
      x.data(spec.d, t * B + b) = c;
    }
  }
  return x;
}

GenPass gen_forward(const GanParams& params, const std::vector<Matrix>& noise,
                    std::span<const double> conds) {
  if (noise.size() != conds.size())
    throw std::invalid_argument("generator: noise and capacity batches differ in size");
  GenPass pass;
  const Seq x = generator_input(params, noise, conds);
  const Seq h1 = params.gen.lstm1.forward(x, pass.c1);
  pass.h2 = params.gen.lstm2.forward(h1, pass.c2);
  pass.y = params.gen.head.forward(pass.h2.data).array().tanh().matrix();
  return pass;
}

std::vector<Matrix> unstack(const Matrix& y, Index steps, Index batch) {
  std::vector<Matrix> out(batch, Matrix(y.rows(), steps));
  for (Index t = 0; t < steps; ++t)
    for (Index b = 0; b < batch; ++b) out[b].col(t) = y.col(t * batch + b);
  return out;
}

Seq stack(const std::vector<Matrix>& profiles, Index steps) {
  const auto B = static_cast<Index>(profiles.size());
  Seq x(kChannels, steps, B);
  for (Index b = 0; b < B; ++b) {
    if (profiles[b].rows() != kChannels || profiles[b].cols() != steps)
      throw std::invalid_argument("discriminator: profile must be 3 x l");
    for (Index t = 0; t < steps; ++t) x.data.col(t * B + b) = profiles[b].col(t);
  }
  return x;
}

DiscPass disc_forward(const GanParams& params, const Seq& x) {
  DiscPass pass;
  const Seq h1 = params.disc.lstm1.forward(x, pass.c1);
  const Seq h2 = params.disc.lstm2.forward(h1, pass.c2);
  pass.h_last = h2.step(x.steps - 1);
  const Matrix logit = params.disc.head.forward(pass.h_last);
  pass.p.resize(x.batch);
  for (Index b = 0; b < x.batch; ++b) pass.p[b] = nn::sigmoid(logit(0, b));
  return pass;
}

/// Backprop from dV/dlogit; returns dV/dx and accumulates into grad.
Seq disc_backward(const GanParams& params, const DiscPass& pass, const Matrix& dlogit,
                  Discriminator& grad) {
  const Index T = pass.c1.steps, B = pass.c1.batch;
  const Matrix dh_last = params.disc.head.backward(pass.h_last, dlogit, grad.head);
  Seq dh2(params.disc.lstm2.hidden(), T, B);
  dh2.step(T - 1) = dh_last;
  const Seq dh1 = params.disc.lstm2.backward(pass.c2, dh2, grad.lstm2);
  return params.disc.lstm1.backward(pass.c1, dh1, grad.lstm1);
}

bool unclamped(double p, double eps) { return p >= eps && p <= 1.0 - eps; }

void check_batches(std::size_t a, std::size_t b) {
  if (a == 0 || b == 0) throw std::invalid_argument("objective: empty batch");
  if (a != b) throw std::invalid_argument("objective: batch sizes differ");
}

}  // namespace

void GanSpec::validate() const {
  if (l < 2) throw std::invalid_argument("GanSpec: l must be >= 2");
  if (d < 1) throw std::invalid_argument("GanSpec: d must be >= 1");
  if (g_hidden < 1 || d_hidden < 1) throw std::invalid_argument("GanSpec: hidden widths must be >= 1");
}

std::string to_string(GenLoss loss) {
  return loss == GenLoss::saturating ? "saturating" : "non_saturating";
}

GenLoss gen_loss_from_string(const std::string& s) {
  if (s == "saturating") return GenLoss::saturating;
  if (s == "non_saturating") return GenLoss::non_saturating;
  throw std::invalid_argument("unknown generator loss '" + s + "' (expected saturating or non_saturating)");
}

void TrainConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("TrainConfig: iterations must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate_g >= 0.0) || !(learning_rate_d >= 0.0))
    throw std::invalid_argument("TrainConfig: learning rates must be >= 0");
  if (!(prob_clamp > 0.0 && prob_clamp <= 1e-3))
    throw std::invalid_argument("TrainConfig: prob_clamp must lie in (0, 1e-3]");
  if (checkpoint_every < 0) throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 0");
}

Generator Generator::zeros(const GanSpec& s) {
  return {nn::Lstm::zeros(s.d + 1, s.g_hidden), nn::Lstm::zeros(s.g_hidden, s.g_hidden),
          nn::Dense::zeros(s.g_hidden, kChannels)};
}

Generator Generator::init(const GanSpec& s, Rng& rng) {
  Generator g;
  g.lstm1 = nn::Lstm::init(s.d + 1, s.g_hidden, rng);
  g.lstm2 = nn::Lstm::init(s.g_hidden, s.g_hidden, rng);
  g.head = nn::Dense::init(s.g_hidden, kChannels, rng);
  return g;
}

Discriminator Discriminator::zeros(const GanSpec& s) {
  return {nn::Lstm::zeros(kChannels, s.d_hidden), nn::Lstm::zeros(s.d_hidden, s.d_hidden),
          nn::Dense::zeros(s.d_hidden, 1)};
}

Discriminator Discriminator::init(const GanSpec& s, Rng& rng) {
  Discriminator d;
  d.lstm1 = nn::Lstm::init(kChannels, s.d_hidden, rng);
  d.lstm2 = nn::Lstm::init(s.d_hidden, s.d_hidden, rng);
  d.head = nn::Dense::init(s.d_hidden, 1, rng);
  return d;
}

double CondScale::apply(double c) const {
  if (!(hi > lo)) return 0.0;
  return 2.0 * (c - lo) / (hi - lo) - 1.0;
}

CondScale CondScale::from_capacities(std::span<const double> caps) {
  if (caps.empty()) throw std::invalid_argument("CondScale: no capacities");
  const auto [lo, hi] = std::minmax_element(caps.begin(), caps.end());
  return {*lo, *hi};
}

GanParams GanParams::zeros(const GanSpec& spec) {
  spec.validate();
  return {spec, Generator::zeros(spec), Discriminator::zeros(spec), {}};
}

GanParams GanParams::init(const GanSpec& spec, CondScale cond, Rng& rng) {
  spec.validate();
  GanParams p{spec, {}, {}, cond};
  p.gen = Generator::init(spec, rng);
  p.disc = Discriminator::init(spec, rng);
  return p;
}

Matrix generator_forward(const GanParams& params, const Matrix& noise, double cond) {
  return generate_batch(params, {noise}, std::span<const double>(&cond, 1)).front();
}

double discriminator_forward(const GanParams& params, const Matrix& x) {
  return discriminate_batch(params, {x}).front();
}

std::vector<Matrix> generate_batch(const GanParams& params, const std::vector<Matrix>& noise,
                                   std::span<const double> conds) {
  if (noise.empty()) return {};
  const auto pass = gen_forward(params, noise, conds);
  return unstack(pass.y, params.spec.l, static_cast<Index>(noise.size()));
}

std::vector<double> discriminate_batch(const GanParams& params, const std::vector<Matrix>& profiles) {
  if (profiles.empty()) return {};
  return disc_forward(params, stack(profiles, params.spec.l)).p;
}

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

double disc_objective_from_probs(std::span<const double> real_p, std::span<const double> fake_p,
                                 double eps) {
  check_batches(real_p.size(), fake_p.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < real_p.size(); ++k)
    sum += std::log(clamp_prob(real_p[k], eps)) + std::log(1.0 - clamp_prob(fake_p[k], eps));
  return sum / static_cast<double>(real_p.size());
}

double gen_objective_from_probs(std::span<const double> fake_p, double eps) {
  check_batches(fake_p.size(), fake_p.size());
  double sum = 0.0;
  for (double p : fake_p) sum += std::log(1.0 - clamp_prob(p, eps));
  return sum / static_cast<double>(fake_p.size());
}

double disc_objective(const GanParams& params, const std::vector<Matrix>& real,
                      const std::vector<Matrix>& fake, double eps) {
  check_batches(real.size(), fake.size());
  return disc_objective_from_probs(discriminate_batch(params, real), discriminate_batch(params, fake),
                                   eps);
}

double gen_objective(const GanParams& params, const std::vector<Matrix>& noise,
                     std::span<const double> conds, double eps) {
  check_batches(noise.size(), conds.size());
  return gen_objective_from_probs(discriminate_batch(params, generate_batch(params, noise, conds)), eps);
}

DiscGradient disc_objective_grad(const GanParams& params, const std::vector<Matrix>& real,
                                 const std::vector<Matrix>& fake, double eps) {
  check_batches(real.size(), fake.size());
  const auto s = static_cast<double>(real.size());
  const auto B = static_cast<Index>(real.size());
  DiscGradient out;
  out.grad = nn::zeros_like(params.disc);

  const auto real_pass = disc_forward(params, stack(real, params.spec.l));
  const auto fake_pass = disc_forward(params, stack(fake, params.spec.l));
  out.real_p = real_pass.p;
  out.fake_p = fake_pass.p;
  out.value = disc_objective_from_probs(out.real_p, out.fake_p, eps);

  // d/dlogit log(p) = 1 - p ; d/dlogit log(1 - p) = -p ; zero where clamped.
  Matrix d_real(1, B), d_fake(1, B);
  for (Index b = 0; b < B; ++b) {
    const double pr = real_pass.p[b], pf = fake_pass.p[b];
    d_real(0, b) = unclamped(pr, eps) ? (1.0 - pr) / s : 0.0;
    d_fake(0, b) = unclamped(pf, eps) ? -pf / s : 0.0;
  }
  disc_backward(params, real_pass, d_real, out.grad);
  disc_backward(params, fake_pass, d_fake, out.grad);
  return out;
}

GenGradient gen_objective_grad(const GanParams& params, const std::vector<Matrix>& noise,
                               std::span<const double> conds, double eps, GenLoss loss) {
  check_batches(noise.size(), conds.size());
  const auto s = static_cast<double>(noise.size());
  const auto B = static_cast<Index>(noise.size());
  const Index T = params.spec.l;
  GenGradient out;
  out.grad = nn::zeros_like(params.gen);

  const auto gpass = gen_forward(params, noise, conds);
  Seq x;
  x.data = gpass.y;
  x.steps = T;
  x.batch = B;
  const auto dpass = disc_forward(params, x);
  out.fake_p = dpass.p;
  out.value = gen_objective_from_probs(out.fake_p, eps);

  Matrix dlogit(1, B);
  for (Index b = 0; b < B; ++b) {
    const double p = dpass.p[b];
    const double d = loss == GenLoss::saturating ? -p : -(1.0 - p);
    dlogit(0, b) = unclamped(p, eps) ? d / s : 0.0;
  }
  auto scratch = nn::zeros_like(params.disc);
  const Seq dy = disc_backward(params, dpass, dlogit, scratch);

  const Matrix dpre = (dy.data.array() * (1.0 - gpass.y.array().square())).matrix();
  Seq dh2;
  dh2.data = params.gen.head.backward(gpass.h2.data, dpre, out.grad.head);
  dh2.steps = T;
  dh2.batch = B;
  const Seq dh1 = params.gen.lstm2.backward(gpass.c2, dh2, out.grad.lstm2);
  params.gen.lstm1.backward(gpass.c1, dh1, out.grad.lstm1);
  return out;
}

long TrainHistory::disc_updates() const {
  return std::count_if(records.begin(), records.end(), [](const auto& r) { return r.net == 'D'; });
}

long TrainHistory::gen_updates() const {
  return std::count_if(records.begin(), records.end(), [](const auto& r) { return r.net == 'G'; });
}

std::vector<IterationRecord> epoch_average(const TrainHistory& h, long iters_per_epoch) {
  if (iters_per_epoch < 1) throw std::invalid_argument("epoch_average: iters_per_epoch must be >= 1");
  std::vector<IterationRecord> out;
  for (std::size_t start = 0; start < h.records.size(); start += iters_per_epoch) {
    const auto end = std::min(h.records.size(), start + static_cast<std::size_t>(iters_per_epoch));
    IterationRecord r;
    r.iter = static_cast<long>(out.size()) + 1;
    r.net = '-';
    for (auto k = start; k < end; ++k) {
      r.v_d += h.records[k].v_d;
      r.v_g += h.records[k].v_g;
    }
    r.v_d /= static_cast<double>(end - start);
    r.v_g /= static_cast<double>(end - start);
    out.push_back(r);
  }
  return out;
}

void write_history_csv(const TrainHistory& h, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "iter,net_updated,v_d,v_g\n";
  for (const auto& r : h.records)
    out << r.iter << ',' << r.net << ',' << csv::format(r.v_d) << ',' << csv::format(r.v_g) << '\n';
}

TrainHistory read_history_csv(const std::filesystem::path& path) {
  const std::string file = path.string();
  auto in = csv::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(file + ": empty file");
  auto cols = csv::require_columns(csv::split(line), {"iter", "net_updated", "v_d", "v_g"}, file);
  TrainHistory h;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = csv::split(line);
    const std::string where = file + ":" + std::to_string(lineno);
    IterationRecord r;
    r.iter = csv::parse_int(f.at(cols[0]), where);
    r.net = f.at(cols[1]).empty() ? '?' : f.at(cols[1])[0];
    r.v_d = csv::parse_double(f.at(cols[2]), where);
    r.v_g = csv::parse_double(f.at(cols[3]), where);
    h.records.push_back(r);
  }
  return h;
}

nlohmann::json checkpoint_to_json(const GanCheckpoint& c) {
  const auto& p = c.params;
  nlohmann::json j;
  j["format"] = "cyclegen-gan-checkpoint/1";
  j["spec"] = {{"l", p.spec.l}, {"d", p.spec.d}, {"g_hidden", p.spec.g_hidden}, {"d_hidden", p.spec.d_hidden}};
  j["cond_scale"] = {{"lo", p.cond.lo}, {"hi", p.cond.hi}};
  j["generator"] = nn::to_json(p.gen);
  j["discriminator"] = nn::to_json(p.disc);
  j["adam_g"] = nn::adam_to_json(c.adam_g, p.gen);
  j["adam_d"] = nn::adam_to_json(c.adam_d, p.disc);
  j["iteration"] = c.iteration;
  j["seed"] = c.seed;
  j["rng_state"] = c.rng_state;
  auto hist = nlohmann::json::array();
  for (const auto& r : c.history.records) hist.push_back({r.iter, std::string(1, r.net), r.v_d, r.v_g});
  j["history"] = hist;
  j["checkpoints"] = c.history.checkpoints;
  return j;
}

GanCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    GanCheckpoint c;
    const auto& s = j.at("spec");
    GanSpec spec{s.at("l").get<int>(), s.at("d").get<int>(), s.at("g_hidden").get<int>(),
                 s.at("d_hidden").get<int>()};
    c.params = GanParams::zeros(spec);
    c.params.cond = {j.at("cond_scale").at("lo").get<double>(), j.at("cond_scale").at("hi").get<double>()};
    nn::from_json(j.at("generator"), c.params.gen);
    nn::from_json(j.at("discriminator"), c.params.disc);
    c.adam_g = nn::adam_from_json(j.at("adam_g"), c.params.gen);
    c.adam_d = nn::adam_from_json(j.at("adam_d"), c.params.disc);
    c.iteration = j.at("iteration").get<long>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.rng_state = j.at("rng_state").get<std::string>();
    for (const auto& r : j.at("history"))
      c.history.records.push_back({r.at(0).get<long>(), r.at(1).get<std::string>().at(0),
                                   r.at(2).get<double>(), r.at(3).get<double>()});
    c.history.checkpoints = j.at("checkpoints").get<std::vector<long>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const GanCheckpoint& ckpt, const std::filesystem::path& path) {
  csv::open_out(path) << checkpoint_to_json(ckpt).dump() << '\n';
}

GanCheckpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::open_in(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

GanTrainer::GanTrainer(std::vector<PreprocessedCycle> cycles, const GanSpec& spec,
                       const TrainConfig& cfg)
    : cycles_(std::move(cycles)), cfg_(cfg), rng_(cfg.seed) {
  spec.validate();
  cfg_.validate();
  params_.spec = spec;
  prepare();
  std::vector<double> caps;
  for (const auto& c : cycles_) caps.push_back(c.c_smooth);
  params_ = GanParams::init(spec, CondScale::from_capacities(caps), rng_);
  adam_g_ = nn::Adam(params_.gen);
  adam_d_ = nn::Adam(params_.disc);
}

GanTrainer::GanTrainer(std::vector<PreprocessedCycle> cycles, GanCheckpoint resume,
                       const TrainConfig& cfg)
    : cycles_(std::move(cycles)),
      cfg_(cfg),
      params_(std::move(resume.params)),
      adam_g_(std::move(resume.adam_g)),
      adam_d_(std::move(resume.adam_d)),
      iteration_(resume.iteration),
      history_(std::move(resume.history)) {
  cfg_.validate();
  cfg_.seed = resume.seed;
  rng_.set_state(resume.rng_state);
  prepare();
}

void GanTrainer::prepare() {
  const auto K = cycles_.size();
  if (K < static_cast<std::size_t>(cfg_.batch_size))
    throw std::invalid_argument("train: need at least batch_size (" + std::to_string(cfg_.batch_size) +
                                ") cycles, got " + std::to_string(K));
  for (const auto& c : cycles_)
    if (c.length() != static_cast<std::size_t>(params_.spec.l))
      throw std::invalid_argument("train: cycle " + std::to_string(c.cycle_index) +
                                  " does not have length l=" + std::to_string(params_.spec.l));
  profiles_.clear();
  for (const auto& c : cycles_) profiles_.push_back(c.profile());
}

void GanTrainer::step() {
  const long i = ++iteration_;
  const auto s = static_cast<std::size_t>(cfg_.batch_size);
  const double eps = cfg_.prob_clamp;

  // Distinct cycle indices via a partial Fisher-Yates shuffle.
  std::vector<std::size_t> order(cycles_.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  for (std::size_t k = 0; k < s; ++k) std::swap(order[k], order[k + rng_.index(order.size() - k)]);
  order.resize(s);

  std::vector<double> conds;
  std::vector<Matrix> real;
  for (auto k : order) {
    conds.push_back(cycles_[k].c_smooth);
    real.push_back(profiles_[k]);
  }
  std::vector<Matrix> noise;
  for (std::size_t k = 0; k < s; ++k) noise.push_back(rng_.normal_matrix(params_.spec.l, params_.spec.d));

  IterationRecord rec;
  rec.iter = i;
  if (i % 3 == 0) {
    rec.net = 'D';
    const auto fake = generate_batch(params_, noise, conds);
    auto g = disc_objective_grad(params_, real, fake, eps);
    rec.v_d = g.value;
    rec.v_g = gen_objective_from_probs(g.fake_p, eps);
    g.grad.visit([](const std::string&, Matrix& m) { m = -m; });
    adam_d_.step(params_.disc, g.grad,
                 {cfg_.learning_rate_d, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps});
  } else {
    rec.net = 'G';
    auto g = gen_objective_grad(params_, noise, conds, eps, cfg_.gen_loss);
    rec.v_g = g.value;
    rec.v_d = disc_objective_from_probs(discriminate_batch(params_, real), g.fake_p, eps);
    adam_g_.step(params_.gen, g.grad,
                 {cfg_.learning_rate_g, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps});
  }
  if (!std::isfinite(rec.v_d) || !std::isfinite(rec.v_g))
    throw NumericalError("non-finite GAN loss at iteration " + std::to_string(i));
  history_.records.push_back(rec);
}

void GanTrainer::run_until(long total, const CheckpointCallback& cb) {
  while (iteration_ < total) {
    step();
    if (cfg_.checkpoint_every > 0 && iteration_ % cfg_.checkpoint_every == 0) {
      history_.checkpoints.push_back(iteration_);
      if (cb) cb(checkpoint());
    }
  }
}

GanCheckpoint GanTrainer::checkpoint() const {
  return {params_, adam_g_, adam_d_, iteration_, cfg_.seed, rng_.state(), history_};
}

GanTrainResult train(const std::vector<PreprocessedCycle>& cycles, const GanSpec& spec,
                     const TrainConfig& cfg, const GanTrainer::CheckpointCallback& cb) {
  GanTrainer trainer(cycles, spec, cfg);
  trainer.run_until(cfg.iterations, cb);
  return {trainer.params(), trainer.history()};
}

double mean_disc_output(const GanParams& params, const std::vector<PreprocessedCycle>& cycles) {
  if (cycles.empty()) throw std::invalid_argument("mean_disc_output: no cycles");
  std::vector<Matrix> profiles;
  for (const auto& c : cycles) profiles.push_back(c.profile());
  const auto p = discriminate_batch(params, profiles);
  double sum = 0.0;
  for (double v : p) sum += v;
  return sum / static_cast<double>(p.size());
}

namespace {

double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

template <class Net, class Objective>
double check_net(Net& net, const Net& analytic, double step, Objective&& objective) {
  auto params = nn::tensors(net);
  auto grads = nn::tensors(const_cast<Net&>(analytic));
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Index e = 0; e < params[k]->size(); ++e) {
      double& w = params[k]->data()[e];
      const double saved = w;
      w = saved + step;
      const double up = objective();
      w = saved - step;
      const double down = objective();
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, rel_error(grads[k]->data()[e], numeric));
    }
  }
  return worst;
}

}  // namespace

GradientCheckResult gradient_check(const GanParams& params, const std::vector<Matrix>& real,
                                   const std::vector<Matrix>& noise, std::span<const double> conds,
                                   double eps, double step) {
  GanParams work = params;
  const auto fake = generate_batch(work, noise, conds);
  GradientCheckResult out;

  const auto dg = disc_objective_grad(work, real, fake, eps);
  out.max_rel_error_d =
      check_net(work.disc, dg.grad, step, [&] { return disc_objective(work, real, fake, eps); });

  const auto gg = gen_objective_grad(work, noise, conds, eps);
  out.max_rel_error_g =
      check_net(work.gen, gg.grad, step, [&] { return gen_objective(work, noise, conds, eps); });
  return out;
}

GradientCheckResult gradient_check(const GanSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.l > 8 || spec.g_hidden > 4 || spec.d_hidden > 4 || spec.d > 4)
    throw std::invalid_argument("gradient_check: spec too large (l <= 8, widths <= 4)");
  Rng rng(seed);
  const auto params = GanParams::init(spec, {1.6, 2.0}, rng);
  constexpr int batch = 3;
  std::vector<Matrix> real, noise;
  std::vector<double> conds;
  for (int b = 0; b < batch; ++b) {
    Matrix x(kChannels, spec.l);
    for (Index r = 0; r < x.rows(); ++r)
      for (Index c = 0; c < x.cols(); ++c) x(r, c) = 2.0 * rng.uniform() - 1.0;
    real.push_back(x);
    noise.push_back(rng.normal_matrix(spec.l, spec.d));
    conds.push_back(1.6 + 0.4 * rng.uniform());
  }
  return gradient_check(params, real, noise, conds);
}

}  // namespace cyclegen
