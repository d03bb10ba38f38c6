#include "cyclegen/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "cyclegen/csv.hpp"
#include "cyclegen/errors.hpp"
#include "cyclegen/rng.hpp"

namespace cyclegen {

namespace {

constexpr double kVmin = 3.0;
constexpr double kVmax = 4.2;
constexpr double kI0 = 1.5;
constexpr double kT0 = 25.0;
constexpr double kCycleSeconds = 3600.0;

struct SampleRow {
  double t, v, i, temp;
};

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::real: return "real";
    case Provenance::surrogate: return "surrogate";
    case Provenance::augmented: return "augmented";
  }
  return "real";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "real") return Provenance::real;
  if (s == "surrogate") return Provenance::surrogate;
  if (s == "augmented") return Provenance::augmented;
  throw std::invalid_argument("unknown provenance '" + s + "'");
}

std::vector<double> CycleDataset::capacities() const {
  std::vector<double> caps;
  caps.reserve(cycles.size());
  for (const auto& c : cycles) caps.push_back(c.capacity_ah);
  return caps;
}

void validate_cycle(const RawCycle& c) {
  const std::string where = "cycle " + std::to_string(c.cycle_index);
  const auto n = c.time_s.size();
  if (c.voltage_v.size() != n || c.current_a.size() != n || c.temperature_c.size() != n)
    throw ValidationError(where + ": channel lengths differ");
  if (n < 2) throw ValidationError(where + ": fewer than 2 samples");
  if (!(c.capacity_ah > 0.0) || !std::isfinite(c.capacity_ah))
    throw ValidationError(where + ": capacity must be positive and finite");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(c.time_s[k]) || !std::isfinite(c.voltage_v[k]) ||
        !std::isfinite(c.current_a[k]) || !std::isfinite(c.temperature_c[k]))
      throw ValidationError(where + ": non-finite sample at row " + std::to_string(k));
    if (k > 0 && !(c.time_s[k] > c.time_s[k - 1]))
      throw ValidationError(where + ": time not strictly increasing at t=" +
                            csv::format(c.time_s[k]));
  }
}

void validate_dataset(const CycleDataset& ds) {
  for (std::size_t k = 0; k < ds.cycles.size(); ++k) {
    validate_cycle(ds.cycles[k]);
    if (k > 0 && ds.cycles[k].cycle_index != ds.cycles[k - 1].cycle_index + 1)
      throw ValidationError("cycle indices not contiguous between " +
                            std::to_string(ds.cycles[k - 1].cycle_index) + " and " +
                            std::to_string(ds.cycles[k].cycle_index));
  }
}

CycleDataset load_canonical(const std::filesystem::path& cycles_path,
                            const std::filesystem::path& capacity_path) {
  const std::string cfile = cycles_path.string();
  const std::string qfile = capacity_path.string();

  std::string battery_id;
  bool have_id = false;
  auto check_id = [&](const std::string& id, const std::string& where) {
    if (!have_id) {
      battery_id = id;
      have_id = true;
    } else if (id != battery_id) {
      throw ValidationError(where + ": mixed battery_id '" + id + "' and '" + battery_id + "'");
    }
  };

  std::map<long long, std::vector<SampleRow>> rows;
  {
    auto in = csv::open_in(cycles_path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(cfile + ": empty file");
    auto cols = csv::require_columns(
        csv::split(line),
        {"battery_id", "cycle", "time_s", "voltage_v", "current_a", "temperature_c"}, cfile);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      auto f = csv::split(line);
      const std::string where = cfile + ":" + std::to_string(lineno);
      if (f.size() <= *std::max_element(cols.begin(), cols.end()))
        throw ValidationError(where + ": too few fields");
      check_id(f[cols[0]], where);
      const long long k = csv::parse_int(f[cols[1]], where);
      if (k < 1) throw ValidationError(where + ": cycle index must be positive");
      rows[k].push_back({csv::parse_double(f[cols[2]], where), csv::parse_double(f[cols[3]], where),
                         csv::parse_double(f[cols[4]], where), csv::parse_double(f[cols[5]], where)});
    }
  }

  std::map<long long, double> caps;
  {
    auto in = csv::open_in(capacity_path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(qfile + ": empty file");
    auto cols = csv::require_columns(csv::split(line), {"battery_id", "cycle", "capacity_ah"}, qfile);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      auto f = csv::split(line);
      const std::string where = qfile + ":" + std::to_string(lineno);
      if (f.size() <= *std::max_element(cols.begin(), cols.end()))
        throw ValidationError(where + ": too few fields");
      check_id(f[cols[0]], where);
      const long long k = csv::parse_int(f[cols[1]], where);
      if (!caps.emplace(k, csv::parse_double(f[cols[2]], where)).second)
        throw ValidationError(where + ": duplicate capacity row for cycle " + std::to_string(k));
    }
  }

  for (const auto& [k, _] : rows)
    if (!caps.count(k))
      throw JoinError("cycle " + std::to_string(k) + " has samples in " + cfile +
                      " but no row in " + qfile);
  for (const auto& [k, _] : caps)
    if (!rows.count(k))
      throw JoinError("cycle " + std::to_string(k) + " has a capacity in " + qfile +
                      " but no samples in " + cfile);

  CycleDataset ds;
  ds.battery_id = battery_id;
  ds.provenance = Provenance::real;
  for (auto& [k, samples] : rows) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const SampleRow& a, const SampleRow& b) { return a.t < b.t; });
    RawCycle c;
    c.cycle_index = static_cast<int>(k);
    c.capacity_ah = caps.at(k);
    for (const auto& s : samples) {
      c.time_s.push_back(s.t);
      c.voltage_v.push_back(s.v);
      c.current_a.push_back(s.i);
      c.temperature_c.push_back(s.temp);
    }
    ds.cycles.push_back(std::move(c));
  }
  validate_dataset(ds);
  return ds;
}

void write_canonical(const CycleDataset& ds, const std::filesystem::path& cycles_path,
                     const std::filesystem::path& capacity_path) {
  {
    auto out = csv::open_out(cycles_path);
    out << "battery_id,cycle,time_s,voltage_v,current_a,temperature_c\n";
    for (const auto& c : ds.cycles)
      for (std::size_t k = 0; k < c.size(); ++k)
        out << ds.battery_id << ',' << c.cycle_index << ',' << csv::format(c.time_s[k]) << ','
            << csv::format(c.voltage_v[k]) << ',' << csv::format(c.current_a[k]) << ','
            << csv::format(c.temperature_c[k]) << '\n';
  }
  auto out = csv::open_out(capacity_path);
  out << "battery_id,cycle,capacity_ah\n";
  for (const auto& c : ds.cycles)
    out << ds.battery_id << ',' << c.cycle_index << ',' << csv::format(c.capacity_ah) << '\n';
}

std::pair<CycleDataset, CycleDataset> split_train_test(const CycleDataset& ds, int K) {
  if (K < 1 || static_cast<std::size_t>(K) >= ds.size())
    throw std::invalid_argument("split_train_test: K=" + std::to_string(K) +
                                " must lie in [1, " + std::to_string(ds.size()) + ")");
  CycleDataset train{ds.battery_id, {}, ds.provenance};
  CycleDataset test{ds.battery_id, {}, ds.provenance};
  train.cycles.assign(ds.cycles.begin(), ds.cycles.begin() + K);
  test.cycles.assign(ds.cycles.begin() + K, ds.cycles.end());
  return {std::move(train), std::move(test)};
}

void SurrogateConfig::validate() const {
  if (n_cycles < 1) throw ConfigError("surrogate: n_cycles must be >= 1");
  if (samples_per_cycle < 2) throw ConfigError("surrogate: samples_per_cycle must be >= 2");
  if (!(c0 > 0.0)) throw ConfigError("surrogate: c0 must be positive");
  if (!(fade_rate >= 0.0 && fade_rate <= 0.02))
    throw ConfigError("surrogate: fade_rate must lie in [0, 0.02]");
  if (!(1.0 - fade_rate * n_cycles > 0.0))
    throw ConfigError("surrogate: fade_rate * n_cycles must stay below 1");
  if (!(regen_prob >= 0.0 && regen_prob <= 1.0))
    throw ConfigError("surrogate: regen_prob must lie in [0, 1]");
  if (!(regen_gain >= 0.0)) throw ConfigError("surrogate: regen_gain must be >= 0");
  if (!(noise_std >= 0.0)) throw ConfigError("surrogate: noise_std must be >= 0");
}

double surrogate_fade(const SurrogateConfig& cfg, int k) { return 1.0 - cfg.fade_rate * k; }

CycleDataset synth_surrogate(const SurrogateConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  CycleDataset ds;
  ds.battery_id = "surrogate";
  ds.provenance = Provenance::surrogate;
  const int n = cfg.samples_per_cycle;
  for (int k = 1; k <= cfg.n_cycles; ++k) {
    const double f = surrogate_fade(cfg, k);
    const bool spike = rng.bernoulli(cfg.regen_prob);
    RawCycle c;
    c.cycle_index = k;
    c.capacity_ah = cfg.c0 * f * (spike ? 1.0 + cfg.regen_gain : 1.0);
    const double u_cc = 0.6 * f;
    for (int j = 0; j < n; ++j) {
      const double u = static_cast<double>(j) / (n - 1);
      c.time_s.push_back(kCycleSeconds * u);
      c.voltage_v.push_back(kVmin + (kVmax - kVmin) * std::min(1.0, u / u_cc));
      c.current_a.push_back(u <= u_cc ? kI0 : kI0 * std::exp(-(u - u_cc) / 0.12));
      c.temperature_c.push_back(kT0 + 6.0 * std::sin(std::numbers::pi * u) * (1.0 + 0.5 * (1.0 - f)));
    }
    if (cfg.noise_std > 0.0) {
      for (auto* series : {&c.voltage_v, &c.current_a, &c.temperature_c})
        for (auto& x : *series) x += cfg.noise_std * rng.normal();
    }
    ds.cycles.push_back(std::move(c));
  }
  return ds;
}

}  // namespace cyclegen
