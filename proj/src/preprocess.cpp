#include "cyclegen/preprocess.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cyclegen/csv.hpp"
#include "cyclegen/errors.hpp"

namespace cyclegen {

namespace {

std::vector<double> interpolate(const std::vector<double>& t, const std::vector<double>& y,
                                const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t seg = 0;
  for (double g : grid) {
    while (seg + 2 < t.size() && t[seg + 1] < g) ++seg;
    const double t0 = t[seg], t1 = t[seg + 1];
    if (g == t0) {
      out.push_back(y[seg]);
    } else if (g == t1) {
      out.push_back(y[seg + 1]);
    } else {
      const double w = (g - t0) / (t1 - t0);
      out.push_back(y[seg] + w * (y[seg + 1] - y[seg]));
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd PreprocessedCycle::profile() const {
  const auto l = static_cast<Eigen::Index>(length());
  Eigen::MatrixXd p(kChannels, l);
  for (Eigen::Index t = 0; t < l; ++t) {
    p(0, t) = v_norm[t];
    p(1, t) = i_norm[t];
    p(2, t) = t_norm[t];
  }
  return p;
}

RawCycle downsample_cycle(const RawCycle& cycle, int l) {
  if (l < 2) throw std::invalid_argument("downsample_cycle: l must be >= 2");
  if (cycle.size() < 2) throw std::invalid_argument("downsample_cycle: cycle has fewer than 2 samples");
  const double t0 = cycle.time_s.front();
  const double t1 = cycle.time_s.back();
  std::vector<double> grid(l);
  for (int k = 0; k < l; ++k) grid[k] = t0 + (t1 - t0) * static_cast<double>(k) / (l - 1);
  grid.back() = t1;

  RawCycle out;
  out.cycle_index = cycle.cycle_index;
  out.capacity_ah = cycle.capacity_ah;
  out.time_s = grid;
  out.voltage_v = interpolate(cycle.time_s, cycle.voltage_v, grid);
  out.current_a = interpolate(cycle.time_s, cycle.current_a, grid);
  out.temperature_c = interpolate(cycle.time_s, cycle.temperature_c, grid);
  return out;
}

Standardized minmax_standardize(std::span<const double> seq) {
  if (seq.empty()) throw std::invalid_argument("minmax_standardize: empty sequence");
  const auto [lo, hi] = std::minmax_element(seq.begin(), seq.end());
  Standardized out;
  out.scale = {*lo, *hi, !(*hi > *lo)};
  out.values.resize(seq.size(), 0.0);
  if (out.scale.degenerate) return out;
  const double range = *hi - *lo;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    out.values[k] = 2.0 * (seq[k] - *lo) / range - 1.0;
  }
  // Pin the extremes exactly.
  out.values[lo - seq.begin()] = -1.0;
  out.values[hi - seq.begin()] = 1.0;
  return out;
}

std::vector<double> destandardize(std::span<const double> norm, const ChannelScale& scale) {
  std::vector<double> out(norm.size());
  for (std::size_t k = 0; k < norm.size(); ++k)
    out[k] = scale.degenerate ? scale.min : scale.min + (norm[k] + 1.0) * 0.5 * (scale.max - scale.min);
  return out;
}

std::vector<double> smooth_capacity(std::span<const double> caps, int m) {
  const auto K = static_cast<long>(caps.size());
  if (m < 0) throw std::invalid_argument("smooth_capacity: m must be >= 0");
  if (2L * m + 1 > K)
    throw std::invalid_argument("smooth_capacity: window " + std::to_string(2 * m + 1) +
                                " exceeds series length " + std::to_string(K));
  std::vector<double> out(caps.begin(), caps.end());
  for (long k = m; k < K - m; ++k) {
    double sum = 0.0;
    for (long j = k - m; j <= k + m; ++j) sum += caps[j];
    out[k] = sum / (2 * m + 1);
  }
  return out;
}

bool is_nonincreasing(std::span<const double> series) {
  for (std::size_t k = 1; k < series.size(); ++k)
    if (series[k] > series[k - 1]) return false;
  return true;
}

std::vector<PreprocessedCycle> preprocess_dataset(const CycleDataset& ds, int l, int m) {
  validate_dataset(ds);
  const auto caps = ds.capacities();
  const auto smooth = smooth_capacity(caps, m);
  std::vector<PreprocessedCycle> out;
  out.reserve(ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const auto d = downsample_cycle(ds.cycles[k], l);
    auto v = minmax_standardize(d.voltage_v);
    auto i = minmax_standardize(d.current_a);
    auto t = minmax_standardize(d.temperature_c);
    PreprocessedCycle p;
    p.cycle_index = d.cycle_index;
    p.v_norm = std::move(v.values);
    p.i_norm = std::move(i.values);
    p.t_norm = std::move(t.values);
    p.scale = {v.scale, i.scale, t.scale};
    p.c_raw = caps[k];
    p.c_smooth = smooth[k];
    out.push_back(std::move(p));
  }
  return out;
}

void write_preprocessed(const std::vector<PreprocessedCycle>& cycles,
                        const std::filesystem::path& csv_path,
                        const std::filesystem::path& sidecar_path) {
  auto out = csv::open_out(csv_path);
  out << "cycle,t_index,v_norm,i_norm,t_norm\n";
  nlohmann::json side = nlohmann::json::array();
  for (const auto& c : cycles) {
    for (std::size_t t = 0; t < c.length(); ++t)
      out << c.cycle_index << ',' << t << ',' << csv::format(c.v_norm[t]) << ','
          << csv::format(c.i_norm[t]) << ',' << csv::format(c.t_norm[t]) << '\n';
    nlohmann::json scales = nlohmann::json::array();
    for (const auto& s : c.scale)
      scales.push_back({{"min", s.min}, {"max", s.max}, {"degenerate", s.degenerate}});
    side.push_back({{"cycle", c.cycle_index}, {"scale", scales}, {"c_raw", c.c_raw},
                    {"c_smooth", c.c_smooth}});
  }
  csv::open_out(sidecar_path) << side.dump(1) << '\n';
}

std::vector<PreprocessedCycle> read_preprocessed(const std::filesystem::path& csv_path,
                                                 const std::filesystem::path& sidecar_path) {
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(csv::open_in(sidecar_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(sidecar_path.string() + ": " + e.what());
  }
  std::vector<PreprocessedCycle> cycles;
  std::map<int, std::size_t> by_index;
  for (const auto& entry : side) {
    PreprocessedCycle c;
    c.cycle_index = entry.at("cycle").get<int>();
    for (int ch = 0; ch < kChannels; ++ch) {
      const auto& s = entry.at("scale").at(ch);
      c.scale[ch] = {s.at("min").get<double>(), s.at("max").get<double>(),
                     s.at("degenerate").get<bool>()};
    }
    c.c_raw = entry.at("c_raw").get<double>();
    c.c_smooth = entry.at("c_smooth").get<double>();
    by_index[c.cycle_index] = cycles.size();
    cycles.push_back(std::move(c));
  }

  const std::string file = csv_path.string();
  auto in = csv::open_in(csv_path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(file + ": empty file");
  auto cols = csv::require_columns(csv::split(line),
                                   {"cycle", "t_index", "v_norm", "i_norm", "t_norm"}, file);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = csv::split(line);
    const std::string where = file + ":" + std::to_string(lineno);
    const int k = static_cast<int>(csv::parse_int(f.at(cols[0]), where));
    auto it = by_index.find(k);
    if (it == by_index.end()) throw JoinError(where + ": cycle " + std::to_string(k) + " missing from sidecar");
    auto& c = cycles[it->second];
    if (static_cast<std::size_t>(csv::parse_int(f.at(cols[1]), where)) != c.v_norm.size())
      throw ValidationError(where + ": t_index out of order");
    c.v_norm.push_back(csv::parse_double(f.at(cols[2]), where));
    c.i_norm.push_back(csv::parse_double(f.at(cols[3]), where));
    c.t_norm.push_back(csv::parse_double(f.at(cols[4]), where));
  }
  for (const auto& c : cycles)
    if (c.length() < 2 || c.length() != cycles.front().length())
      throw ValidationError(file + ": cycle " + std::to_string(c.cycle_index) + " has inconsistent length");
  return cycles;
}

}  // namespace cyclegen
