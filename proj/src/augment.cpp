#include "cyclegen/augment.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "cyclegen/csv.hpp"
#include "cyclegen/errors.hpp"

namespace cyclegen {

namespace {

constexpr std::size_t kGenerateChunk = 64;

Matrix rows_to_profile(const std::vector<double>& v, const std::vector<double>& i,
                       const std::vector<double>& t) {
  const auto l = static_cast<nn::Index>(v.size());
  Matrix p(kChannels, l);
  for (nn::Index k = 0; k < l; ++k) {
    p(0, k) = v[k];
    p(1, k) = i[k];
    p(2, k) = t[k];
  }
  return p;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(csv::open_in(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Source source_from_string(const std::string& s, const std::string& where) {
  if (s == "real") return Source::real;
  if (s == "synthetic") return Source::synthetic;
  throw ValidationError(where + ": unknown source '" + s + "'");
}

}  // namespace

Matrix SyntheticCycle::profile() const { return rows_to_profile(v_norm, i_norm, t_norm); }

std::string to_string(Source s) { return s == Source::real ? "real" : "synthetic"; }

std::vector<double> midpoint_capacities(std::span<const double> c) {
  if (c.size() < 2) throw std::invalid_argument("midpoint_capacities: need at least 2 capacities");
  std::vector<double> out(c.size() - 1);
  for (std::size_t k = 0; k + 1 < c.size(); ++k) out[k] = (c[k] + c[k + 1]) / 2.0;
  return out;
}

std::vector<SyntheticCycle> generate_cycles(const GanParams& params, std::span<const double> caps,
                                            std::uint64_t seed, const std::string& checkpoint_id) {
  Rng rng(seed);
  const double span = params.cond.hi - params.cond.lo;
  const double lo = params.cond.lo - 0.1 * span;
  const double hi = params.cond.hi + 0.1 * span;

  std::vector<SyntheticCycle> out;
  out.reserve(caps.size());
  for (std::size_t start = 0; start < caps.size(); start += kGenerateChunk) {
    const auto end = std::min(caps.size(), start + kGenerateChunk);
    std::vector<Matrix> noise;
    for (auto k = start; k < end; ++k) noise.push_back(rng.normal_matrix(params.spec.l, params.spec.d));
    const auto profiles = generate_batch(params, noise, caps.subspan(start, end - start));
    for (auto k = start; k < end; ++k) {
      const auto& p = profiles[k - start];
      SyntheticCycle s;
      s.cond_capacity = caps[k];
      s.v_norm.assign(p.row(0).begin(), p.row(0).end());
      s.i_norm.assign(p.row(1).begin(), p.row(1).end());
      s.t_norm.assign(p.row(2).begin(), p.row(2).end());
      s.provenance = {checkpoint_id, seed, k, caps[k] < lo || caps[k] > hi};
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<TrainingCycle> to_training_set(const std::vector<PreprocessedCycle>& real) {
  std::vector<TrainingCycle> out;
  out.reserve(real.size());
  for (const auto& c : real) out.push_back({c.cycle_index, Source::real, c.profile(), c.c_raw, c.c_smooth});
  return out;
}

std::vector<TrainingCycle> merge(const std::vector<PreprocessedCycle>& real,
                                 const std::vector<SyntheticCycle>& synth) {
  auto out = to_training_set(real);
  if (synth.empty()) return out;
  for (const auto& s : synth)
    out.push_back({static_cast<int>(s.provenance.position) + 1, Source::synthetic, s.profile(),
                   s.cond_capacity, s.cond_capacity});
  std::stable_sort(out.begin(), out.end(),
                   [](const TrainingCycle& a, const TrainingCycle& b) { return a.capacity > b.capacity; });
  return out;
}

RawCycle denormalize_synthetic(const SyntheticCycle& synth, const PreprocessedCycle& before,
                               const PreprocessedCycle& after) {
  const double span = after.c_smooth - before.c_smooth;
  const double w = span == 0.0 ? 0.5 : (synth.cond_capacity - before.c_smooth) / span;
  auto channel = [&](const std::vector<double>& norm, int ch) {
    ChannelScale s;
    s.min = before.scale[ch].min + w * (after.scale[ch].min - before.scale[ch].min);
    s.max = before.scale[ch].max + w * (after.scale[ch].max - before.scale[ch].max);
    s.degenerate = !(s.max > s.min);
    return destandardize(norm, s);
  };
  RawCycle out;
  out.cycle_index = static_cast<int>(synth.provenance.position) + 1;
  out.capacity_ah = synth.cond_capacity;
  const auto l = synth.v_norm.size();
  out.time_s.resize(l);
  for (std::size_t k = 0; k < l; ++k) out.time_s[k] = static_cast<double>(k) / static_cast<double>(l - 1);
  out.voltage_v = channel(synth.v_norm, 0);
  out.current_a = channel(synth.i_norm, 1);
  out.temperature_c = channel(synth.t_norm, 2);
  return out;
}

void write_training_set(const std::vector<TrainingCycle>& set, const std::filesystem::path& csv_path,
                        const std::filesystem::path& sidecar_path) {
  auto out = csv::open_out(csv_path);
  out << "cycle,t_index,v_norm,i_norm,t_norm,source\n";
  auto side = nlohmann::json::array();
  for (const auto& c : set) {
    const auto src = to_string(c.source);
    for (nn::Index t = 0; t < c.profile.cols(); ++t)
      out << c.cycle_index << ',' << t << ',' << csv::format(c.profile(0, t)) << ','
          << csv::format(c.profile(1, t)) << ',' << csv::format(c.profile(2, t)) << ',' << src << '\n';
    side.push_back({{"cycle", c.cycle_index}, {"source", src}, {"target", c.target}, {"capacity", c.capacity}});
  }
  csv::open_out(sidecar_path) << side.dump(1) << '\n';
}

std::vector<TrainingCycle> read_training_set(const std::filesystem::path& csv_path,
                                             const std::filesystem::path& sidecar_path) {
  const auto side = read_json(sidecar_path);
  std::vector<TrainingCycle> set;
  std::map<std::pair<int, Source>, std::size_t> index;
  std::vector<std::vector<double>> v, i, t;
  for (const auto& e : side) {
    TrainingCycle c;
    c.cycle_index = e.at("cycle").get<int>();
    c.source = source_from_string(e.at("source").get<std::string>(), sidecar_path.string());
    c.target = e.at("target").get<double>();
    c.capacity = e.at("capacity").get<double>();
    index[{c.cycle_index, c.source}] = set.size();
    set.push_back(std::move(c));
  }
  v.resize(set.size());
  i.resize(set.size());
  t.resize(set.size());

  const std::string file = csv_path.string();
  auto in = csv::open_in(csv_path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(file + ": empty file");
  auto cols = csv::require_columns(csv::split(line),
                                   {"cycle", "t_index", "v_norm", "i_norm", "t_norm", "source"}, file);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = csv::split(line);
    const std::string where = file + ":" + std::to_string(lineno);
    const int k = static_cast<int>(csv::parse_int(f.at(cols[0]), where));
    auto it = index.find({k, source_from_string(f.at(cols[5]), where)});
    if (it == index.end()) throw JoinError(where + ": cycle " + std::to_string(k) + " missing from sidecar");
    v[it->second].push_back(csv::parse_double(f.at(cols[2]), where));
    i[it->second].push_back(csv::parse_double(f.at(cols[3]), where));
    t[it->second].push_back(csv::parse_double(f.at(cols[4]), where));
  }
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (v[k].size() < 2) throw ValidationError(file + ": cycle " + std::to_string(set[k].cycle_index) + " has no samples");
    set[k].profile = rows_to_profile(v[k], i[k], t[k]);
  }
  return set;
}

void write_synthetic(const std::vector<SyntheticCycle>& cycles, const std::filesystem::path& csv_path,
                     const std::filesystem::path& sidecar_path) {
  auto out = csv::open_out(csv_path);
  out << "cycle,t_index,v_norm,i_norm,t_norm\n";
  auto side = nlohmann::json::array();
  for (const auto& s : cycles) {
    const auto id = s.provenance.position + 1;
    for (std::size_t t = 0; t < s.v_norm.size(); ++t)
      out << id << ',' << t << ',' << csv::format(s.v_norm[t]) << ',' << csv::format(s.i_norm[t]) << ','
          << csv::format(s.t_norm[t]) << '\n';
    side.push_back({{"cycle", id},
                    {"cond_capacity", s.cond_capacity},
                    {"checkpoint_id", s.provenance.checkpoint_id},
                    {"seed", s.provenance.seed},
                    {"position", s.provenance.position},
                    {"extrapolated", s.provenance.extrapolated}});
  }
  csv::open_out(sidecar_path) << side.dump(1) << '\n';
}

std::vector<SyntheticCycle> read_synthetic(const std::filesystem::path& csv_path,
                                           const std::filesystem::path& sidecar_path) {
  const auto side = read_json(sidecar_path);
  std::vector<SyntheticCycle> out;
  std::map<long long, std::size_t> index;
  for (const auto& e : side) {
    SyntheticCycle s;
    s.cond_capacity = e.at("cond_capacity").get<double>();
    s.provenance = {e.at("checkpoint_id").get<std::string>(), e.at("seed").get<std::uint64_t>(),
                    e.at("position").get<std::size_t>(), e.at("extrapolated").get<bool>()};
    index[e.at("cycle").get<long long>()] = out.size();
    out.push_back(std::move(s));
  }
  const std::string file = csv_path.string();
  auto in = csv::open_in(csv_path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(file + ": empty file");
  auto cols = csv::require_columns(csv::split(line), {"cycle", "t_index", "v_norm", "i_norm", "t_norm"}, file);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = csv::split(line);
    const std::string where = file + ":" + std::to_string(lineno);
    auto it = index.find(csv::parse_int(f.at(cols[0]), where));
    if (it == index.end()) throw JoinError(where + ": cycle missing from sidecar");
    auto& s = out[it->second];
    s.v_norm.push_back(csv::parse_double(f.at(cols[2]), where));
    s.i_norm.push_back(csv::parse_double(f.at(cols[3]), where));
    s.t_norm.push_back(csv::parse_double(f.at(cols[4]), where));
  }
  return out;
}

}  // namespace cyclegen
