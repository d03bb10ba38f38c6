#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cyclegen {

/// One charging cycle: timestamped voltage/current/temperature plus the
/// capacity measured for that cycle.
struct RawCycle {
  int cycle_index = 0;
  std::vector<double> time_s;
  std::vector<double> voltage_v;
  std::vector<double> current_a;
  std::vector<double> temperature_c;
  double capacity_ah = 0.0;

  std::size_t size() const { return time_s.size(); }
  bool operator==(const RawCycle&) const = default;
};

enum class Provenance { real, surrogate, augmented };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct CycleDataset {
  std::string battery_id;
  std::vector<RawCycle> cycles;
  Provenance provenance = Provenance::real;

  std::size_t size() const { return cycles.size(); }
  std::vector<double> capacities() const;
  bool operator==(const CycleDataset&) const = default;
};

/// Synthetic battery used in place of the real cycling datasets.
struct SurrogateConfig {
  int n_cycles = 60;
  int samples_per_cycle = 200;
  double c0 = 2.0;
  double fade_rate = 0.005;
  double regen_prob = 0.1;
  double regen_gain = 0.03;
  double noise_std = 0.005;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Throws ValidationError when a cycle breaks a RawCycle invariant.
void validate_cycle(const RawCycle& cycle);

/// Throws ValidationError on any invalid cycle or non-contiguous indices.
void validate_dataset(const CycleDataset& ds);

/// Reads the two canonical CSV files (samples + per-cycle capacity).
CycleDataset load_canonical(const std::filesystem::path& cycles_path,
                            const std::filesystem::path& capacity_path);

/// Writes the two canonical CSV files with shortest round-trip formatting.
void write_canonical(const CycleDataset& ds,
                     const std::filesystem::path& cycles_path,
                     const std::filesystem::path& capacity_path);

/// train = first K cycles, test = the rest. Requires 1 <= K < size.
std::pair<CycleDataset, CycleDataset> split_train_test(const CycleDataset& ds,
                                                       int K);

/// Fade factor of cycle k: 1 - fade_rate * k.
double surrogate_fade(const SurrogateConfig& cfg, int k);

CycleDataset synth_surrogate(const SurrogateConfig& cfg);

}  // namespace cyclegen
