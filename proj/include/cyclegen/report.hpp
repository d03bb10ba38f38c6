#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclegen/evaluate.hpp"
#include "cyclegen/rcgan.hpp"

namespace cyclegen {

/// One row of the capacity-prediction error table.
struct MetricsRow {
  std::string battery;
  std::string model;    // gru | lstm
  std::string dataset;  // original | augmented
  double rmse = 0.0;
  double mae = 0.0;
  bool operator==(const MetricsRow&) const = default;
};

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// CSV `x,y,label,cycle`.
void write_projection_csv(const Projection2D& proj, const std::filesystem::path& path);

void write_loss_svg(const TrainHistory& history, const std::filesystem::path& path);
void write_scatter_svg(const Projection2D& proj, const std::filesystem::path& path);

struct NamedProjection {
  std::string name;  // file stem, e.g. "pca" or "tsne_test"
  Projection2D projection;
};

struct EvalReport {
  std::optional<TrainHistory> history;
  std::vector<NamedProjection> projections;
  std::optional<std::vector<MetricsRow>> metrics;
  nlohmann::json manifest;
};

/// Writes loss_curves.csv, one CSV + SVG per projection, overlap.csv,
/// metrics.csv and manifest.json into `dir`.
void build_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace cyclegen
