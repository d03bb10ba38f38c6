#include "cyclegen/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cyclegen/csv.hpp"
#include "cyclegen/errors.hpp"

namespace cyclegen {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 40.0;

struct Frame {
  double xmin, xmax, ymin, ymax;
  double x(double v) const { return kMargin + (v - xmin) / span(xmax - xmin) * (kWidth - 2 * kMargin); }
  double y(double v) const { return kHeight - kMargin - (v - ymin) / span(ymax - ymin) * (kHeight - 2 * kMargin); }
  static double span(double s) { return s > 0.0 ? s : 1.0; }
};

std::string svg_open(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kMargin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title
     << "</text>\n"
     << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
     << "\" height=\"" << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"#888\"/>\n";
  return os.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "battery,model,dataset,rmse,mae\n";
  for (const auto& r : rows)
    out << r.battery << ',' << r.model << ',' << r.dataset << ',' << csv::format(r.rmse) << ','
        << csv::format(r.mae) << '\n';
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  const std::string file = path.string();
  if (!std::filesystem::exists(path)) throw DataError("missing metrics table: " + file);
  auto in = csv::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(file + ": empty file");
  auto cols = csv::require_columns(csv::split(line), {"battery", "model", "dataset", "rmse", "mae"}, file);
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = csv::split(line);
    const std::string where = file + ":" + std::to_string(lineno);
    rows.push_back({f.at(cols[0]), f.at(cols[1]), f.at(cols[2]), csv::parse_double(f.at(cols[3]), where),
                    csv::parse_double(f.at(cols[4]), where)});
  }
  return rows;
}

void write_projection_csv(const Projection2D& proj, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "x,y,label,cycle\n";
  for (std::size_t k = 0; k < proj.size(); ++k) {
    const auto r = static_cast<nn::Index>(k);
    out << csv::format(proj.points(r, 0)) << ',' << csv::format(proj.points(r, 1)) << ','
        << to_string(proj.labels[k]) << ',' << proj.cycles[k] << '\n';
  }
}

void write_loss_svg(const TrainHistory& history, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << svg_open("Loss curves: v_d (blue), v_g (red)");
  if (!history.records.empty()) {
    Frame f{static_cast<double>(history.records.front().iter), static_cast<double>(history.records.back().iter),
            0.0, 0.0};
    f.ymin = f.ymax = history.records.front().v_d;
    for (const auto& r : history.records) {
      f.ymin = std::min({f.ymin, r.v_d, r.v_g});
      f.ymax = std::max({f.ymax, r.v_d, r.v_g});
    }
    for (int which = 0; which < 2; ++which) {
      out << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << (which == 0 ? "#1f4fd0" : "#d0301f")
          << "\" points=\"";
      for (const auto& r : history.records)
        out << fmt(f.x(static_cast<double>(r.iter))) << ',' << fmt(f.y(which == 0 ? r.v_d : r.v_g)) << ' ';
      out << "\"/>\n";
    }
  }
  out << "</svg>\n";
}

void write_scatter_svg(const Projection2D& proj, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << svg_open(to_string(proj.method) + ": real (blue), synthetic (red)");
  if (proj.size() > 0) {
    Frame f{proj.points.col(0).minCoeff(), proj.points.col(0).maxCoeff(), proj.points.col(1).minCoeff(),
            proj.points.col(1).maxCoeff()};
    for (std::size_t k = 0; k < proj.size(); ++k) {
      const auto r = static_cast<nn::Index>(k);
      out << "<circle r=\"3\" fill-opacity=\"0.7\" fill=\""
          << (proj.labels[k] == Source::real ? "#1f4fd0" : "#d0301f") << "\" cx=\"" << fmt(f.x(proj.points(r, 0)))
          << "\" cy=\"" << fmt(f.y(proj.points(r, 1))) << "\"/>\n";
    }
  }
  out << "</svg>\n";
}

void build_report(const EvalReport& report, const std::filesystem::path& dir) {
  if (!report.history) throw DataError("report: missing loss history (loss_curves.csv)");
  if (!report.metrics) throw DataError("report: missing metrics table (metrics.csv)");
  std::filesystem::create_directories(dir);

  write_history_csv(*report.history, dir / "loss_curves.csv");
  write_loss_svg(*report.history, dir / "loss_curves.svg");

  auto overlap = csv::open_out(dir / "overlap.csv");
  overlap << "projection,score\n";
  for (const auto& p : report.projections) {
    write_projection_csv(p.projection, dir / (p.name + ".csv"));
    write_scatter_svg(p.projection, dir / (p.name + ".svg"));
    overlap << p.name << ',' << csv::format(overlap_score(p.projection)) << '\n';
  }
  write_metrics_csv(*report.metrics, dir / "metrics.csv");
  csv::open_out(dir / "manifest.json") << report.manifest.dump(2) << '\n';
}

}  // namespace cyclegen
