#include "sic/evalserve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sic/io.hpp"

namespace sic {

void SearchQuery::validate() const {
  if (start > end) throw InvalidArgument("search range start is after its end");
  if (max_results == 0) throw InvalidArgument("max_results must be at least 1");
}

std::vector<CatalogEntry> search_catalog(const std::vector<CatalogEntry>& catalog, const SearchQuery& q) {
  q.validate();
  const Hemisphere h = q.location.lat < 0.0 ? Hemisphere::South : Hemisphere::North;
  const PlanePoint p = stereo_forward(q.location, h);
  std::vector<CatalogEntry> hits;
  for (const auto& e : catalog) {
    const Date d = utc_date(e.timestamp);
    if (d < q.start || d > q.end) continue;
    std::array<PlanePoint, 4> quad;
    try {
      quad = project_corners(e.footprint, h);
    } catch (const GeometryError&) {
      continue;  // footprint touches the opposite pole
    }
    if (quad_contains(quad, p)) hits.push_back(e);
  }
  std::stable_sort(hits.begin(), hits.end(), [](const CatalogEntry& a, const CatalogEntry& b) {
    if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
    return a.id < b.id;
  });
  if (hits.size() > q.max_results) hits.resize(q.max_results);
  return hits;
}

namespace {

Plane<double> plane_of(const Tensor4d& t, Index ch) {
  Plane<double> p(t.h(), t.w());
  for (Index i = 0; i < t.h(); ++i) {
    for (Index j = 0; j < t.w(); ++j) p(i, j) = t(0, i, j, ch);
  }
  return p;
}

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of("/\\,\n") != std::string::npos) {
    throw InvalidArgument("model name '" + name + "' is not usable in a file name");
  }
}

}  // namespace

ComparisonReport comparison_report(const CatalogEntry& entry, const Raster<float>& stored_image,
                                   const std::vector<NamedModel>& models, const ConcentrationChart& chart,
                                   const std::filesystem::path& out_dir, Index out_h, Index out_w) {
  for (const auto& m : models) {
    check_name(m.name);
    if (m.model == nullptr) throw InvalidArgument("model '" + m.name + "' is null");
  }
  const Sample sample = build_sample(entry, stored_image, chart, out_h, out_w);
  ComparisonReport report;
  report.dir = out_dir / entry.id;
  std::filesystem::create_directories(report.dir);

  const std::vector<const Sample*> one{&sample};
  const Tensor4d x = stack_images(one);
  const Tensor4d y = stack_labels(one);
  io::write_pgm16((report.dir / "image_ch0.pgm").string(), plane_of(x, 0));
  io::write_pgm16((report.dir / "image_ch1.pgm").string(), plane_of(x, 1));
  io::write_pgm16((report.dir / "label_conc.pgm").string(), plane_of(y, 0));
  io::write_pgm16((report.dir / "label_unc.pgm").string(), plane_of(y, 1));

  for (const auto& m : models) {
    const Tensor4d pred = m.model->predict(x);
    io::write_pgm16((report.dir / ("pred_" + m.name + ".pgm")).string(), plane_of(pred, 0));
    report.rows.push_back({m.name, metrics(pred, y)});
  }

  std::ofstream out(report.dir / "metrics.csv", std::ios::binary);
  if (!out) throw IoError("cannot write " + (report.dir / "metrics.csv").string());
  out << "# entry " << entry.id << "\n# footprint";
  for (const auto& c : entry.footprint.corners) out << ' ' << io::format_double(c.lat) << ' ' << io::format_double(c.lon);
  out << "\nmodel,weighted_mae,mae,weighted_mse,mse\n";
  for (const auto& r : report.rows) {
    out << r.name << ',' << io::format_double(r.metrics.weighted_mae) << ',' << io::format_double(r.metrics.mae) << ','
        << io::format_double(r.metrics.weighted_mse) << ',' << io::format_double(r.metrics.mse) << '\n';
  }
  if (!out) throw IoError("failed writing " + (report.dir / "metrics.csv").string());
  return report;
}

BiasSummary summarize(const std::vector<BiasRecord>& records) {
  BiasSummary s;
  s.count = records.size();
  if (records.empty()) return s;
  const double n = static_cast<double>(records.size());
  for (const auto& r : records) {
    s.mean_bias += r.error;
    s.mean_absolute_error += std::abs(r.error);
  }
  s.mean_bias /= n;
  s.mean_absolute_error /= n;
  double ss = 0.0;
  for (const auto& r : records) ss += (r.error - s.mean_bias) * (r.error - s.mean_bias);
  s.error_sd = std::sqrt(ss / n);
  return s;
}

BiasReport insitu_compare(const std::vector<InSituObservation>& observations, const ConcentrationChart& chart) {
  chart.validate();
  BiasReport report;
  for (const auto& obs : observations) {
    const Date day = utc_date(obs.timestamp);
    if (chart.date && *chart.date != day) {
      ++report.skipped_date;
      continue;
    }
    std::optional<std::array<double, 2>> value;
    try {
      value = sample_chart(chart, stereo_forward(obs.location, chart.grid.hemisphere));
    } catch (const GeometryError&) {
      value.reset();
    }
    if (!value) {
      ++report.skipped_outside;
      continue;
    }
    BiasRecord r;
    r.location = obs.location;
    r.date = day;
    r.observed = obs.observed_concentration;
    r.chart_estimate = (*value)[0];
    r.error = r.chart_estimate - r.observed;
    report.records.push_back(r);
  }
  report.summary = summarize(report.records);
  return report;
}

void write_bias_report(const std::filesystem::path& path, const BiasReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto& s = report.summary;
  out << "# sic-bias v1\n# count " << s.count << " mean_bias " << io::format_double(s.mean_bias) << " mae "
      << io::format_double(s.mean_absolute_error) << " error_sd " << io::format_double(s.error_sd) << " skipped_outside "
      << report.skipped_outside << " skipped_date " << report.skipped_date << "\n";
  out << "lat,lon,date,observed,chart_estimate,error\n";
  for (const auto& r : report.records) {
    out << io::format_double(r.location.lat) << ',' << io::format_double(r.location.lon) << ',' << format_date(r.date)
        << ',' << io::format_double(r.observed) << ',' << io::format_double(r.chart_estimate) << ','
        << io::format_double(r.error) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Plane<double> crosshair_overlay(const ConcentrationChart& chart, const std::vector<BiasRecord>& records, Index arm) {
  Plane<double> img = chart.concentration;
  auto burn = [&](Index r, Index c) {
    if (r < 0 || c < 0 || r >= img.rows() || c >= img.cols()) return;
    img(r, c) = chart.concentration(r, c) < 0.5 ? 1.0 : 0.0;
  };
  for (const auto& rec : records) {
    const auto idx = chart.grid.fractional_index(stereo_forward(rec.location, chart.grid.hemisphere));
    const auto r = static_cast<Index>(std::lround(idx[0]));
    const auto c = static_cast<Index>(std::lround(idx[1]));
    for (Index d = -arm; d <= arm; ++d) {
      burn(r + d, c);
      burn(r, c + d);
    }
  }
  return img;
}

std::string trajectories_csv(const std::vector<MetricsLog>& logs) {
  std::set<std::string> names;
  for (const auto& log : logs) {
    if (log.run_name.empty()) throw InvalidArgument("trajectory export needs a run name for every log");
    if (!names.insert(log.run_name).second) throw InvalidArgument("duplicate run name '" + log.run_name + "'");
  }
  std::string out = "run,";
  bool header_done = false;
  for (const auto& log : logs) {
    const std::string body = log.to_csv();
    const auto nl = body.find('\n');
    if (!header_done) {
      out += body.substr(0, nl + 1);
      header_done = true;
    }
    std::stringstream ss(body.substr(nl + 1));
    std::string line;
    while (std::getline(ss, line)) out += log.run_name + "," + line + "\n";
  }
  if (!header_done) out += MetricsLog{}.to_csv();
  return out;
}

void export_trajectories(const std::vector<MetricsLog>& logs, const std::filesystem::path& out_path) {
  const std::string text = trajectories_csv(logs);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_path.string());
  out << text;
  if (!out) throw IoError("failed writing " + out_path.string());
}

std::vector<MetricsLog> parse_trajectories(const std::string& text) {
  std::stringstream ss(text);
  std::string header;
  if (!std::getline(ss, header) || header.rfind("run,", 0) != 0) {
    throw FormatError(FormatFault::Malformed, "trajectory table must start with a 'run' column");
  }
  const std::string inner_header = header.substr(4) + "\n";
  std::vector<std::string> order;
  std::map<std::string, std::string> bodies;
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(FormatFault::Malformed, "trajectory row without fields");
    const std::string run = line.substr(0, comma);
    if (!bodies.count(run)) {
      order.push_back(run);
      bodies[run] = inner_header;
    }
    bodies[run] += line.substr(comma + 1) + "\n";
  }
  std::vector<MetricsLog> logs;
  for (const auto& run : order) logs.push_back(MetricsLog::from_csv(bodies[run], run));
  return logs;
}

}  // namespace sic
