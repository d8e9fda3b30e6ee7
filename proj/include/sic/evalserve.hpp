#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sic/nn/model.hpp"
#include "sic/synth.hpp"
#include "sic/timeutil.hpp"
#include "sic/training.hpp"

namespace sic {

struct SearchQuery {
  GeoPoint location;
  Date start{};
  Date end{};
  std::size_t max_results = 10;

  void validate() const;
};

/// Entries whose projected footprint contains the location (even-odd rule,
/// projected on the location's hemisphere) and whose UTC date lies in
/// [start, end]; newest first, ties by id, at most max_results.
std::vector<CatalogEntry> search_catalog(const std::vector<CatalogEntry>& catalog, const SearchQuery& q);

struct NamedModel {
  std::string name;
  const nn::Model* model = nullptr;
};

struct ReportRow {
  std::string name;
  Metrics metrics;
};

struct ComparisonReport {
  std::filesystem::path dir;
  std::vector<ReportRow> rows;
};

/// Writes <out_dir>/<entry id>/ with image_ch0.pgm, image_ch1.pgm,
/// label_conc.pgm, label_unc.pgm, pred_<name>.pgm per model and metrics.csv.
ComparisonReport comparison_report(const CatalogEntry& entry, const Raster<float>& stored_image,
                                   const std::vector<NamedModel>& models, const ConcentrationChart& chart,
                                   const std::filesystem::path& out_dir, Index out_h, Index out_w);

struct BiasRecord {
  GeoPoint location;
  Date date{};
  double observed = 0.0;
  double chart_estimate = 0.0;
  double error = 0.0;  // estimate - observed
};

struct BiasSummary {
  double mean_bias = 0.0;
  double mean_absolute_error = 0.0;
  double error_sd = 0.0;  // population standard deviation
  std::size_t count = 0;
};

struct BiasReport {
  std::vector<BiasRecord> records;
  BiasSummary summary;
  std::size_t skipped_outside = 0;  // outside the chart's sampled extent
  std::size_t skipped_date = 0;     // chart dated and the observation falls on another UTC day
};

BiasSummary summarize(const std::vector<BiasRecord>& records);

BiasReport insitu_compare(const std::vector<InSituObservation>& observations, const ConcentrationChart& chart);

/// "# sic-bias v1" header, a summary comment line, then one CSV row per record.
void write_bias_report(const std::filesystem::path& path, const BiasReport& report);

/// Chart concentration with a 1-pixel cross (arm length `arm`) burned in at
/// each record location; crosses are drawn with value 1 over dark cells and 0 over bright ones.
Plane<double> crosshair_overlay(const ConcentrationChart& chart, const std::vector<BiasRecord>& records, Index arm = 3);

/// One table for several runs: run, epoch, stage, stage_start, metric columns.
std::string trajectories_csv(const std::vector<MetricsLog>& logs);
void export_trajectories(const std::vector<MetricsLog>& logs, const std::filesystem::path& out_path);
/// Inverse of trajectories_csv; runs appear in first-seen order.
std::vector<MetricsLog> parse_trajectories(const std::string& text);

}  // namespace sic
