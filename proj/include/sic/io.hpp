#pragma once

// On-disk formats shared by the generator, the pipeline and the CLI:
// catalog manifests, raster containers (images, charts, truth sidecars),
// in-situ observation tables and 16-bit PGM report images.

#include <string>
#include <vector>

#include "sic/geogrid.hpp"
#include "sic/synth.hpp"

namespace sic::io {

/// Tab-separated manifest: id, ISO-8601 timestamp, lat0 lon0 .. lat3 lon3,
/// reported pass direction, image path. Lines starting with '#' are comments.
void write_manifest(const std::string& path, const std::vector<CatalogEntry>& entries);
std::vector<CatalogEntry> read_manifest(const std::string& path);
std::string manifest_line(const CatalogEntry& entry);
CatalogEntry parse_manifest_line(const std::string& line);

/// Generator-only sidecar: id, mislabeled flag, true pass direction.
struct TruthFlag {
  std::string id;
  bool mislabeled = false;
  PassDirection true_direction = PassDirection::Ascending;
};
void write_truth_flags(const std::string& path, const std::vector<CatalogEntry>& entries);
std::vector<TruthFlag> read_truth_flags(const std::string& path);

// Raster container "SICR": magic | version u16 | tag (u8 length + bytes) |
// H u32 | W u32 | C u8 | value bytes u8 (4 or 8) | has_grid u8 |
// [origin_x f64 | origin_y f64 | spacing f64 | hemisphere u8 | has_date u8 | days i32] |
// values row-major H x W x C.
void save_image(const std::string& path, const Raster<float>& image);
Raster<float> load_image(const std::string& path);
void save_chart(const std::string& path, const ConcentrationChart& chart);
ConcentrationChart load_chart(const std::string& path);
void save_truth(const std::string& path, const SceneTruth& truth);
SceneTruth load_truth(const std::string& path);

/// "# sic-insitu v1" header, then: lat, lon, timestamp, observed concentration.
void write_observations(const std::string& path, const std::vector<InSituObservation>& obs);
std::vector<InSituObservation> read_observations(const std::string& path);

/// Binary PGM, 16-bit maxval; gray = round(value * 65535) with values clamped to [0, 1].
void write_pgm16(const std::string& path, const Plane<double>& values);
Plane<double> read_pgm16(const std::string& path);

/// "%.17g"
std::string format_double(double v);

}  // namespace sic::io
