#pragma once

// Seeded synthetic stand-ins for the radar archive, the coarse concentration
// chart and in-situ observations. Every generator is a pure function of its
// seed and parameters.

#include <cstdint>
#include <string>
#include <vector>

#include "sic/geogrid.hpp"
#include "sic/raster.hpp"
#include "sic/timeutil.hpp"

namespace sic {

/// Fine-resolution ground truth on a regular projection grid.
struct SceneTruth {
  Plane<double> field;
  GridGeometry grid;
  Footprint footprint;  // outer edges of the grid
  Timestamp timestamp{};
};

/// Grid of rows x cols cells with the given spacing, centred on `center`.
GridGeometry grid_centered_on(GeoPoint center, Hemisphere hemisphere, Index rows, Index cols, double spacing_km);

/// Footprint traced along the outer cell edges of a grid (TL, TR, BR, BL in row/col order).
Footprint grid_footprint(const GridGeometry& grid, Index rows, Index cols);

struct TruthOptions {
  Index rows = 256;
  Index cols = 256;
  double edge_sharpness = 0.25;  // logistic slope per grid cell; +inf gives a step
  double edge_position = 0.0;    // offset of the edge from the centre, in half-extents
  double wiggle = 0.06;          // edge perturbation amplitude, fraction of the smaller extent
  GridGeometry grid = grid_centered_on({-65.0, 0.0}, Hemisphere::South, 256, 256, 1.0);
  Timestamp timestamp{};
};

SceneTruth gen_truth_field(std::uint64_t seed, const TruthOptions& options);
SceneTruth gen_truth_field(std::uint64_t seed, Index h, Index w, double edge_sharpness, double edge_position);

/// Noise-free channel responses; both are strictly increasing in concentration.
double co_pol_response(double concentration);
double cross_pol_response(double concentration);

struct SarOptions {
  bool speckle = true;
  int looks = 4;
};

/// Two-channel radar-like render of a concentration field, values clamped to [0, 1].
Raster<double> render_sar(const Plane<double>& field, std::uint64_t seed, const SarOptions& options = {});
inline Raster<double> render_sar(const SceneTruth& truth, std::uint64_t seed, const SarOptions& options = {}) {
  return render_sar(truth.field, seed, options);
}

struct ChartOptions {
  double u_min = 0.05;
  double u_max = 0.5;
  bool noise = true;
};

ConcentrationChart gen_pmw_chart(const SceneTruth& truth, Index coarse_factor, std::uint64_t seed,
                                 const ChartOptions& options = {});

struct CatalogEntry {
  std::string id;
  Timestamp timestamp{};
  Footprint footprint;  // carries the reported pass direction
  std::string image_path;
  bool mislabeled = false;  // generator-only; never written to the manifest

  PassDirection reported_direction() const { return footprint.reported_direction; }
};

struct Region {
  GridGeometry grid;
  Index rows = 0;
  Index cols = 0;
};

struct CatalogRequest {
  std::uint64_t seed = 0;
  std::size_t n_entries = 0;
  Region region;
  Date first_day{};
  Date last_day{};
  double mislabel_rate = 0.0;
  Index footprint_px = 64;
  double footprint_spacing_km = 1.0;
  Index chart_margin_cells = 8;  // keeps footprints inside the coarse chart's centre extent
  double edge_sharpness = 0.25;
  std::string id_prefix = "S1";
};

struct SyntheticCatalog {
  std::vector<SceneTruth> scenes;  // one per day, first_day .. last_day
  std::vector<CatalogEntry> entries;
  std::vector<Raster<float>> images;  // as stored, i.e. pre-rotated for mislabeled entries
};

SyntheticCatalog gen_catalog(const CatalogRequest& request);

/// Truth resampled onto a footprint's pixel lattice (row 0 along the top edge).
Plane<double> sample_truth_on_footprint(const SceneTruth& scene, const Footprint& f, Index h, Index w);

struct InSituObservation {
  GeoPoint location;
  Timestamp timestamp{};
  double observed_concentration = 0.0;
};

std::vector<InSituObservation> gen_insitu_observations(std::uint64_t seed, const SceneTruth& truth, std::size_t n,
                                                       double observation_noise_sd);

}  // namespace sic
