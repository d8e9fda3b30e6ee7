#include "sic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "sic/rng.hpp"

namespace sic {

namespace {

constexpr double kPi = std::numbers::pi;

double logistic_edge(double distance, double sharpness) {
  if (std::isinf(sharpness)) return distance > 0.0 ? 1.0 : (distance < 0.0 ? 0.0 : 0.5);
  return 1.0 / (1.0 + std::exp(-sharpness * distance));
}

}  // namespace

GridGeometry grid_centered_on(GeoPoint center, Hemisphere hemisphere, Index rows, Index cols, double spacing_km) {
  const PlanePoint c = stereo_forward(center, hemisphere);
  GridGeometry g;
  g.hemisphere = hemisphere;
  g.spacing = spacing_km;
  g.origin = {c.x - 0.5 * static_cast<double>(cols - 1) * spacing_km,
              c.y + 0.5 * static_cast<double>(rows - 1) * spacing_km};
  return g;
}

Footprint grid_footprint(const GridGeometry& grid, Index rows, Index cols) {
  const double r_top = -0.5;
  const double r_bottom = static_cast<double>(rows) - 0.5;
  const double c_left = -0.5;
  const double c_right = static_cast<double>(cols) - 0.5;
  const std::array<PlanePoint, 4> quad{grid.cell_center(r_top, c_left), grid.cell_center(r_top, c_right),
                                       grid.cell_center(r_bottom, c_right), grid.cell_center(r_bottom, c_left)};
  Footprint f;
  for (std::size_t i = 0; i < 4; ++i) f.corners[i] = stereo_inverse(quad[i], grid.hemisphere);
  try {
    f.reported_direction = derive_pass_direction(f);
  } catch (const GeometryError&) {
    f.reported_direction = PassDirection::Descending;
  }
  return f;
}

SceneTruth gen_truth_field(std::uint64_t seed, const TruthOptions& options) {
  if (options.rows <= 0 || options.cols <= 0) throw InvalidArgument("truth field dimensions must be positive");
  if (!(options.edge_sharpness > 0.0)) throw InvalidArgument("edge_sharpness must be positive");

  Rng rng = make_rng(seed, "truth");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double angle = 2.0 * kPi * unit(rng);
  const double nx = std::cos(angle);
  const double ny = std::sin(angle);
  const double extent = static_cast<double>(std::min(options.rows, options.cols));
  const double cr = 0.5 * static_cast<double>(options.rows - 1) + options.edge_position * 0.5 * extent * ny;
  const double cc = 0.5 * static_cast<double>(options.cols - 1) + options.edge_position * 0.5 * extent * nx;

  // Low-frequency wiggle along the edge: three harmonics with seeded phases.
  std::array<double, 3> phase{};
  std::array<double, 3> weight{};
  for (std::size_t k = 0; k < 3; ++k) {
    phase[k] = 2.0 * kPi * unit(rng);
    weight[k] = (0.5 + unit(rng)) / static_cast<double>(k + 1);
  }
  const double amplitude = options.wiggle * extent;

  SceneTruth truth;
  truth.field.resize(options.rows, options.cols);
  for (Index r = 0; r < options.rows; ++r) {
    for (Index c = 0; c < options.cols; ++c) {
      const double dr = static_cast<double>(r) - cr;
      const double dc = static_cast<double>(c) - cc;
      const double along = -dc * ny + dr * nx;
      double offset = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        offset += weight[k] * std::sin(2.0 * kPi * static_cast<double>(k + 1) * along / extent + phase[k]);
      }
      const double distance = dc * nx + dr * ny + amplitude * offset;
      truth.field(r, c) = std::clamp(logistic_edge(distance, options.edge_sharpness), 0.0, 1.0);
    }
  }
  truth.grid = options.grid;
  truth.footprint = grid_footprint(options.grid, options.rows, options.cols);
  truth.timestamp = options.timestamp;
  return truth;
}

SceneTruth gen_truth_field(std::uint64_t seed, Index h, Index w, double edge_sharpness, double edge_position) {
  TruthOptions options;
  options.rows = h;
  options.cols = w;
  options.edge_sharpness = edge_sharpness;
  options.edge_position = edge_position;
  options.grid = grid_centered_on({-65.0, 0.0}, Hemisphere::South, h, w, 1.0);
  return gen_truth_field(seed, options);
}

double co_pol_response(double concentration) { return 0.04 + 0.24 * concentration; }

double cross_pol_response(double concentration) {
  return 0.02 + 0.10 * concentration + 0.12 * concentration * concentration;
}

Raster<double> render_sar(const Plane<double>& field, std::uint64_t seed, const SarOptions& options) {
  if (options.looks <= 0) throw InvalidArgument("speckle looks must be positive");
  Raster<double> image(field.rows(), field.cols(), 2);
  Rng rng = make_rng(seed, "speckle");
  const double looks = static_cast<double>(options.looks);
  std::gamma_distribution<double> speckle(looks, 1.0 / looks);
  for (Index r = 0; r < field.rows(); ++r) {
    for (Index c = 0; c < field.cols(); ++c) {
      const double conc = field(r, c);
      double co = co_pol_response(conc);
      double cross = cross_pol_response(conc);
      if (options.speckle) {
        co *= speckle(rng);
        cross *= speckle(rng);
      }
      image[0](r, c) = std::clamp(co, 0.0, 1.0);
      image[1](r, c) = std::clamp(cross, 0.0, 1.0);
    }
  }
  return image;
}

ConcentrationChart gen_pmw_chart(const SceneTruth& truth, Index coarse_factor, std::uint64_t seed,
                                 const ChartOptions& options) {
  const Index rows = truth.field.rows();
  const Index cols = truth.field.cols();
  if (coarse_factor < 2 || rows % coarse_factor != 0 || cols % coarse_factor != 0) {
    throw InvalidArgument("coarse_factor must be >= 2 and divide the truth dimensions");
  }
  if (options.u_min < 0.0 || options.u_max > 1.0 || options.u_min > options.u_max) {
    throw InvalidArgument("uncertainty bounds must satisfy 0 <= u_min <= u_max <= 1");
  }
  const Index out_rows = rows / coarse_factor;
  const Index out_cols = cols / coarse_factor;
  Plane<double> mean(out_rows, out_cols);
  Plane<double> variance(out_rows, out_cols);
  for (Index r = 0; r < out_rows; ++r) {
    for (Index c = 0; c < out_cols; ++c) {
      const auto block = truth.field.block(r * coarse_factor, c * coarse_factor, coarse_factor, coarse_factor);
      const double m = block.mean();
      mean(r, c) = m;
      variance(r, c) = (block - m).square().mean();
    }
  }
  // Rounding in the block mean leaves ~1e-33 variances on constant blocks.
  variance = (variance < 1e-15).select(0.0, variance);
  const double max_var = variance.maxCoeff();

  ConcentrationChart chart;
  chart.uncertainty = max_var > 0.0
                          ? Plane<double>(options.u_min + (options.u_max - options.u_min) * (variance / max_var))
                          : Plane<double>(Plane<double>::Constant(out_rows, out_cols, options.u_min));
  chart.concentration = mean;
  if (options.noise) {
    Rng rng = make_rng(seed, "chart-noise");
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index r = 0; r < out_rows; ++r) {
      for (Index c = 0; c < out_cols; ++c) chart.concentration(r, c) += chart.uncertainty(r, c) * gauss(rng);
    }
  }
  chart.concentration = chart.concentration.max(0.0).min(1.0);
  chart.uncertainty = chart.uncertainty.max(0.0).min(1.0);

  const double half = 0.5 * static_cast<double>(coarse_factor - 1);
  chart.grid.origin = truth.grid.cell_center(half, half);
  chart.grid.spacing = truth.grid.spacing * static_cast<double>(coarse_factor);
  chart.grid.hemisphere = truth.grid.hemisphere;
  chart.date = utc_date(truth.timestamp);
  return chart;
}

Plane<double> sample_truth_on_footprint(const SceneTruth& scene, const Footprint& f, Index h, Index w) {
  const auto quad = project_corners(f, scene.grid.hemisphere);
  Plane<double> out(h, w);
  for (Index i = 0; i < h; ++i) {
    const double v = (static_cast<double>(i) + 0.5) / static_cast<double>(h);
    for (Index j = 0; j < w; ++j) {
      const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(w);
      const auto value = sample_plane(scene.field, scene.grid, footprint_lattice_point(quad, v, u));
      if (!value) throw GeometryError("footprint exceeds truth scene");
      out(i, j) = std::clamp(*value, 0.0, 1.0);
    }
  }
  return out;
}

SyntheticCatalog gen_catalog(const CatalogRequest& request) {
  if (request.n_entries == 0) throw InvalidArgument("catalog needs at least one entry");
  if (request.mislabel_rate < 0.0 || request.mislabel_rate > 1.0) throw InvalidArgument("mislabel_rate outside [0, 1]");
  if (request.region.rows <= 0 || request.region.cols <= 0) throw InvalidArgument("empty region");
  if (request.last_day < request.first_day) throw InvalidArgument("inverted date range");
  if (request.footprint_px <= 0 || !(request.footprint_spacing_km > 0.0)) {
    throw InvalidArgument("footprint size must be positive");
  }

  const GridGeometry& grid = request.region.grid;
  const double side_km = static_cast<double>(request.footprint_px) * request.footprint_spacing_km;
  const double margin_cells = side_km / std::numbers::sqrt2 / grid.spacing + static_cast<double>(request.chart_margin_cells);
  const double r_lo = margin_cells;
  const double r_hi = static_cast<double>(request.region.rows - 1) - margin_cells;
  const double c_lo = margin_cells;
  const double c_hi = static_cast<double>(request.region.cols - 1) - margin_cells;
  if (r_hi < r_lo || c_hi < c_lo) throw InvalidArgument("region too small for the requested footprint size");

  SyntheticCatalog catalog;
  const auto n_days = static_cast<std::size_t>((request.last_day - request.first_day).count() + 1);
  catalog.scenes.reserve(n_days);
  for (std::size_t d = 0; d < n_days; ++d) {
    Rng day_rng = make_rng(request.seed, "scene-layout", d);
    TruthOptions options;
    options.rows = request.region.rows;
    options.cols = request.region.cols;
    options.grid = grid;
    options.edge_sharpness = request.edge_sharpness;
    options.edge_position = std::uniform_real_distribution<double>(-0.4, 0.4)(day_rng);
    options.timestamp = request.first_day + std::chrono::days(static_cast<int>(d));
    catalog.scenes.push_back(gen_truth_field(derive_seed(request.seed, "scene", d), options));
  }

  // Exactly round(rate * n) entries are mislabeled, chosen by a seeded shuffle.
  std::vector<std::size_t> order(request.n_entries);
  std::iota(order.begin(), order.end(), 0);
  Rng pick = make_rng(request.seed, "mislabel");
  std::shuffle(order.begin(), order.end(), pick);
  const auto n_flagged =
      static_cast<std::size_t>(std::llround(request.mislabel_rate * static_cast<double>(request.n_entries)));
  std::vector<bool> flagged(request.n_entries, false);
  for (std::size_t k = 0; k < n_flagged; ++k) flagged[order[k]] = true;

  const char hemi = grid.hemisphere == Hemisphere::North ? 'N' : 'S';
  catalog.entries.reserve(request.n_entries);
  catalog.images.reserve(request.n_entries);
  for (std::size_t i = 0; i < request.n_entries; ++i) {
    Rng rng = make_rng(request.seed, "entry", i);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t day = std::min<std::size_t>(static_cast<std::size_t>(unit(rng) * static_cast<double>(n_days)), n_days - 1);
    const double row = r_lo + (r_hi - r_lo) * unit(rng);
    const double col = c_lo + (c_hi - c_lo) * unit(rng);
    const bool ascending = unit(rng) < 0.5;
    const double yaw = (unit(rng) * 2.0 - 1.0) * kPi / 3.0;
    const auto seconds = static_cast<int>(unit(rng) * 86400.0);

    // Meridians are radial in the polar plane: north points away from the
    // pole in the south and towards it in the north.
    const PlanePoint center = grid.cell_center(row, col);
    const double radius = std::hypot(center.x, center.y);
    double north_x = center.x / radius;
    double north_y = center.y / radius;
    if (grid.hemisphere == Hemisphere::North) {
      north_x = -north_x;
      north_y = -north_y;
    }
    const double sign = ascending ? 1.0 : -1.0;
    const double up_x = sign * (std::cos(yaw) * north_x - std::sin(yaw) * north_y);
    const double up_y = sign * (std::sin(yaw) * north_x + std::cos(yaw) * north_y);
    const double right_x = up_y;
    const double right_y = -up_x;
    const double h = 0.5 * side_km;
    const std::array<PlanePoint, 4> quad{
        PlanePoint{center.x - h * right_x + h * up_x, center.y - h * right_y + h * up_y},
        PlanePoint{center.x + h * right_x + h * up_x, center.y + h * right_y + h * up_y},
        PlanePoint{center.x + h * right_x - h * up_x, center.y + h * right_y - h * up_y},
        PlanePoint{center.x - h * right_x - h * up_x, center.y - h * right_y - h * up_y}};

    CatalogEntry entry;
    char id[64];
    std::snprintf(id, sizeof id, "%s_%c_%05zu", request.id_prefix.c_str(), hemi, i);
    entry.id = id;
    entry.timestamp = catalog.scenes[day].timestamp + std::chrono::seconds(seconds);
    for (std::size_t k = 0; k < 4; ++k) entry.footprint.corners[k] = stereo_inverse(quad[k], grid.hemisphere);
    const PassDirection true_direction = derive_pass_direction(entry.footprint);
    entry.mislabeled = flagged[i];
    entry.footprint.reported_direction = entry.mislabeled ? opposite(true_direction) : true_direction;
    entry.image_path = "images/" + entry.id + ".sicr";

    const Plane<double> patch =
        sample_truth_on_footprint(catalog.scenes[day], entry.footprint, request.footprint_px, request.footprint_px);
    Raster<float> image = render_sar(patch, derive_seed(request.seed, "entry-speckle", i)).cast<float>();
    if (entry.mislabeled) image = rotate180(image);

    catalog.entries.push_back(std::move(entry));
    catalog.images.push_back(std::move(image));
  }
  return catalog;
}

std::vector<InSituObservation> gen_insitu_observations(std::uint64_t seed, const SceneTruth& truth, std::size_t n,
                                                       double observation_noise_sd) {
  if (n == 0) throw InvalidArgument("need at least one observation");
  if (observation_noise_sd < 0.0) throw InvalidArgument("observation noise sd must be non-negative");
  Rng rng = make_rng(seed, "insitu");
  std::uniform_int_distribution<Index> pick_row(0, truth.field.rows() - 1);
  std::uniform_int_distribution<Index> pick_col(0, truth.field.cols() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<InSituObservation> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Index r = pick_row(rng);
    const Index c = pick_col(rng);
    const double noise = observation_noise_sd > 0.0 ? observation_noise_sd * gauss(rng) : 0.0;
    InSituObservation obs;
    obs.location = stereo_inverse(truth.grid.cell_center(static_cast<double>(r), static_cast<double>(c)),
                                  truth.grid.hemisphere);
    obs.timestamp = truth.timestamp;
    obs.observed_concentration = std::clamp(truth.field(r, c) + noise, 0.0, 1.0);
    out.push_back(obs);
  }
  return out;
}

}  // namespace sic
