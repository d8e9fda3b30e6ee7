#include "sic/geogrid.hpp"

#include <cmath>
#include <numbers>

namespace sic {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kIndexSlack = 1e-9;
constexpr double kLatitudeTieDeg = 1e-9;

}  // namespace

std::string to_string(Hemisphere h) { return h == Hemisphere::North ? "NORTH" : "SOUTH"; }

std::string to_string(PassDirection d) { return d == PassDirection::Ascending ? "ASCENDING" : "DESCENDING"; }

Hemisphere parse_hemisphere(const std::string& text) {
  if (text == "NORTH" || text == "north" || text == "N") return Hemisphere::North;
  if (text == "SOUTH" || text == "south" || text == "S") return Hemisphere::South;
  throw InvalidArgument("unknown hemisphere '" + text + "'");
}

PassDirection parse_pass_direction(const std::string& text) {
  if (text == "ASCENDING") return PassDirection::Ascending;
  if (text == "DESCENDING") return PassDirection::Descending;
  throw InvalidArgument("unknown pass direction '" + text + "'");
}

double normalize_longitude(double lon) {
  double l = std::fmod(lon, 360.0);
  if (l <= -180.0) l += 360.0;
  if (l > 180.0) l -= 360.0;
  return l;
}

GeoPoint GeoPoint::make(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0) {
    throw GeometryError("latitude out of range: " + std::to_string(lat));
  }
  return {lat, normalize_longitude(lon)};
}

void Footprint::validate() const {
  for (std::size_t i = 0; i < corners.size(); ++i) {
    for (std::size_t j = i + 1; j < corners.size(); ++j) {
      if (corners[i].lat == corners[j].lat && corners[i].lon == corners[j].lon) {
        throw GeometryError("degenerate footprint: corners " + std::to_string(i) + " and " + std::to_string(j) +
                            " coincide");
      }
    }
  }
}

void ConcentrationChart::validate() const {
  if (concentration.rows() != uncertainty.rows() || concentration.cols() != uncertainty.cols()) {
    throw InvalidArgument("chart channels differ in shape");
  }
  if (concentration.size() == 0) throw InvalidArgument("chart is empty");
  if (!(grid.spacing > 0.0)) throw InvalidArgument("chart spacing must be positive");
  auto in_unit = [](const Plane<double>& p) { return (p >= 0.0).all() && (p <= 1.0).all(); };
  if (!in_unit(concentration) || !in_unit(uncertainty)) {
    throw InvalidArgument("chart values must lie in [0, 1]");
  }
}

PlanePoint stereo_forward(GeoPoint p, Hemisphere hemisphere) {
  const double colat = hemisphere == Hemisphere::North ? 90.0 - p.lat : 90.0 + p.lat;
  if (colat >= 180.0 - 1e-12) throw GeometryError("antipodal point unprojectable");
  const double rho = 2.0 * kEarthRadiusKm * std::tan(0.5 * colat * kDeg);
  const double lon = p.lon * kDeg;
  const double x = rho * std::sin(lon);
  const double y = hemisphere == Hemisphere::North ? -rho * std::cos(lon) : rho * std::cos(lon);
  return {x, y};
}

GeoPoint stereo_inverse(PlanePoint q, Hemisphere hemisphere) {
  const double rho = std::hypot(q.x, q.y);
  const double colat = 2.0 * std::atan(rho / (2.0 * kEarthRadiusKm)) / kDeg;
  double lon = 0.0;
  if (rho > 0.0) {
    lon = hemisphere == Hemisphere::North ? std::atan2(q.x, -q.y) : std::atan2(q.x, q.y);
    lon /= kDeg;
  }
  const double lat = hemisphere == Hemisphere::North ? 90.0 - colat : colat - 90.0;
  return {lat, normalize_longitude(lon)};
}

std::array<PlanePoint, 4> project_corners(const Footprint& f, Hemisphere hemisphere) {
  std::array<PlanePoint, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = stereo_forward(f.corners[i], hemisphere);
  return out;
}

PassDirection derive_pass_direction(const Footprint& f) {
  const double lat0 = f.corners[0].lat;
  const double lat3 = f.corners[3].lat;
  if (std::abs(lat0 - lat3) <= kLatitudeTieDeg) {
    throw GeometryError("degenerate footprint: indeterminate pass direction");
  }
  return lat0 > lat3 ? PassDirection::Ascending : PassDirection::Descending;
}

Reconciliation reconcile_pass_direction(PassDirection reported, PassDirection derived) {
  const bool agree = reported == derived;
  return {agree, !agree};
}

PlanePoint footprint_lattice_point(const std::array<PlanePoint, 4>& quad, double row_frac, double col_frac) {
  const double top_x = (1.0 - col_frac) * quad[0].x + col_frac * quad[1].x;
  const double top_y = (1.0 - col_frac) * quad[0].y + col_frac * quad[1].y;
  const double bot_x = (1.0 - col_frac) * quad[3].x + col_frac * quad[2].x;
  const double bot_y = (1.0 - col_frac) * quad[3].y + col_frac * quad[2].y;
  return {(1.0 - row_frac) * top_x + row_frac * bot_x, (1.0 - row_frac) * top_y + row_frac * bot_y};
}

std::optional<double> sample_plane(const Plane<double>& values, const GridGeometry& grid, PlanePoint p) {
  const auto [fr, fc] = grid.fractional_index(p);
  const auto rows = static_cast<double>(values.rows());
  const auto cols = static_cast<double>(values.cols());
  if (!(fr >= -kIndexSlack && fr <= rows - 1.0 + kIndexSlack && fc >= -kIndexSlack && fc <= cols - 1.0 + kIndexSlack)) {
    return std::nullopt;
  }
  const double r = std::clamp(fr, 0.0, rows - 1.0);
  const double c = std::clamp(fc, 0.0, cols - 1.0);
  const Index r0 = std::min(static_cast<Index>(std::floor(r)), std::max<Index>(values.rows() - 2, 0));
  const Index c0 = std::min(static_cast<Index>(std::floor(c)), std::max<Index>(values.cols() - 2, 0));
  const Index r1 = std::min(r0 + 1, values.rows() - 1);
  const Index c1 = std::min(c0 + 1, values.cols() - 1);
  const double tr = r - static_cast<double>(r0);
  const double tc = c - static_cast<double>(c0);
  const double top = (1.0 - tc) * values(r0, c0) + tc * values(r0, c1);
  const double bottom = (1.0 - tc) * values(r1, c0) + tc * values(r1, c1);
  return (1.0 - tr) * top + tr * bottom;
}

std::optional<std::array<double, 2>> sample_chart(const ConcentrationChart& chart, PlanePoint p) {
  const auto conc = sample_plane(chart.concentration, chart.grid, p);
  if (!conc) return std::nullopt;
  const auto unc = sample_plane(chart.uncertainty, chart.grid, p);
  return std::array<double, 2>{std::clamp(*conc, 0.0, 1.0), std::clamp(*unc, 0.0, 1.0)};
}

LabelPatch resample_chart_to_footprint(const ConcentrationChart& chart, const Footprint& f, Index out_h, Index out_w) {
  if (out_h <= 0 || out_w <= 0) throw InvalidArgument("output patch dimensions must be positive");
  const auto quad = project_corners(f, chart.grid.hemisphere);
  LabelPatch patch(out_h, out_w, 2);
  for (Index i = 0; i < out_h; ++i) {
    const double v = (static_cast<double>(i) + 0.5) / static_cast<double>(out_h);
    for (Index j = 0; j < out_w; ++j) {
      const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(out_w);
      const auto sample = sample_chart(chart, footprint_lattice_point(quad, v, u));
      if (!sample) throw GeometryError("footprint exceeds chart coverage");
      patch[0](i, j) = (*sample)[0];
      patch[1](i, j) = (*sample)[1];
    }
  }
  return patch;
}

bool quad_contains(const std::array<PlanePoint, 4>& quad, PlanePoint p) {
  bool inside = false;
  for (std::size_t i = 0, j = quad.size() - 1; i < quad.size(); j = i++) {
    const auto& a = quad[i];
    const auto& b = quad[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace sic
