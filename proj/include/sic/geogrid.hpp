#pragma once

// Polar stereographic plane math, footprint geometry, pass-direction checks
// and chart-to-footprint resampling.

#include <array>
#include <optional>
#include <string>

#include "sic/raster.hpp"
#include "sic/timeutil.hpp"

namespace sic {

inline constexpr double kEarthRadiusKm = 6371.0;

enum class Hemisphere { North, South };
enum class PassDirection { Ascending, Descending };

std::string to_string(Hemisphere h);
std::string to_string(PassDirection d);
Hemisphere parse_hemisphere(const std::string& text);
PassDirection parse_pass_direction(const std::string& text);
inline PassDirection opposite(PassDirection d) {
  return d == PassDirection::Ascending ? PassDirection::Descending : PassDirection::Ascending;
}

/// Latitude/longitude in degrees. Use make() to validate and normalise.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  /// Throws GeometryError when lat is outside [-90, 90]; wraps lon into (-180, 180].
  static GeoPoint make(double lat, double lon);
};

double normalize_longitude(double lon);

/// Projection-plane coordinates in kilometres.
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;
};

/// Acquisition footprint, corners in satellite-frame order:
/// 0 top-left, 1 top-right, 2 bottom-right, 3 bottom-left.
struct Footprint {
  std::array<GeoPoint, 4> corners{};
  PassDirection reported_direction = PassDirection::Ascending;

  /// Throws GeometryError if two corners coincide.
  void validate() const;
};

struct Reconciliation {
  bool consistent = true;
  bool needs_correction = false;
};

/// Regular grid in the projection plane. Cell (r, c) has its centre at
/// (origin.x + c * spacing, origin.y - r * spacing); rows run southward on the map.
struct GridGeometry {
  PlanePoint origin{};
  double spacing = 1.0;
  Hemisphere hemisphere = Hemisphere::South;

  PlanePoint cell_center(double row, double col) const {
    return {origin.x + col * spacing, origin.y - row * spacing};
  }
  /// Fractional (row, col) of a plane point.
  std::array<double, 2> fractional_index(PlanePoint p) const {
    return {(origin.y - p.y) / spacing, (p.x - origin.x) / spacing};
  }
};

/// Coarse chart of (concentration, uncertainty) at cell centres.
struct ConcentrationChart {
  Plane<double> concentration;
  Plane<double> uncertainty;
  GridGeometry grid;
  std::optional<Date> date;

  Index rows() const { return concentration.rows(); }
  Index cols() const { return concentration.cols(); }
  /// Throws InvalidArgument on shape mismatch, out-of-range values or spacing <= 0.
  void validate() const;
};

/// H x W x 2 label: channel 0 concentration, channel 1 uncertainty.
using LabelPatch = Raster<double>;

PlanePoint stereo_forward(GeoPoint p, Hemisphere hemisphere);
GeoPoint stereo_inverse(PlanePoint q, Hemisphere hemisphere);

std::array<PlanePoint, 4> project_corners(const Footprint& f, Hemisphere hemisphere);

/// ASCENDING iff corner 0 lies north of corner 3.
PassDirection derive_pass_direction(const Footprint& f);
Reconciliation reconcile_pass_direction(PassDirection reported, PassDirection derived);

/// Rotates by 180 degrees when the reconciliation says the quicklook was
/// processed with the wrong pass direction; otherwise returns a copy.
template <typename Scalar>
Raster<Scalar> correct_quicklook_orientation(const Raster<Scalar>& image, const Reconciliation& r) {
  return r.needs_correction ? rotate180(image) : image;
}

/// Point of the footprint lattice at fractional position (row_frac, col_frac) in [0, 1]^2.
PlanePoint footprint_lattice_point(const std::array<PlanePoint, 4>& quad, double row_frac, double col_frac);

/// Bilinear sample of a value-at-centre grid; nullopt outside the cell-centre extent.
std::optional<double> sample_plane(const Plane<double>& values, const GridGeometry& grid, PlanePoint p);

/// Bilinear sample of both chart channels; nullopt outside the cell-centre extent.
std::optional<std::array<double, 2>> sample_chart(const ConcentrationChart& chart, PlanePoint p);

LabelPatch resample_chart_to_footprint(const ConcentrationChart& chart, const Footprint& f, Index out_h, Index out_w);

/// Even-odd point-in-polygon test on a quadrilateral.
bool quad_contains(const std::array<PlanePoint, 4>& quad, PlanePoint p);

}  // namespace sic
