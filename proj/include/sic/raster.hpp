#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sic/error.hpp"

namespace sic {

/// Single-channel image plane, row-major so that row i is contiguous.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

/// Planar multi-channel raster (H x W x C stored as C planes).
template <typename Scalar>
struct Raster {
  std::vector<Plane<Scalar>> channels;

  Raster() = default;
  Raster(Index rows, Index cols, Index n_channels, Scalar fill = Scalar(0))
      : channels(static_cast<std::size_t>(n_channels), Plane<Scalar>::Constant(rows, cols, fill)) {}
  explicit Raster(std::vector<Plane<Scalar>> planes) : channels(std::move(planes)) {}

  Index rows() const { return channels.empty() ? 0 : channels.front().rows(); }
  Index cols() const { return channels.empty() ? 0 : channels.front().cols(); }
  Index channel_count() const { return static_cast<Index>(channels.size()); }

  Plane<Scalar>& operator[](Index c) { return channels[static_cast<std::size_t>(c)]; }
  const Plane<Scalar>& operator[](Index c) const { return channels[static_cast<std::size_t>(c)]; }

  template <typename Other>
  Raster<Other> cast() const {
    Raster<Other> out;
    out.channels.reserve(channels.size());
    for (const auto& p : channels) out.channels.push_back(p.template cast<Other>());
    return out;
  }

  /// Bitwise-exact equality of shape and values.
  bool operator==(const Raster& other) const {
    if (channels.size() != other.channels.size()) return false;
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const auto& a = channels[c];
      const auto& b = other.channels[c];
      if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
      if ((a != b).any()) return false;
    }
    return true;
  }
};

/// The eight symmetries of the square. Rotations are counter-clockwise.
enum class Dihedral : std::uint8_t {
  Identity = 0,
  Rot90,
  Rot180,
  Rot270,
  FlipHorizontal,  // mirror columns
  FlipVertical,    // mirror rows
  Transpose,
  AntiTranspose,
};

inline constexpr int kDihedralCount = 8;

/// True for the transforms that exchange the row and column extents.
inline bool swaps_axes(Dihedral t) {
  return t == Dihedral::Rot90 || t == Dihedral::Rot270 || t == Dihedral::Transpose ||
         t == Dihedral::AntiTranspose;
}

template <typename Scalar>
Plane<Scalar> apply_dihedral(const Plane<Scalar>& p, Dihedral t) {
  switch (t) {
    case Dihedral::Identity: return p;
    case Dihedral::Rot90: return p.transpose().colwise().reverse();
    case Dihedral::Rot180: return p.reverse();
    case Dihedral::Rot270: return p.transpose().rowwise().reverse();
    case Dihedral::FlipHorizontal: return p.rowwise().reverse();
    case Dihedral::FlipVertical: return p.colwise().reverse();
    case Dihedral::Transpose: return p.transpose();
    case Dihedral::AntiTranspose: return p.reverse().transpose();
  }
  return p;
}

template <typename Scalar>
Raster<Scalar> apply_dihedral(const Raster<Scalar>& r, Dihedral t) {
  Raster<Scalar> out;
  out.channels.reserve(r.channels.size());
  for (const auto& p : r.channels) out.channels.push_back(apply_dihedral(p, t));
  return out;
}

template <typename Scalar>
Raster<Scalar> rotate180(const Raster<Scalar>& r) {
  return apply_dihedral(r, Dihedral::Rot180);
}

/// Bilinear resize with pixel-centre alignment and edge clamping.
template <typename Scalar>
Plane<Scalar> resize_bilinear(const Plane<Scalar>& src, Index out_rows, Index out_cols) {
  if (out_rows <= 0 || out_cols <= 0) throw InvalidArgument("resize_bilinear: output dimensions must be positive");
  if (src.size() == 0) throw InvalidArgument("resize_bilinear: empty source");
  if (out_rows == src.rows() && out_cols == src.cols()) return src;

  auto axis = [](Index i, Index n_out, Index n_in, Index& i0, Index& i1, double& t) {
    double s = (static_cast<double>(i) + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
    i0 = static_cast<Index>(std::floor(s));
    i1 = std::min(i0 + 1, n_in - 1);
    t = s - static_cast<double>(i0);
  };

  Plane<Scalar> out(out_rows, out_cols);
  for (Index i = 0; i < out_rows; ++i) {
    Index r0, r1;
    double tr;
    axis(i, out_rows, src.rows(), r0, r1, tr);
    for (Index j = 0; j < out_cols; ++j) {
      Index c0, c1;
      double tc;
      axis(j, out_cols, src.cols(), c0, c1, tc);
      const double top = (1.0 - tc) * src(r0, c0) + tc * src(r0, c1);
      const double bottom = (1.0 - tc) * src(r1, c0) + tc * src(r1, c1);
      out(i, j) = static_cast<Scalar>((1.0 - tr) * top + tr * bottom);
    }
  }
  return out;
}

template <typename Scalar>
Raster<Scalar> resize_bilinear(const Raster<Scalar>& src, Index out_rows, Index out_cols) {
  Raster<Scalar> out;
  out.channels.reserve(src.channels.size());
  for (const auto& p : src.channels) out.channels.push_back(resize_bilinear(p, out_rows, out_cols));
  return out;
}

}  // namespace sic
