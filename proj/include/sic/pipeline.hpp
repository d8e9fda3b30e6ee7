#pragma once

// Dataset construction: footprint labels, variance filtering, median
// smoothing, dihedral augmentation and single-file batch packing.

#include <algorithm>
#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sic/geogrid.hpp"
#include "sic/raster.hpp"
#include "sic/rng.hpp"
#include "sic/synth.hpp"

namespace sic {

/// Image/label pair. Image channels: co-pol, cross-pol. Label: concentration, uncertainty.
struct Sample {
  Raster<float> image;
  Raster<float> label;
  std::string source_id;

  Index rows() const { return image.rows(); }
  Index cols() const { return image.cols(); }
};

struct Batch {
  std::vector<Sample> samples;
  std::size_t batch_size = 0;
};

Sample build_sample(const CatalogEntry& entry, const Raster<float>& stored_image, const ConcentrationChart& chart,
                    Index out_h, Index out_w);
/// Loads the entry image from `base_dir / entry.image_path`; load failures are reported with the entry id.
Sample build_sample(const CatalogEntry& entry, const ConcentrationChart& chart, Index out_h, Index out_w,
                    const std::filesystem::path& base_dir);

/// Population variance of the concentration channel.
template <typename Scalar>
double concentration_variance(const Raster<Scalar>& label) {
  const auto c = label[0].template cast<double>();
  const double mean = c.mean();
  return (c - mean).square().mean();
}

struct FilterResult {
  std::vector<Sample> kept;
  std::vector<Sample> rejected;
};

/// Keeps samples whose label variance is >= threshold; order is preserved in both parts.
FilterResult variance_filter(std::vector<Sample> samples, double threshold);

/// 5x5 median with replicate padding at the borders.
template <typename Scalar>
Plane<Scalar> median_filter_5x5(const Plane<Scalar>& in) {
  const Index rows = in.rows();
  const Index cols = in.cols();
  Plane<Scalar> out(rows, cols);
  std::array<Scalar, 25> window{};
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      std::size_t k = 0;
      for (Index di = -2; di <= 2; ++di) {
        const Index r = std::clamp<Index>(i + di, 0, rows - 1);
        for (Index dj = -2; dj <= 2; ++dj) window[k++] = in(r, std::clamp<Index>(j + dj, 0, cols - 1));
      }
      std::nth_element(window.begin(), window.begin() + 12, window.end());
      out(i, j) = window[12];
    }
  }
  return out;
}

/// Median-filters both label channels in place.
void smooth_label(Sample& sample);

/// Applies one dihedral transform to image and label alike.
Sample apply_transform(const Sample& sample, Dihedral t);

/// Draws one of the eight transforms uniformly and applies it. Throws
/// InvalidArgument if an axis-swapping transform is drawn for a non-square sample.
Sample augment(const Sample& sample, Rng& rng);
Dihedral draw_transform(Rng& rng);

// Batch file: "SICB" | version u16 | batch_size u16 | H u16 | W u16 |
// image channels u8 | label channels u8 | records (image then label, H x W x C row-major f32).
inline constexpr std::uint16_t kBatchVersion = 1;

struct PackResult {
  std::vector<std::filesystem::path> files;
  std::size_t dropped = 0;  // samples in the discarded partial batch
};

/// Writes floor(n / batch_size) batch files; a trailing partial batch is dropped with a warning on stderr.
PackResult pack_batches(const std::vector<Sample>& samples, std::size_t batch_size, const std::filesystem::path& out_dir);

std::vector<std::uint8_t> encode_batch(std::span<const Sample> samples);
Batch decode_batch(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");
Batch load_batch(const std::filesystem::path& path);

/// All batches in a directory (sorted by file name), flattened into samples.
std::vector<Sample> load_batch_directory(const std::filesystem::path& dir);

}  // namespace sic
