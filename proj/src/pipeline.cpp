#include "sic/pipeline.hpp"

#include <cstdio>
#include <iostream>

#include "sic/binio.hpp"
#include "sic/io.hpp"

namespace sic {

namespace {

constexpr char kBatchMagic[4] = {'S', 'I', 'C', 'B'};
constexpr std::uint8_t kImageChannels = 2;
constexpr std::uint8_t kLabelChannels = 2;

void put_raster(binio::Writer& w, const Raster<float>& r) {
  for (Index i = 0; i < r.rows(); ++i) {
    for (Index j = 0; j < r.cols(); ++j) {
      for (Index c = 0; c < r.channel_count(); ++c) w.put<float>(r[c](i, j));
    }
  }
}

Raster<float> get_raster(binio::Reader& rd, Index rows, Index cols, Index channels) {
  Raster<float> r(rows, cols, channels);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      for (Index c = 0; c < channels; ++c) r[c](i, j) = rd.get<float>("batch record");
    }
  }
  return r;
}

}  // namespace

Sample build_sample(const CatalogEntry& entry, const Raster<float>& stored_image, const ConcentrationChart& chart,
                    Index out_h, Index out_w) {
  if (stored_image.channel_count() != 2) {
    throw InvalidArgument("entry '" + entry.id + "': image must have 2 channels");
  }
  const auto derived = derive_pass_direction(entry.footprint);
  const auto reconciliation = reconcile_pass_direction(entry.reported_direction(), derived);
  Sample s;
  s.image = resize_bilinear(correct_quicklook_orientation(stored_image, reconciliation), out_h, out_w);
  s.label = resample_chart_to_footprint(chart, entry.footprint, out_h, out_w).cast<float>();
  s.source_id = entry.id;
  return s;
}

Sample build_sample(const CatalogEntry& entry, const ConcentrationChart& chart, Index out_h, Index out_w,
                    const std::filesystem::path& base_dir) {
  Raster<float> image;
  try {
    image = io::load_image((base_dir / entry.image_path).string());
  } catch (const Error& e) {
    throw IoError("entry '" + entry.id + "': unreadable image: " + e.what());
  }
  return build_sample(entry, image, chart, out_h, out_w);
}

FilterResult variance_filter(std::vector<Sample> samples, double threshold) {
  if (threshold < 0.0) throw InvalidArgument("variance threshold must be non-negative");
  FilterResult result;
  for (auto& s : samples) {
    if (concentration_variance(s.label) >= threshold) {
      result.kept.push_back(std::move(s));
    } else {
      result.rejected.push_back(std::move(s));
    }
  }
  return result;
}

void smooth_label(Sample& sample) {
  for (auto& channel : sample.label.channels) channel = median_filter_5x5(channel);
}

Sample apply_transform(const Sample& sample, Dihedral t) {
  if (swaps_axes(t) && sample.rows() != sample.cols()) {
    throw InvalidArgument("sample '" + sample.source_id + "' is not square; rotations need square patches");
  }
  return {apply_dihedral(sample.image, t), apply_dihedral(sample.label, t), sample.source_id};
}

Dihedral draw_transform(Rng& rng) {
  return static_cast<Dihedral>(std::uniform_int_distribution<int>(0, kDihedralCount - 1)(rng));
}

Sample augment(const Sample& sample, Rng& rng) { return apply_transform(sample, draw_transform(rng)); }

std::vector<std::uint8_t> encode_batch(std::span<const Sample> samples) {
  if (samples.empty()) throw InvalidArgument("cannot encode an empty batch");
  const Index rows = samples.front().rows();
  const Index cols = samples.front().cols();
  if (samples.size() > 0xffff || rows > 0xffff || cols > 0xffff) throw InvalidArgument("batch dimensions exceed u16");
  binio::Writer w;
  w.put_bytes(std::string_view(kBatchMagic, 4));
  w.put<std::uint16_t>(kBatchVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(samples.size()));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(rows));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(cols));
  w.put<std::uint8_t>(kImageChannels);
  w.put<std::uint8_t>(kLabelChannels);
  for (const auto& s : samples) {
    if (s.image.rows() != rows || s.image.cols() != cols || s.label.rows() != rows || s.label.cols() != cols ||
        s.image.channel_count() != kImageChannels || s.label.channel_count() != kLabelChannels) {
      throw InvalidArgument("sample '" + s.source_id + "' does not match the batch shape");
    }
    put_raster(w, s.image);
    put_raster(w, s.label);
  }
  return std::move(w.bytes());
}

Batch decode_batch(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  binio::Reader rd(bytes);
  if (bytes.size() < 4 || rd.get_bytes(4, "magic") != std::string_view(kBatchMagic, 4)) {
    throw FormatError(FormatFault::BadMagic, "bad magic in batch '" + origin + "'");
  }
  const auto version = rd.get<std::uint16_t>("version");
  if (version != kBatchVersion) {
    throw FormatError(FormatFault::UnsupportedVersion,
                      "unsupported batch version " + std::to_string(version) + " in '" + origin + "'");
  }
  const auto batch_size = rd.get<std::uint16_t>("batch size");
  const auto rows = rd.get<std::uint16_t>("height");
  const auto cols = rd.get<std::uint16_t>("width");
  const auto image_ch = rd.get<std::uint8_t>("image channels");
  const auto label_ch = rd.get<std::uint8_t>("label channels");
  if (batch_size == 0 || rows == 0 || cols == 0 || image_ch != kImageChannels || label_ch != kLabelChannels) {
    throw FormatError(FormatFault::DimensionMismatch, "dimension mismatch in batch header of '" + origin + "'");
  }
  const std::size_t record = static_cast<std::size_t>(rows) * cols * (image_ch + label_ch) * sizeof(float);
  const std::size_t expected = record * batch_size;
  if (rd.remaining() < expected) {
    throw FormatError(FormatFault::TruncatedPayload,
                      "truncated payload in batch '" + origin + "': header implies " + std::to_string(batch_size) +
                          " samples, payload holds " + std::to_string(rd.remaining() / record));
  }
  if (rd.remaining() > expected) {
    throw FormatError(FormatFault::TrailingData, "trailing data after batch payload in '" + origin + "'");
  }
  Batch batch;
  batch.batch_size = batch_size;
  batch.samples.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    Sample s;
    s.image = get_raster(rd, rows, cols, image_ch);
    s.label = get_raster(rd, rows, cols, label_ch);
    s.source_id = origin + "#" + std::to_string(k);
    batch.samples.push_back(std::move(s));
  }
  return batch;
}

PackResult pack_batches(const std::vector<Sample>& samples, std::size_t batch_size, const std::filesystem::path& out_dir) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  // Stale batches from an earlier, larger run would otherwise be picked up on load.
  for (const auto& e : std::filesystem::directory_iterator(out_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".sicb") std::filesystem::remove(e.path());
  }

  PackResult result;
  const std::size_t n_full = samples.size() / batch_size;
  result.dropped = samples.size() - n_full * batch_size;
  for (std::size_t b = 0; b < n_full; ++b) {
    char name[32];
    std::snprintf(name, sizeof name, "batch_%05zu.sicb", b);
    const auto path = out_dir / name;
    binio::write_file(path.string(),
                      encode_batch(std::span<const Sample>(samples).subspan(b * batch_size, batch_size)));
    result.files.push_back(path);
  }
  if (result.dropped > 0) {
    std::cerr << "warning: dropping " << result.dropped << " sample(s) that do not fill a batch of " << batch_size
              << "\n";
  }
  return result;
}

Batch load_batch(const std::filesystem::path& path) {
  return decode_batch(binio::read_file(path.string()), path.string());
}

std::vector<Sample> load_batch_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".sicb") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Sample> samples;
  for (const auto& f : files) {
    auto batch = load_batch(f);
    for (auto& s : batch.samples) samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace sic
