#include "sic/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sic/binio.hpp"

namespace sic {

namespace binio {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace binio

namespace io {

namespace {

constexpr char kRasterMagic[4] = {'S', 'I', 'C', 'R'};
constexpr std::uint16_t kRasterVersion = 1;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError(FormatFault::Malformed, std::string("malformed ") + what + " '" + text + "'");
  }
}

std::vector<std::string> data_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct RasterHeader {
  std::string tag;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint8_t channels = 0;
  std::uint8_t value_bytes = 4;
  std::optional<GridGeometry> grid;
  std::optional<Date> date;
};

template <typename Scalar>
std::vector<std::uint8_t> encode_raster(const RasterHeader& h, const Raster<Scalar>& r) {
  binio::Writer w;
  w.put_bytes(std::string_view(kRasterMagic, 4));
  w.put<std::uint16_t>(kRasterVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(h.tag.size()));
  w.put_bytes(h.tag);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.cols()));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(r.channel_count()));
  w.put<std::uint8_t>(sizeof(Scalar));
  w.put<std::uint8_t>(h.grid ? 1 : 0);
  if (h.grid) {
    w.put<double>(h.grid->origin.x);
    w.put<double>(h.grid->origin.y);
    w.put<double>(h.grid->spacing);
    w.put<std::uint8_t>(h.grid->hemisphere == Hemisphere::North ? 0 : 1);
    w.put<std::uint8_t>(h.date ? 1 : 0);
    w.put<std::int32_t>(h.date ? static_cast<std::int32_t>(h.date->time_since_epoch().count()) : 0);
  }
  for (Index i = 0; i < r.rows(); ++i) {
    for (Index j = 0; j < r.cols(); ++j) {
      for (Index c = 0; c < r.channel_count(); ++c) w.put<Scalar>(r[c](i, j));
    }
  }
  return std::move(w.bytes());
}

template <typename Scalar>
Raster<Scalar> decode_raster(const std::vector<std::uint8_t>& bytes, const std::string& path, RasterHeader& h) {
  binio::Reader rd(bytes);
  if (rd.remaining() < 4 || rd.get_bytes(4, "magic") != std::string_view(kRasterMagic, 4)) {
    throw FormatError(FormatFault::BadMagic, "bad magic in raster '" + path + "'");
  }
  if (rd.get<std::uint16_t>("version") != kRasterVersion) {
    throw FormatError(FormatFault::UnsupportedVersion, "unsupported raster version in '" + path + "'");
  }
  h.tag = rd.get_bytes(rd.get<std::uint8_t>("tag length"), "tag");
  h.rows = rd.get<std::uint32_t>("rows");
  h.cols = rd.get<std::uint32_t>("cols");
  h.channels = rd.get<std::uint8_t>("channels");
  h.value_bytes = rd.get<std::uint8_t>("value size");
  if (rd.get<std::uint8_t>("grid flag") != 0) {
    GridGeometry g;
    g.origin.x = rd.get<double>("origin");
    g.origin.y = rd.get<double>("origin");
    g.spacing = rd.get<double>("spacing");
    g.hemisphere = rd.get<std::uint8_t>("hemisphere") == 0 ? Hemisphere::North : Hemisphere::South;
    const bool has_date = rd.get<std::uint8_t>("date flag") != 0;
    const auto days = rd.get<std::int32_t>("date");
    if (has_date) h.date = Date(std::chrono::days(days));
    h.grid = g;
  }
  if (h.value_bytes != 4 && h.value_bytes != 8) {
    throw FormatError(FormatFault::Malformed, "unsupported value size in '" + path + "'");
  }
  const std::size_t count = static_cast<std::size_t>(h.rows) * h.cols * h.channels;
  if (rd.remaining() < count * h.value_bytes) {
    throw FormatError(FormatFault::TruncatedPayload, "truncated payload in raster '" + path + "'");
  }
  if (rd.remaining() > count * h.value_bytes) {
    throw FormatError(FormatFault::TrailingData, "trailing data in raster '" + path + "'");
  }
  Raster<Scalar> r(h.rows, h.cols, h.channels);
  for (Index i = 0; i < static_cast<Index>(h.rows); ++i) {
    for (Index j = 0; j < static_cast<Index>(h.cols); ++j) {
      for (Index c = 0; c < static_cast<Index>(h.channels); ++c) {
        r[c](i, j) = h.value_bytes == 4 ? static_cast<Scalar>(rd.get<float>("values"))
                                        : static_cast<Scalar>(rd.get<double>("values"));
      }
    }
  }
  return r;
}

void expect_tag(const RasterHeader& h, const std::string& tag, const std::string& path) {
  if (h.tag != tag) {
    throw FormatError(FormatFault::Malformed, "raster '" + path + "' has tag '" + h.tag + "', expected '" + tag + "'");
  }
}

std::uint16_t to_gray(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string manifest_line(const CatalogEntry& e) {
  std::string line = e.id + '\t' + format_timestamp(e.timestamp);
  for (const auto& c : e.footprint.corners) line += '\t' + format_double(c.lat) + '\t' + format_double(c.lon);
  line += '\t' + to_string(e.footprint.reported_direction) + '\t' + e.image_path;
  return line;
}

CatalogEntry parse_manifest_line(const std::string& line) {
  const auto f = split(line, '\t');
  if (f.size() != 12) {
    throw FormatError(FormatFault::Malformed, "manifest line has " + std::to_string(f.size()) + " fields, expected 12");
  }
  CatalogEntry e;
  e.id = f[0];
  try {
    e.timestamp = parse_timestamp(f[1]);
    for (std::size_t k = 0; k < 4; ++k) {
      e.footprint.corners[k] = GeoPoint::make(parse_double(f[2 + 2 * k], "latitude"), parse_double(f[3 + 2 * k], "longitude"));
    }
    e.footprint.reported_direction = parse_pass_direction(f[10]);
  } catch (const InvalidArgument& ex) {
    throw FormatError(FormatFault::Malformed, std::string("manifest entry '") + e.id + "': " + ex.what());
  } catch (const GeometryError& ex) {
    throw FormatError(FormatFault::Malformed, std::string("manifest entry '") + e.id + "': " + ex.what());
  }
  e.image_path = f[11];
  return e;
}

void write_manifest(const std::string& path, const std::vector<CatalogEntry>& entries) {
  std::string text = "# sic-catalog v1\n";
  for (const auto& e : entries) text += manifest_line(e) + '\n';
  write_text(path, text);
}

std::vector<CatalogEntry> read_manifest(const std::string& path) {
  std::vector<CatalogEntry> entries;
  for (const auto& line : data_lines(path)) entries.push_back(parse_manifest_line(line));
  return entries;
}

void write_truth_flags(const std::string& path, const std::vector<CatalogEntry>& entries) {
  std::string text = "# sic-catalog-truth v1\n";
  for (const auto& e : entries) {
    const PassDirection truth = e.mislabeled ? opposite(e.reported_direction()) : e.reported_direction();
    text += e.id + '\t' + (e.mislabeled ? "1" : "0") + '\t' + to_string(truth) + '\n';
  }
  write_text(path, text);
}

std::vector<TruthFlag> read_truth_flags(const std::string& path) {
  std::vector<TruthFlag> flags;
  for (const auto& line : data_lines(path)) {
    const auto f = split(line, '\t');
    if (f.size() != 3) throw FormatError(FormatFault::Malformed, "malformed truth sidecar line in '" + path + "'");
    flags.push_back({f[0], f[1] == "1", parse_pass_direction(f[2])});
  }
  return flags;
}

void save_image(const std::string& path, const Raster<float>& image) {
  RasterHeader h;
  h.tag = "image";
  binio::write_file(path, encode_raster(h, image));
}

Raster<float> load_image(const std::string& path) {
  RasterHeader h;
  auto r = decode_raster<float>(binio::read_file(path), path, h);
  expect_tag(h, "image", path);
  return r;
}

void save_chart(const std::string& path, const ConcentrationChart& chart) {
  RasterHeader h;
  h.tag = "chart";
  h.grid = chart.grid;
  h.date = chart.date;
  Raster<double> r(std::vector<Plane<double>>{chart.concentration, chart.uncertainty});
  binio::write_file(path, encode_raster(h, r));
}

ConcentrationChart load_chart(const std::string& path) {
  RasterHeader h;
  auto r = decode_raster<double>(binio::read_file(path), path, h);
  expect_tag(h, "chart", path);
  if (r.channel_count() != 2 || !h.grid) {
    throw FormatError(FormatFault::DimensionMismatch, "chart '" + path + "' needs 2 channels and a grid");
  }
  ConcentrationChart chart;
  chart.concentration = r[0];
  chart.uncertainty = r[1];
  chart.grid = *h.grid;
  chart.date = h.date;
  return chart;
}

void save_truth(const std::string& path, const SceneTruth& truth) {
  RasterHeader h;
  h.tag = "truth";
  h.grid = truth.grid;
  h.date = utc_date(truth.timestamp);
  Raster<double> r(std::vector<Plane<double>>{truth.field});
  binio::write_file(path, encode_raster(h, r));
}

SceneTruth load_truth(const std::string& path) {
  RasterHeader h;
  auto r = decode_raster<double>(binio::read_file(path), path, h);
  expect_tag(h, "truth", path);
  if (r.channel_count() != 1 || !h.grid) {
    throw FormatError(FormatFault::DimensionMismatch, "truth '" + path + "' needs 1 channel and a grid");
  }
  SceneTruth t;
  t.field = r[0];
  t.grid = *h.grid;
  t.footprint = grid_footprint(t.grid, t.field.rows(), t.field.cols());
  if (h.date) t.timestamp = *h.date;
  return t;
}

void write_observations(const std::string& path, const std::vector<InSituObservation>& obs) {
  std::string text = "# sic-insitu v1\n";
  for (const auto& o : obs) {
    text += format_double(o.location.lat) + '\t' + format_double(o.location.lon) + '\t' + format_timestamp(o.timestamp) +
            '\t' + format_double(o.observed_concentration) + '\n';
  }
  write_text(path, text);
}

std::vector<InSituObservation> read_observations(const std::string& path) {
  std::vector<InSituObservation> out;
  for (const auto& line : data_lines(path)) {
    const auto f = split(line, '\t');
    if (f.size() != 4) throw FormatError(FormatFault::Malformed, "malformed observation line in '" + path + "'");
    InSituObservation o;
    o.location = GeoPoint::make(parse_double(f[0], "latitude"), parse_double(f[1], "longitude"));
    o.timestamp = parse_timestamp(f[2]);
    o.observed_concentration = parse_double(f[3], "concentration");
    out.push_back(o);
  }
  return out;
}

void write_pgm16(const std::string& path, const Plane<double>& values) {
  const std::string header =
      "P5\n" + std::to_string(values.cols()) + " " + std::to_string(values.rows()) + "\n65535\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + 2 * static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      const std::uint16_t g = to_gray(values(i, j));
      bytes.push_back(static_cast<std::uint8_t>(g >> 8));  // PGM samples are big-endian
      bytes.push_back(static_cast<std::uint8_t>(g & 0xff));
    }
  }
  binio::write_file(path, bytes);
}

Plane<double> read_pgm16(const std::string& path) {
  const auto bytes = binio::read_file(path);
  std::string head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 64)));
  std::istringstream ss(head);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  ss >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 65535 || w <= 0 || h <= 0) {
    throw FormatError(FormatFault::BadMagic, "not a 16-bit PGM: '" + path + "'");
  }
  const auto offset = static_cast<std::size_t>(ss.tellg()) + 1;
  if (bytes.size() != offset + 2 * static_cast<std::size_t>(w) * h) {
    throw FormatError(FormatFault::TruncatedPayload, "PGM payload size mismatch in '" + path + "'");
  }
  Plane<double> out(h, w);
  std::size_t k = offset;
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j, k += 2) out(i, j) = ((bytes[k] << 8) | bytes[k + 1]) / 65535.0;
  }
  return out;
}

}  // namespace io
}  // namespace sic
