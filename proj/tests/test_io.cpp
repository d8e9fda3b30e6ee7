#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sic/binio.hpp"
#include "sic/io.hpp"
#include "sic/timeutil.hpp"

using namespace sic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sic_test_io";
  fs::create_directories(dir);
  return dir / name;
}

CatalogRequest request() {
  CatalogRequest req;
  req.seed = 12;
  req.n_entries = 25;
  req.region.rows = req.region.cols = 160;
  req.region.grid = grid_centered_on(GeoPoint::make(72.0, -150.0), Hemisphere::North, 160, 160, 1.0);
  req.first_day = parse_date("2020-01-30");
  req.last_day = parse_date("2020-02-02");
  req.mislabel_rate = 0.4;
  req.footprint_px = 24;
  return req;
}

}  // namespace

TEST(Time, ParseAndFormat) {
  const auto t = parse_timestamp("2019-07-04T05:06:07Z");
  EXPECT_EQ(format_timestamp(t), "2019-07-04T05:06:07Z");
  EXPECT_EQ(format_date(utc_date(t)), "2019-07-04");
  EXPECT_EQ(format_timestamp(parse_timestamp("2019-07-04")), "2019-07-04T00:00:00Z");
  EXPECT_THROW(parse_timestamp("2019-13-04"), InvalidArgument);
  EXPECT_THROW(parse_timestamp("yesterday"), InvalidArgument);
}

TEST(Manifest, RoundTripIsExact) {
  const auto cat = gen_catalog(request());
  const auto path = scratch("catalog.tsv").string();
  io::write_manifest(path, cat.entries);
  const auto back = io::read_manifest(path);
  ASSERT_EQ(back.size(), cat.entries.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = cat.entries[i];
    const auto& b = back[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.timestamp, b.timestamp);
    EXPECT_EQ(a.image_path, b.image_path);
    EXPECT_EQ(a.reported_direction(), b.reported_direction());
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(a.footprint.corners[k].lat, b.footprint.corners[k].lat);
      EXPECT_EQ(a.footprint.corners[k].lon, b.footprint.corners[k].lon);
    }
    EXPECT_FALSE(b.mislabeled);
  }
}

TEST(Manifest, LineLayout) {
  CatalogEntry e;
  e.id = "X1";
  e.timestamp = parse_timestamp("2019-07-01T12:00:00Z");
  e.footprint.corners = {GeoPoint::make(-60, 1), GeoPoint::make(-60, 2), GeoPoint::make(-61, 2), GeoPoint::make(-61, 1)};
  e.footprint.reported_direction = PassDirection::Descending;
  e.image_path = "images/X1.sicr";
  EXPECT_EQ(io::manifest_line(e), "X1\t2019-07-01T12:00:00Z\t-60\t1\t-60\t2\t-61\t2\t-61\t1\tDESCENDING\timages/X1.sicr");
}

TEST(Manifest, MalformedLinesAreFormatErrors) {
  EXPECT_THROW(io::parse_manifest_line("a\tb"), FormatError);
  EXPECT_THROW(io::parse_manifest_line("X\t2019-07-01\t-60\t1\t-60\t2\t-61\t2\t-61\t1\tSIDEWAYS\tp"), FormatError);
  EXPECT_THROW(io::parse_manifest_line("X\t2019-07-01\tabc\t1\t-60\t2\t-61\t2\t-61\t1\tASCENDING\tp"), FormatError);
  EXPECT_THROW(io::read_manifest(scratch("does-not-exist.tsv").string()), IoError);
}

TEST(TruthFlags, RoundTrip) {
  const auto cat = gen_catalog(request());
  const auto path = scratch("truth.tsv").string();
  io::write_truth_flags(path, cat.entries);
  const auto flags = io::read_truth_flags(path);
  ASSERT_EQ(flags.size(), cat.entries.size());
  for (std::size_t i = 0; i < flags.size(); ++i) {
    EXPECT_EQ(flags[i].id, cat.entries[i].id);
    EXPECT_EQ(flags[i].mislabeled, cat.entries[i].mislabeled);
    EXPECT_EQ(flags[i].true_direction, derive_pass_direction(cat.entries[i].footprint));
  }
}

TEST(RasterContainer, ImageChartTruthRoundTrip) {
  const auto cat = gen_catalog(request());
  const auto img_path = scratch("img.sicr").string();
  io::save_image(img_path, cat.images[3]);
  EXPECT_TRUE(io::load_image(img_path) == cat.images[3]);

  const auto chart = gen_pmw_chart(cat.scenes[1], 8, 4);
  const auto chart_path = scratch("chart.sicr").string();
  io::save_chart(chart_path, chart);
  const auto c2 = io::load_chart(chart_path);
  EXPECT_TRUE((c2.concentration == chart.concentration).all());
  EXPECT_TRUE((c2.uncertainty == chart.uncertainty).all());
  EXPECT_EQ(c2.grid.origin.x, chart.grid.origin.x);
  EXPECT_EQ(c2.grid.origin.y, chart.grid.origin.y);
  EXPECT_EQ(c2.grid.spacing, chart.grid.spacing);
  EXPECT_EQ(c2.grid.hemisphere, Hemisphere::North);
  ASSERT_TRUE(c2.date.has_value());
  EXPECT_EQ(*c2.date, *chart.date);

  const auto truth_path = scratch("truth.sicr").string();
  io::save_truth(truth_path, cat.scenes[2]);
  const auto t2 = io::load_truth(truth_path);
  EXPECT_TRUE((t2.field == cat.scenes[2].field).all());
  EXPECT_EQ(utc_date(t2.timestamp), utc_date(cat.scenes[2].timestamp));
}

TEST(RasterContainer, ValidationFaults) {
  Raster<float> img(4, 5, 2, 0.25f);
  const auto path = scratch("v.sicr").string();
  io::save_image(path, img);
  auto bytes = binio::read_file(path);

  auto expect_fault = [&](std::vector<std::uint8_t> b, FormatFault fault) {
    const auto p = scratch("v_bad.sicr").string();
    binio::write_file(p, b);
    try {
      io::load_image(p);
      ADD_FAILURE() << "expected FormatError";
    } catch (const FormatError& e) {
      EXPECT_EQ(e.fault(), fault) << e.what();
    }
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_fault(bad_magic, FormatFault::BadMagic);
  auto bad_version = bytes;
  bad_version[4] = 99;
  expect_fault(bad_version, FormatFault::UnsupportedVersion);
  auto truncated = bytes;
  truncated.pop_back();
  expect_fault(truncated, FormatFault::TruncatedPayload);
  auto trailing = bytes;
  trailing.push_back(0);
  expect_fault(trailing, FormatFault::TrailingData);
  // An image container is not a chart.
  EXPECT_THROW(io::load_chart(path), FormatError);
}

TEST(Observations, RoundTrip) {
  std::vector<InSituObservation> obs(3);
  obs[0] = {GeoPoint::make(-61.5, 2.0), parse_timestamp("2019-07-10T08:00:00Z"), 0.35};
  obs[1] = {GeoPoint::make(-62.25, -1.125), parse_timestamp("2019-07-11"), 1.0};
  obs[2] = {GeoPoint::make(-60.0, 179.5), parse_timestamp("2019-07-12T23:59:59Z"), 0.1 + 0.2};
  const auto path = scratch("obs.tsv").string();
  io::write_observations(path, obs);
  const auto back = io::read_observations(path);
  ASSERT_EQ(back.size(), obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    EXPECT_EQ(back[i].location.lat, obs[i].location.lat);
    EXPECT_EQ(back[i].location.lon, obs[i].location.lon);
    EXPECT_EQ(back[i].timestamp, obs[i].timestamp);
    EXPECT_EQ(back[i].observed_concentration, obs[i].observed_concentration);
  }
}

TEST(Pgm, HeaderAndBigEndianGrayLevels) {
  Plane<double> v(1, 3);
  v << 0.0, 0.5, 1.0;
  const auto path = scratch("p.pgm").string();
  io::write_pgm16(path, v);
  const auto bytes = binio::read_file(path);
  const std::string header = "P5\n3 1\n65535\n";
  ASSERT_EQ(bytes.size(), header.size() + 6);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + static_cast<long>(header.size())), header);
  const std::size_t o = header.size();
  EXPECT_EQ(bytes[o + 0], 0x00);
  EXPECT_EQ(bytes[o + 1], 0x00);
  // round(0.5 * 65535) = 32768
  EXPECT_EQ(bytes[o + 2], 0x80);
  EXPECT_EQ(bytes[o + 3], 0x00);
  EXPECT_EQ(bytes[o + 4], 0xFF);
  EXPECT_EQ(bytes[o + 5], 0xFF);
  const auto back = io::read_pgm16(path);
  EXPECT_EQ(back(0, 2), 1.0);
  EXPECT_NEAR(back(0, 1), 0.5, 1.0 / 65535.0);
}

TEST(Binio, ReaderReportsTruncation) {
  std::vector<std::uint8_t> b{1, 2, 3};
  binio::Reader r(b);
  EXPECT_EQ(r.get<std::uint16_t>("x"), 0x0201);
  try {
    r.get<std::uint32_t>("y");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.fault(), FormatFault::TruncatedPayload);
  }
}
