#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "sic/binio.hpp"
#include "sic/evalserve.hpp"
#include "sic/io.hpp"

using namespace sic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sic_test_evalserve" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CatalogEntry square_entry(const std::string& id, GeoPoint center, double half_km, const std::string& when) {
  const Hemisphere h = center.lat < 0 ? Hemisphere::South : Hemisphere::North;
  const PlanePoint c = stereo_forward(center, h);
  CatalogEntry e;
  e.id = id;
  e.timestamp = parse_timestamp(when);
  const PlanePoint pts[4] = {{c.x - half_km, c.y + half_km}, {c.x + half_km, c.y + half_km},
                             {c.x + half_km, c.y - half_km}, {c.x - half_km, c.y - half_km}};
  for (int k = 0; k < 4; ++k) e.footprint.corners[static_cast<std::size_t>(k)] = stereo_inverse(pts[k], h);
  e.footprint.reported_direction = derive_pass_direction(e.footprint);
  return e;
}

SearchQuery query(GeoPoint p, const std::string& from, const std::string& to, std::size_t max = 10) {
  SearchQuery q;
  q.location = p;
  q.start = parse_date(from);
  q.end = parse_date(to);
  q.max_results = max;
  return q;
}

EpochRecord record(int epoch, const std::string& stage, bool start, double v) {
  EpochRecord r;
  r.epoch = epoch;
  r.stage = stage;
  r.stage_start = start;
  r.train = {v, v * 1.1, v * v, v * v * 1.2};
  r.test = {v / 3.0, v / 7.0, v * 0.01, std::sqrt(v)};
  return r;
}

}  // namespace

TEST(Search, CentroidHitAndOutsideMiss) {
  const auto e = square_entry("A", GeoPoint::make(-61.5, 2.0), 20, "2019-07-10T06:00:00Z");
  const auto hits = search_catalog({e}, query(GeoPoint::make(-61.5, 2.0), "2019-07-01", "2019-07-31"));
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, "A");
  EXPECT_TRUE(search_catalog({e}, query(GeoPoint::make(-64.0, 2.0), "2019-07-01", "2019-07-31")).empty());
  EXPECT_TRUE(search_catalog({e}, query(GeoPoint::make(-61.5, 2.0), "2019-07-11", "2019-07-31")).empty());
  // The northern mirror point does not match a southern footprint.
  EXPECT_TRUE(search_catalog({e}, query(GeoPoint::make(61.5, 2.0), "2019-07-01", "2019-07-31")).empty());
  EXPECT_TRUE(search_catalog({}, query(GeoPoint::make(-61.5, 2.0), "2019-07-01", "2019-07-31")).empty());
}

TEST(Search, NewestFirstAndTruncated) {
  const GeoPoint p = GeoPoint::make(70.0, -40.0);
  std::vector<CatalogEntry> cat{square_entry("old", p, 10, "2020-03-01T00:00:00Z"),
                                square_entry("new", p, 12, "2020-03-05T00:00:00Z"),
                                square_entry("mid", p, 14, "2020-03-03T00:00:00Z")};
  const auto hits = search_catalog(cat, query(p, "2020-03-01", "2020-03-31", 2));
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].id, "new");
  EXPECT_EQ(hits[1].id, "mid");
}

TEST(Search, QueryValidation) {
  const GeoPoint p = GeoPoint::make(70.0, -40.0);
  EXPECT_THROW(search_catalog({}, query(p, "2020-03-02", "2020-03-01")), InvalidArgument);
  EXPECT_THROW(search_catalog({}, query(p, "2020-03-01", "2020-03-02", 0)), InvalidArgument);
}

TEST(Search, MatchesBruteForceScanOnRandomCatalogs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lat(-75, -60), lon(-180, 180), half(5, 200);
  std::uniform_int_distribution<int> day(1, 28), hour(0, 23);
  for (int t = 0; t < 20; ++t) {
    std::vector<CatalogEntry> cat;
    for (int i = 0; i < 60; ++i) {
      char when[32];
      std::snprintf(when, sizeof when, "2019-02-%02dT%02d:00:00Z", day(rng), hour(rng));
      cat.push_back(square_entry("E" + std::to_string(i), GeoPoint::make(lat(rng), lon(rng)), half(rng), when));
    }
    for (int k = 0; k < 10; ++k) {
      const GeoPoint p = GeoPoint::make(lat(rng), lon(rng));
      const auto q = query(p, "2019-02-05", "2019-02-20", 1000);
      std::vector<std::string> expected;
      const PlanePoint pp = stereo_forward(p, Hemisphere::South);
      for (const auto& e : cat) {
        const Date d = utc_date(e.timestamp);
        if (d < q.start || d > q.end) continue;
        if (quad_contains(project_corners(e.footprint, Hemisphere::South), pp)) expected.push_back(e.id);
      }
      const auto hits = search_catalog(cat, q);
      ASSERT_EQ(hits.size(), expected.size());
      for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_NE(std::find(expected.begin(), expected.end(), hits[i].id), expected.end());
        if (i > 0) EXPECT_GE(hits[i - 1].timestamp, hits[i].timestamp);
      }
    }
  }
}

namespace {

struct ReportFixture {
  CatalogEntry entry;
  Raster<float> image;
  ConcentrationChart chart;
};

ReportFixture report_fixture() {
  ReportFixture f;
  f.entry = square_entry("R1", GeoPoint::make(-65.0, 10.0), 8, "2019-07-02T10:00:00Z");
  f.entry.image_path = "images/R1.sicr";
  f.image = Raster<float>(8, 8, 2);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) {
      f.image[0](i, j) = static_cast<float>(i) / 8.0f;
      f.image[1](i, j) = static_cast<float>(j) / 16.0f;
    }
  f.chart.grid = grid_centered_on(GeoPoint::make(-65.0, 10.0), Hemisphere::South, 10, 10, 5.0);
  f.chart.concentration = Plane<double>::Constant(10, 10, 0.5);
  f.chart.uncertainty = Plane<double>::Constant(10, 10, 0.2);
  f.chart.date = parse_date("2019-07-02");
  return f;
}

nn::Model half_model() {
  nn::ModelConfig c;
  c.family = nn::Family::Fcnn;
  c.layers_or_blocks = 1;
  c.initial_filters = 2;
  auto m = nn::Model::build(c, 1);
  for (auto& l : m.layers()) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return m;
}

}  // namespace

TEST(Report, ZeroModelsWritesImageAndLabelOnly) {
  const auto f = report_fixture();
  const auto out = scratch("zero");
  const auto r = comparison_report(f.entry, f.image, {}, f.chart, out, 6, 6);
  EXPECT_TRUE(r.rows.empty());
  std::vector<std::string> names;
  for (const auto& p : fs::directory_iterator(r.dir)) names.push_back(p.path().filename().string());
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"image_ch0.pgm", "image_ch1.pgm", "label_conc.pgm", "label_unc.pgm",
                                             "metrics.csv"}));
  const auto label = io::read_pgm16((r.dir / "label_conc.pgm").string());
  EXPECT_EQ(label.rows(), 6);
  EXPECT_NEAR(label(3, 3), 0.5, 1.0 / 65535);
}

TEST(Report, PerfectModelRowsAreZeroAndOrderIsKept) {
  const auto f = report_fixture();
  const auto perfect = half_model();
  nn::ModelConfig small;
  small.family = nn::Family::Fcnn;
  small.layers_or_blocks = 1;
  small.initial_filters = 2;
  const auto other = nn::Model::build(small, 3);
  const auto out = scratch("two");
  const auto r = comparison_report(f.entry, f.image, {{"zeta", &perfect}, {"alpha", &other}}, f.chart, out, 6, 6);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].name, "zeta");
  EXPECT_EQ(r.rows[1].name, "alpha");
  EXPECT_EQ(r.rows[0].metrics, Metrics{});
  EXPECT_GT(r.rows[1].metrics.mae, 0.0);
  EXPECT_TRUE(fs::exists(r.dir / "pred_zeta.pgm"));
  EXPECT_TRUE(fs::exists(r.dir / "pred_alpha.pgm"));
  const auto bytes = binio::read_file((r.dir / "metrics.csv").string());
  const std::string text(bytes.begin(), bytes.end());
  EXPECT_NE(text.find("model,weighted_mae,mae,weighted_mse,mse\nzeta,0,0,0,0\nalpha,"), std::string::npos) << text;
}

TEST(Report, RerunIsByteIdentical) {
  const auto f = report_fixture();
  const auto m = half_model();
  const auto a = comparison_report(f.entry, f.image, {{"m", &m}}, f.chart, scratch("a"), 6, 6);
  const auto b = comparison_report(f.entry, f.image, {{"m", &m}}, f.chart, scratch("b"), 6, 6);
  for (const auto& p : fs::directory_iterator(a.dir)) {
    EXPECT_EQ(binio::read_file(p.path().string()), binio::read_file((b.dir / p.path().filename()).string()))
        << p.path().filename();
  }
}

TEST(Report, ErrorsPropagate) {
  auto f = report_fixture();
  const auto m = half_model();
  EXPECT_THROW(comparison_report(f.entry, f.image, {{"a/b", &m}}, f.chart, scratch("bad"), 6, 6), InvalidArgument);
  f.chart.grid = grid_centered_on(GeoPoint::make(-75.0, 10.0), Hemisphere::South, 10, 10, 5.0);
  EXPECT_THROW(comparison_report(f.entry, f.image, {}, f.chart, scratch("bad"), 6, 6), GeometryError);
}

namespace {

struct BiasScene {
  SceneTruth truth;
  ConcentrationChart chart;
};

BiasScene offset_scene(double offset) {
  TruthOptions opt;
  opt.rows = opt.cols = 40;
  opt.grid = grid_centered_on(GeoPoint::make(-62.0, 30.0), Hemisphere::South, 40, 40, 2.0);
  opt.timestamp = parse_timestamp("2019-07-15T12:00:00Z");
  BiasScene s;
  s.truth = gen_truth_field(3, opt);
  s.truth.field = 0.15 + 0.7 * s.truth.field;
  s.chart.grid = s.truth.grid;
  s.chart.concentration = s.truth.field + offset;
  s.chart.uncertainty = Plane<double>::Constant(40, 40, 0.1);
  s.chart.date = utc_date(s.truth.timestamp);
  return s;
}

}  // namespace

TEST(InSitu, EqualObservationsGiveZeroBias) {
  const auto s = offset_scene(0.0);
  const auto r = insitu_compare(gen_insitu_observations(1, s.truth, 200, 0.0), s.chart);
  EXPECT_EQ(r.summary.count, 200u);
  EXPECT_LT(std::abs(r.summary.mean_bias), 1e-12);
  EXPECT_LT(r.summary.mean_absolute_error, 1e-12);
}

TEST(InSitu, ConstantOffsetIsRecovered) {
  const auto s = offset_scene(0.1);
  const auto r = insitu_compare(gen_insitu_observations(2, s.truth, 500, 0.0), s.chart);
  EXPECT_NEAR(r.summary.mean_bias, 0.1, 1e-12);
  EXPECT_LT(r.summary.error_sd, 1e-12);
}

TEST(InSitu, SkipsOutsideAndOtherDays) {
  const auto s = offset_scene(0.0);
  auto obs = gen_insitu_observations(3, s.truth, 7, 0.0);
  for (auto& o : obs) o.location = GeoPoint::make(-80.0, -100.0);
  auto r = insitu_compare(obs, s.chart);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.skipped_outside, 7u);
  EXPECT_EQ(r.summary.count, 0u);
  obs = gen_insitu_observations(3, s.truth, 7, 0.0);
  obs[0].timestamp = parse_timestamp("2019-07-16T00:00:00Z");
  r = insitu_compare(obs, s.chart);
  EXPECT_EQ(r.skipped_date, 1u);
  EXPECT_EQ(r.records.size(), 6u);
}

TEST(InSitu, SummaryIsRecomputableFromRecords) {
  const auto s = offset_scene(0.05);
  const auto r = insitu_compare(gen_insitu_observations(4, s.truth, 300, 0.05), s.chart);
  double mean = 0, mae = 0, ss = 0;
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.error, rec.chart_estimate - rec.observed);
    mean += rec.error;
    mae += std::abs(rec.error);
  }
  const double n = static_cast<double>(r.records.size());
  mean /= n;
  mae /= n;
  for (const auto& rec : r.records) ss += (rec.error - mean) * (rec.error - mean);
  EXPECT_NEAR(r.summary.mean_bias, mean, 1e-15);
  EXPECT_NEAR(r.summary.mean_absolute_error, mae, 1e-15);
  EXPECT_NEAR(r.summary.error_sd, std::sqrt(ss / n), 1e-15);
  const auto path = scratch("bias") / "bias.csv";
  write_bias_report(path, r);
  const auto bytes = binio::read_file(path.string());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 14), "# sic-bias v1\n");
}

TEST(InSitu, CrosshairIsBurnedAtObservation) {
  const auto s = offset_scene(0.0);
  BiasRecord rec;
  rec.location = stereo_inverse(s.chart.grid.cell_center(20, 21), Hemisphere::South);
  const auto img = crosshair_overlay(s.chart, {rec}, 2);
  for (Index d = -2; d <= 2; ++d) {
    EXPECT_EQ(img(20 + d, 21), s.chart.concentration(20 + d, 21) < 0.5 ? 1.0 : 0.0);
    EXPECT_EQ(img(20, 21 + d), s.chart.concentration(20, 21 + d) < 0.5 ? 1.0 : 0.0);
  }
  EXPECT_EQ(img(17, 18), s.chart.concentration(17, 18));
}

TEST(Trajectories, FiftyRowsStageChangesOnceAndRoundTrip) {
  MetricsLog log;
  log.run_name = "DenseNet_NS_S";
  for (int e = 1; e <= 50; ++e) log.records.push_back(record(e, e <= 32 ? "N" : "S", e == 1 || e == 33, 1.0 / e));
  MetricsLog other;
  other.run_name = "DenseNet_S_S";
  for (int e = 1; e <= 3; ++e) other.records.push_back(record(e, "S", e == 1, 0.1 * e + 1e-17));

  const std::string one = trajectories_csv({log});
  std::vector<std::string> lines;
  std::stringstream ss(one);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 51u);
  EXPECT_EQ(lines[0].substr(0, 16), "run,epoch,stage,");
  int changes = 0;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto stage_of = [](const std::string& l) {
      const auto a = l.find(',', l.find(',') + 1);
      return l.substr(a + 1, 1);
    };
    changes += stage_of(lines[i]) != stage_of(lines[i - 1]);
  }
  EXPECT_EQ(changes, 1);

  const auto path = scratch("traj") / "traj.csv";
  export_trajectories({log, other}, path);
  const auto bytes = binio::read_file(path.string());
  const auto back = parse_trajectories(std::string(bytes.begin(), bytes.end()));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].run_name, "DenseNet_NS_S");
  EXPECT_TRUE(back[0].same_values(log));
  EXPECT_TRUE(back[1].same_values(other));
}

TEST(Trajectories, InconsistentInputsAreErrors) {
  MetricsLog a;
  a.run_name = "X";
  EXPECT_THROW(trajectories_csv({a, a}), InvalidArgument);
  EXPECT_THROW(trajectories_csv({MetricsLog{}}), InvalidArgument);
  EXPECT_THROW(parse_trajectories("epoch,stage\n"), FormatError);
  EXPECT_THROW(parse_trajectories("run,epoch,stage,stage_start,train_mae\nX,1,S,1,0.5\n"), FormatError);
}
