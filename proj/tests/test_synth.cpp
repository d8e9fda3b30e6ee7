#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sic/rng.hpp"
#include "sic/synth.hpp"
#include "sic/timeutil.hpp"

using namespace sic;

namespace {

CatalogRequest small_request(std::uint64_t seed, std::size_t n, double rate) {
  CatalogRequest req;
  req.seed = seed;
  req.n_entries = n;
  req.region.rows = 192;
  req.region.cols = 192;
  req.region.grid = grid_centered_on(GeoPoint::make(-65.0, 20.0), Hemisphere::South, 192, 192, 1.0);
  req.first_day = parse_date("2019-07-01");
  req.last_day = parse_date("2019-07-03");
  req.mislabel_rate = rate;
  req.footprint_px = 32;
  return req;
}

}  // namespace

TEST(Seeds, DeriveSeedSeparatesPurposesAndIndices) {
  EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
}

TEST(Truth, DeterministicAndBounded) {
  const auto a = gen_truth_field(9, 64, 48, 0.3, 0.1);
  const auto b = gen_truth_field(9, 64, 48, 0.3, 0.1);
  EXPECT_TRUE((a.field == b.field).all());
  EXPECT_EQ(a.field.rows(), 64);
  EXPECT_EQ(a.field.cols(), 48);
  const auto c = gen_truth_field(10, 64, 48, 0.3, 0.1);
  EXPECT_FALSE((a.field == c.field).all());
}

TEST(Truth, ValuesInUnitIntervalOverManySeeds) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto t = gen_truth_field(s, 24, 24, 0.05 + 0.001 * static_cast<double>(s), 0.0);
    ASSERT_GE(t.field.minCoeff(), 0.0) << "seed " << s;
    ASSERT_LE(t.field.maxCoeff(), 1.0) << "seed " << s;
  }
}

TEST(Truth, InfiniteSharpnessIsAStep) {
  const auto t = gen_truth_field(4, 64, 64, std::numeric_limits<double>::infinity(), 0.0);
  for (Index i = 0; i < t.field.size(); ++i) {
    const double v = t.field.data()[i];
    ASSERT_TRUE(v == 0.0 || v == 1.0) << v;
  }
  EXPECT_GT(t.field.sum(), 0.0);
  EXPECT_LT(t.field.sum(), static_cast<double>(t.field.size()));
}

TEST(Sar, ResponsesAreMonotone) {
  for (int i = 0; i < 100; ++i) {
    const double c = i / 100.0, d = (i + 1) / 100.0;
    EXPECT_LT(co_pol_response(c), co_pol_response(d));
    EXPECT_LT(cross_pol_response(c), cross_pol_response(d));
  }
}

TEST(Sar, ConstantTruthWithoutSpeckleIsConstant) {
  const Plane<double> field = Plane<double>::Constant(20, 30, 0.4);
  const auto img = render_sar(field, 1, {false, 4});
  EXPECT_TRUE((img[0] == co_pol_response(0.4)).all());
  EXPECT_TRUE((img[1] == cross_pol_response(0.4)).all());
}

TEST(Sar, DeterministicPerSeed) {
  const auto t = gen_truth_field(2, 32, 32, 0.25, 0.0);
  EXPECT_TRUE(render_sar(t, 5) == render_sar(t, 5));
  EXPECT_FALSE(render_sar(t, 5) == render_sar(t, 6));
}

TEST(Sar, SpeckleIsUnitMean) {
  const Plane<double> field = Plane<double>::Constant(100, 100, 0.6);
  const auto img = render_sar(field, 77);
  EXPECT_NEAR(img[0].mean() / co_pol_response(0.6), 1.0, 0.01);
  EXPECT_NEAR(img[1].mean() / cross_pol_response(0.6), 1.0, 0.01);
  EXPECT_GE(img[0].minCoeff(), 0.0);
  EXPECT_LE(img[0].maxCoeff(), 1.0);
}

TEST(Chart, BlockMeansOfHalfZeroHalfOne) {
  SceneTruth t;
  t.field = Plane<double>::Zero(4, 4);
  t.field.rightCols(2).setOnes();
  t.grid = GridGeometry{{0.0, 2000.0}, 1.0, Hemisphere::South};
  ChartOptions opt;
  opt.noise = false;
  const auto chart = gen_pmw_chart(t, 2, 0, opt);
  ASSERT_EQ(chart.rows(), 2);
  ASSERT_EQ(chart.cols(), 2);
  EXPECT_EQ(chart.concentration(0, 0), 0.0);
  EXPECT_EQ(chart.concentration(1, 0), 0.0);
  EXPECT_EQ(chart.concentration(0, 1), 1.0);
  EXPECT_EQ(chart.concentration(1, 1), 1.0);
  // Coarse cell centres sit at the centre of each block.
  EXPECT_DOUBLE_EQ(chart.grid.origin.x, 0.5);
  EXPECT_DOUBLE_EQ(chart.grid.origin.y, 1999.5);
  EXPECT_DOUBLE_EQ(chart.grid.spacing, 2.0);
}

TEST(Chart, ConstantTruthHasMinimalUncertainty) {
  SceneTruth t;
  t.field = Plane<double>::Constant(16, 16, 0.3);
  const auto chart = gen_pmw_chart(t, 4, 1);
  EXPECT_TRUE((chart.uncertainty == 0.05).all());
}

TEST(Chart, NoiseFreeEqualsBlockMeansAndUncertaintyTracksVariance) {
  const auto t = gen_truth_field(8, 64, 64, 0.2, 0.0);
  ChartOptions opt;
  opt.noise = false;
  const auto chart = gen_pmw_chart(t, 8, 3, opt);
  double max_var = 0.0;
  Index arg_r = 0, arg_c = 0;
  for (Index r = 0; r < 8; ++r) {
    for (Index c = 0; c < 8; ++c) {
      const auto block = t.field.block(r * 8, c * 8, 8, 8);
      EXPECT_NEAR(chart.concentration(r, c), block.mean(), 1e-15);
      const double var = (block - block.mean()).square().mean();
      if (var > max_var) {
        max_var = var;
        arg_r = r;
        arg_c = c;
      }
    }
  }
  EXPECT_DOUBLE_EQ(chart.uncertainty(arg_r, arg_c), 0.5);
  EXPECT_DOUBLE_EQ(chart.uncertainty.maxCoeff(), 0.5);
  EXPECT_GE(chart.uncertainty.minCoeff(), 0.05);
}

TEST(Chart, RejectsNonDividingFactor) {
  const auto t = gen_truth_field(1, 30, 30, 0.2, 0.0);
  EXPECT_THROW(gen_pmw_chart(t, 7, 0), InvalidArgument);
  EXPECT_THROW(gen_pmw_chart(t, 1, 0), InvalidArgument);
}

TEST(Catalog, NoMislabelsAgreeEverywhere) {
  const auto cat = gen_catalog(small_request(1, 60, 0.0));
  ASSERT_EQ(cat.entries.size(), 60u);
  for (const auto& e : cat.entries) {
    EXPECT_EQ(derive_pass_direction(e.footprint), e.reported_direction());
    EXPECT_FALSE(e.mislabeled);
  }
}

TEST(Catalog, FullInjectionNeedsCorrectionEverywhere) {
  const auto cat = gen_catalog(small_request(2, 40, 1.0));
  for (const auto& e : cat.entries) {
    EXPECT_TRUE(reconcile_pass_direction(e.reported_direction(), derive_pass_direction(e.footprint)).needs_correction);
  }
}

TEST(Catalog, QuarterInjectionWithinBinomialBound) {
  const auto cat = gen_catalog(small_request(3, 1000, 0.25));
  std::size_t flagged = 0;
  for (const auto& e : cat.entries) flagged += e.mislabeled;
  EXPECT_NEAR(static_cast<double>(flagged) / 1000.0, 0.25, 0.03);
}

TEST(Catalog, DeterministicIdsDatesAndBounds) {
  const auto req = small_request(4, 30, 0.3);
  const auto a = gen_catalog(req);
  const auto b = gen_catalog(req);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].id, b.entries[i].id);
    EXPECT_EQ(a.entries[i].timestamp, b.entries[i].timestamp);
    EXPECT_TRUE(a.images[i] == b.images[i]);
    ids.insert(a.entries[i].id);
    const Date d = utc_date(a.entries[i].timestamp);
    EXPECT_GE(d, req.first_day);
    EXPECT_LE(d, req.last_day);
    for (const auto& ch : a.images[i].channels) {
      EXPECT_GE(ch.minCoeff(), 0.0f);
      EXPECT_LE(ch.maxCoeff(), 1.0f);
    }
  }
  EXPECT_EQ(ids.size(), a.entries.size());
  EXPECT_EQ(a.entries[0].id, "S1_S_00000");
  EXPECT_EQ(a.entries[0].image_path, "images/S1_S_00000.sicr");
}

TEST(Catalog, InjectionIsReversible) {
  const auto req = small_request(5, 40, 0.5);
  auto clean_req = req;
  clean_req.mislabel_rate = 0.0;
  const auto dirty = gen_catalog(req);
  const auto clean = gen_catalog(clean_req);
  for (std::size_t i = 0; i < dirty.entries.size(); ++i) {
    const auto& e = dirty.entries[i];
    const auto r = reconcile_pass_direction(e.reported_direction(), derive_pass_direction(e.footprint));
    EXPECT_EQ(r.needs_correction, e.mislabeled);
    EXPECT_TRUE(correct_quicklook_orientation(dirty.images[i], r) == clean.images[i]);
  }
}

TEST(Catalog, RejectsBadRequests) {
  auto req = small_request(6, 10, 0.0);
  req.n_entries = 0;
  EXPECT_THROW(gen_catalog(req), InvalidArgument);
  req = small_request(6, 10, 1.5);
  EXPECT_THROW(gen_catalog(req), InvalidArgument);
  req = small_request(6, 10, 0.0);
  req.region.rows = 0;
  EXPECT_THROW(gen_catalog(req), InvalidArgument);
  req = small_request(6, 10, 0.0);
  std::swap(req.first_day, req.last_day);
  EXPECT_THROW(gen_catalog(req), InvalidArgument);
}

TEST(InSitu, NoiseFreeEqualsTruthAtPixels) {
  TruthOptions opt;
  opt.rows = opt.cols = 64;
  opt.grid = grid_centered_on(GeoPoint::make(-63.0, -40.0), Hemisphere::South, 64, 64, 2.0);
  const auto t = gen_truth_field(3, opt);
  const auto obs = gen_insitu_observations(4, t, 500, 0.0);
  const auto quad = project_corners(t.footprint, Hemisphere::South);
  for (const auto& o : obs) {
    const auto p = stereo_forward(o.location, Hemisphere::South);
    const auto idx = t.grid.fractional_index(p);
    const auto r = static_cast<Index>(std::lround(idx[0])), c = static_cast<Index>(std::lround(idx[1]));
    EXPECT_NEAR(idx[0], static_cast<double>(r), 1e-6);
    EXPECT_NEAR(idx[1], static_cast<double>(c), 1e-6);
    EXPECT_EQ(o.observed_concentration, t.field(r, c));
    EXPECT_TRUE(quad_contains(quad, p));
  }
}

TEST(InSitu, NoiseIsUnbiased) {
  TruthOptions opt;
  opt.rows = opt.cols = 64;
  const auto t = gen_truth_field(5, opt);
  Plane<double> mid = 0.2 + 0.6 * t.field;  // keep clamping out of play
  SceneTruth scaled = t;
  scaled.field = mid;
  const auto obs = gen_insitu_observations(6, scaled, 10000, 0.05);
  double sum = 0.0;
  for (const auto& o : obs) {
    const auto idx = scaled.grid.fractional_index(stereo_forward(o.location, Hemisphere::South));
    sum += o.observed_concentration - mid(std::lround(idx[0]), std::lround(idx[1]));
  }
  EXPECT_LT(std::abs(sum / 10000.0), 3.0 * 0.05 / 100.0);
}
