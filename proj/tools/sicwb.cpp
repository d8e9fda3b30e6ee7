// sicwb: command-line workbench for the sea-ice concentration toolkit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sic/evalserve.hpp"
#include "sic/io.hpp"
#include "sic/nn/checkpoint.hpp"
#include "sic/pipeline.hpp"
#include "sic/synth.hpp"
#include "sic/training.hpp"

namespace fs = std::filesystem;
using namespace sic;

namespace {

enum Exit : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kFormat = 5,
  kGeometry = 6,
  kNumeric = 7,
  kInvalid = 8,
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return kInvalid;
    case ErrorKind::Geometry: return kGeometry;
    case ErrorKind::Format: return kFormat;
    case ErrorKind::Io: return kIo;
    case ErrorKind::Numeric: return kNumeric;
  }
  return kOther;
}

int fail(int code, const std::string& kind, std::string message) {
  for (char& c : message) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  std::cerr << "error\tkind=" << kind << "\texit=" << code << "\tmessage=" << message << "\n";
  return code;
}

struct Common {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed for every random draw")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Worker threads (1 = reference mode)")->capture_default_str()->check(CLI::PositiveNumber);
}

struct ModelFlags {
  std::string family = "fcnn";
  nn::ModelConfig config;

  nn::ModelConfig resolve() const {
    nn::ModelConfig c = config;
    c.family = nn::parse_family(family);
    c.validate();
    return c;
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--family", m.family, "fcnn | unet | densenet")->capture_default_str();
  cmd->add_option("--layers", m.config.layers_or_blocks, "FCNN layers, U-Net levels or DenseNet blocks")
      ->capture_default_str();
  cmd->add_option("--init", m.config.initial_filters, "Initial filters")->capture_default_str();
  cmd->add_option("--growth", m.config.growth, "Additive filter growth")->capture_default_str();
  cmd->add_flag("--growth-doubling", m.config.growth_doubling, "Double filters per level instead");
  cmd->add_option("--dense-layers", m.config.dense_layers_per_block, "DenseNet layers per block")->capture_default_str();
  cmd->add_option("--dropout", m.config.dropout_rate, "Dropout rate in [0, 1)")->capture_default_str();
  cmd->add_option("--in-ch", m.config.input_channels, "Input channels")->capture_default_str();
}

std::string day_file(Date d) { return format_date(d) + ".sicr"; }

// ---------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  std::string out = "synth";
  std::size_t entries = 200;
  std::string hemisphere = "S";
  double center_lat = -65.0;
  double center_lon = 0.0;
  Index region = 640;
  double spacing_km = 1.0;
  std::string from = "2019-07-01";
  std::string to = "2019-07-10";
  double mislabel_rate = 0.0;
  Index footprint_px = 64;
  Index coarse_factor = 8;
  double edge_sharpness = 0.25;
  std::string id_prefix = "S1";
  std::size_t insitu = 0;
  double insitu_sd = 0.05;
};

int run_synth(const SynthArgs& a) {
  CatalogRequest req;
  req.seed = a.common.seed;
  req.n_entries = a.entries;
  const Hemisphere h = parse_hemisphere(a.hemisphere);
  req.region.rows = a.region;
  req.region.cols = a.region;
  req.region.grid = grid_centered_on(GeoPoint::make(a.center_lat, a.center_lon), h, a.region, a.region, a.spacing_km);
  req.first_day = parse_date(a.from);
  req.last_day = parse_date(a.to);
  req.mislabel_rate = a.mislabel_rate;
  req.footprint_px = a.footprint_px;
  req.edge_sharpness = a.edge_sharpness;
  req.id_prefix = a.id_prefix;
  req.chart_margin_cells = 2 * a.coarse_factor;
  const auto cat = gen_catalog(req);

  const fs::path out(a.out);
  fs::create_directories(out / "images");
  fs::create_directories(out / "charts");
  fs::create_directories(out / "truth");
  io::write_manifest((out / "catalog.tsv").string(), cat.entries);
  io::write_truth_flags((out / "catalog_truth.tsv").string(), cat.entries);
  for (std::size_t i = 0; i < cat.entries.size(); ++i) {
    io::save_image((out / cat.entries[i].image_path).string(), cat.images[i]);
  }
  std::vector<InSituObservation> obs;
  for (std::size_t d = 0; d < cat.scenes.size(); ++d) {
    const auto& scene = cat.scenes[d];
    const Date day = utc_date(scene.timestamp);
    const auto chart = gen_pmw_chart(scene, a.coarse_factor, derive_seed(a.common.seed, "chart", d));
    io::save_chart((out / "charts" / day_file(day)).string(), chart);
    io::save_truth((out / "truth" / day_file(day)).string(), scene);
    if (a.insitu > 0) {
      auto day_obs = gen_insitu_observations(derive_seed(a.common.seed, "insitu-day", d), scene, a.insitu, a.insitu_sd);
      obs.insert(obs.end(), day_obs.begin(), day_obs.end());
    }
  }
  if (a.insitu > 0) io::write_observations((out / "insitu.tsv").string(), obs);
  std::size_t flagged = 0;
  for (const auto& e : cat.entries) flagged += e.mislabeled ? 1 : 0;
  std::printf("synth: %zu entries, %zu days, %zu mislabeled -> %s\n", cat.entries.size(), cat.scenes.size(), flagged,
              out.string().c_str());
  return kOk;
}

// -------------------------------------------------------- build-dataset

struct BuildArgs {
  Common common;
  std::string catalog = "synth";
  std::string out = "dataset";
  Index patch = 64;
  double variance_threshold = 0.01;
  double test_fraction = 0.2;
  std::size_t batch_size = 16;
  bool no_median = false;
  bool filter_after_median = false;
};

int run_build_dataset(const BuildArgs& a) {
  if (!(a.test_fraction > 0.0 && a.test_fraction < 1.0)) throw InvalidArgument("--test-fraction must lie in (0, 1)");
  if (a.patch <= 0) throw InvalidArgument("--patch must be positive");
  const fs::path base(a.catalog);
  const auto entries = io::read_manifest((base / "catalog.tsv").string());
  std::map<Date, ConcentrationChart> charts;
  std::vector<Sample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) {
    const Date day = utc_date(e.timestamp);
    auto it = charts.find(day);
    if (it == charts.end()) it = charts.emplace(day, io::load_chart((base / "charts" / day_file(day)).string())).first;
    samples.push_back(build_sample(e, it->second, a.patch, a.patch, base));
  }
  const bool smooth = !a.no_median;
  if (smooth && a.filter_after_median) {
    for (auto& s : samples) smooth_label(s);
  }
  auto filtered = variance_filter(std::move(samples), a.variance_threshold);
  if (smooth && !a.filter_after_median) {
    for (auto& s : filtered.kept) smooth_label(s);
  }
  auto& kept = filtered.kept;
  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(a.common.seed, "split");
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(a.test_fraction * static_cast<double>(kept.size())));
  std::vector<Sample> train, test;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_test ? test : train).push_back(std::move(kept[order[k]]));

  const fs::path out(a.out);
  const auto tr = pack_batches(train, a.batch_size, out / "train");
  const auto te = pack_batches(test, a.batch_size, out / "test");
  std::printf("build-dataset: %zu kept, %zu rejected; train %zu batches (%zu dropped), test %zu batches (%zu dropped)\n",
              kept.size(), filtered.rejected.size(), tr.files.size(), tr.dropped, te.files.size(), te.dropped);
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  ModelFlags model;
  std::vector<std::string> datasets;
  std::string stages = "S:50";
  std::string test;
  bool augment = false;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  std::string out = "runs";
  bool quiet = false;
};

DatasetMap load_datasets(const std::vector<std::string>& specs) {
  DatasetMap map;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("--dataset expects ID=DIR, got '" + s + "'");
    map[s.substr(0, eq)] = load_dataset(s.substr(eq + 1));
  }
  return map;
}

int run_train(const TrainArgs& a) {
  TrainingStrategy st;
  st.stages = TrainingStrategy::parse_stages(a.stages);
  st.augmentation = a.augment;
  st.batch_size = a.batch_size;
  st.seed = a.common.seed;
  st.learning_rate = a.lr;
  st.test_dataset_id = a.test.empty() ? st.stages.back().dataset_id : a.test;
  st.validate();
  const auto config = a.model.resolve();
  const auto datasets = load_datasets(a.datasets);

  auto model = nn::Model::build(config, derive_seed(a.common.seed, "model"));
  const fs::path out(a.out);
  fs::create_directories(out);
  TrainOptions opt;
  opt.jobs = a.common.jobs;
  opt.checkpoint_dir = out / "checkpoints";
  if (!a.quiet) {
    opt.on_epoch = [](const EpochRecord& r) {
      std::fprintf(stderr, "epoch %3d [%s] train wmae %.5f test wmae %.5f (%.1fs)\n", r.epoch, r.stage.c_str(),
                   r.train.weighted_mae, r.test.weighted_mae, r.seconds);
    };
  }
  const auto log = train(model, st, datasets, opt);
  const fs::path metrics_path = out / (log.run_name + ".csv");
  log.save(metrics_path);
  const auto& last = log.records.back();
  std::printf("train: %s epochs=%zu test_weighted_mae=%s metrics=%s\n", log.run_name.c_str(), log.records.size(),
              io::format_double(last.test.weighted_mae).c_str(), metrics_path.string().c_str());
  return kOk;
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
  Common common;
  std::string checkpoint;
  std::string dataset;
  std::string split = "test";
};

int run_evaluate(const EvaluateArgs& a) {
  if (a.split != "test" && a.split != "train") throw InvalidArgument("--split must be train or test");
  const auto model = nn::load_checkpoint(a.checkpoint);
  const auto ds = load_dataset(a.dataset);
  const auto m = evaluate(model, a.split == "test" ? ds.test : ds.train, a.common.jobs);
  std::printf("weighted_mae=%s mae=%s weighted_mse=%s mse=%s\n", io::format_double(m.weighted_mae).c_str(),
              io::format_double(m.mae).c_str(), io::format_double(m.weighted_mse).c_str(),
              io::format_double(m.mse).c_str());
  return kOk;
}

// --------------------------------------------------------------- search

struct SearchArgs {
  Common common;
  std::string catalog = "synth/catalog.tsv";
  double lat = 0.0;
  double lon = 0.0;
  std::string from;
  std::string to;
  std::size_t max_results = 10;
};

std::string manifest_path(const std::string& p) {
  const fs::path path(p);
  return fs::is_directory(path) ? (path / "catalog.tsv").string() : path.string();
}

int run_search(const SearchArgs& a) {
  SearchQuery q;
  q.location = GeoPoint::make(a.lat, a.lon);
  q.start = parse_date(a.from);
  q.end = parse_date(a.to);
  q.max_results = a.max_results;
  const auto hits = search_catalog(io::read_manifest(manifest_path(a.catalog)), q);
  std::printf("%zu results\n", hits.size());
  for (const auto& e : hits) {
    std::printf("%s\t%s\t%s\t%s\n", e.id.c_str(), format_timestamp(e.timestamp).c_str(),
                to_string(e.reported_direction()).c_str(), e.image_path.c_str());
  }
  return kOk;
}

// --------------------------------------------------------------- report

struct ReportArgs {
  Common common;
  std::string catalog = "synth";
  std::string id;
  std::vector<std::string> checkpoints;
  std::string out = "reports";
  Index patch = 64;
};

int run_report(const ReportArgs& a) {
  const fs::path base(a.catalog);
  const auto entries = io::read_manifest((base / "catalog.tsv").string());
  const auto it = std::find_if(entries.begin(), entries.end(), [&](const CatalogEntry& e) { return e.id == a.id; });
  if (it == entries.end()) throw InvalidArgument("entry '" + a.id + "' not in catalog");
  const auto chart = io::load_chart((base / "charts" / day_file(utc_date(it->timestamp))).string());
  const auto image = io::load_image((base / it->image_path).string());

  std::vector<nn::Model> models;
  std::vector<std::string> names;
  for (const auto& entry : a.checkpoints) {
    const auto eq = entry.find('=');
    const std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
    names.push_back(eq == std::string::npos ? fs::path(path).stem().string() : entry.substr(0, eq));
    models.push_back(nn::load_checkpoint(path));
  }
  std::vector<NamedModel> named;
  for (std::size_t i = 0; i < models.size(); ++i) named.push_back({names[i], &models[i]});
  const auto rep = comparison_report(*it, image, named, chart, a.out, a.patch, a.patch);
  std::printf("report: %s (%zu models)\n", rep.dir.string().c_str(), rep.rows.size());
  for (const auto& r : rep.rows) {
    std::printf("%s\tweighted_mae=%s\tmae=%s\n", r.name.c_str(), io::format_double(r.metrics.weighted_mae).c_str(),
                io::format_double(r.metrics.mae).c_str());
  }
  return kOk;
}

// --------------------------------------------------------------- insitu

struct InsituArgs {
  Common common;
  std::string observations = "synth/insitu.tsv";
  std::string chart;
  std::string out = "bias.csv";
  std::string overlay;
};

int run_insitu(const InsituArgs& a) {
  const auto obs = io::read_observations(a.observations);
  const auto chart = io::load_chart(a.chart);
  const auto rep = insitu_compare(obs, chart);
  write_bias_report(a.out, rep);
  if (!a.overlay.empty()) io::write_pgm16(a.overlay, crosshair_overlay(chart, rep.records));
  const auto& s = rep.summary;
  std::printf("insitu: count=%zu mean_bias=%s mae=%s error_sd=%s skipped_outside=%zu skipped_date=%zu\n", s.count,
              io::format_double(s.mean_bias).c_str(), io::format_double(s.mean_absolute_error).c_str(),
              io::format_double(s.error_sd).c_str(), rep.skipped_outside, rep.skipped_date);
  return kOk;
}

// --------------------------------------------------- export-trajectories

struct ExportArgs {
  Common common;
  std::vector<std::string> logs;
  std::string out = "trajectories.csv";
};

int run_export(const ExportArgs& a) {
  std::vector<MetricsLog> logs;
  for (const auto& p : a.logs) logs.push_back(MetricsLog::load(p));
  export_trajectories(logs, a.out);
  std::size_t rows = 0;
  for (const auto& l : logs) rows += l.records.size();
  std::printf("export-trajectories: %zu runs, %zu rows -> %s\n", logs.size(), rows, a.out.c_str());
  return kOk;
}

// ---------------------------------------------------------- count-params

int run_count(const ModelFlags& m) {
  std::printf("%zu\n", nn::count_parameters(m.resolve()));
  return kOk;
}

// ------------------------------------------------------------ gradcheck

struct GradcheckArgs {
  Common common;
  ModelFlags model;
  Index size = 6;
  Index batch = 2;
  std::string loss = "wmae";
  double epsilon = 1e-5;
  double tolerance = 1e-4;
};

int run_gradcheck(const GradcheckArgs& a) {
  const auto config = a.model.resolve();
  const LossKind loss = a.loss == "mse" ? LossKind::Mse : a.loss == "wmae" ? LossKind::WeightedMae
                                                                           : throw InvalidArgument("--loss must be wmae or mse");
  auto model = nn::Model::build(config, derive_seed(a.common.seed, "model"));
  if (model.parameter_count() > 100000) throw InvalidArgument("gradcheck is limited to 100000 parameters");
  Rng rng = make_rng(a.common.seed, "gradcheck");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Zero biases over dead windows put relu inputs exactly on the kink.
  for (auto& layer : model.layers()) {
    for (Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) = 0.2 * unit(rng) - 0.1;
  }
  Tensor4d x(a.batch, a.size, a.size, config.input_channels);
  Tensor4d y(a.batch, a.size, a.size, 2);
  for (Index i = 0; i < x.size(); ++i) x.matrix().data()[i] = unit(rng);
  for (Index i = 0; i < y.matrix().rows(); ++i) {
    y.matrix()(i, 0) = unit(rng) < 0.5 ? 0.0 : 1.0;  // sigmoid never reaches 0 or 1: no kinks
    y.matrix()(i, 1) = unit(rng);
  }
  const double err = finite_difference_check(model, loss, x, y, a.epsilon);
  std::printf("gradcheck: parameters=%zu max_relative_error=%.3e tolerance=%.1e %s\n", model.parameter_count(), err,
              a.tolerance, err < a.tolerance ? "PASS" : "FAIL");
  if (!(err < a.tolerance)) throw NumericError("gradient mismatch above tolerance");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sea-ice concentration workbench: synthetic data, dataset building, training and evaluation"};
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags take precedence");
  std::string write_config;
  app.add_option("--write-config", write_config, "Write the effective configuration to this file and exit")
      ->configurable(false);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic catalog, charts and in-situ observations");
  add_common(c_synth, synth.common);
  c_synth->add_option("--out", synth.out, "Output directory")->capture_default_str();
  c_synth->add_option("--entries", synth.entries, "Catalog entries")->capture_default_str();
  c_synth->add_option("--hemisphere", synth.hemisphere, "N or S")->capture_default_str();
  c_synth->add_option("--center-lat", synth.center_lat, "Region centre latitude")->capture_default_str();
  c_synth->add_option("--center-lon", synth.center_lon, "Region centre longitude")->capture_default_str();
  c_synth->add_option("--region", synth.region, "Region side in cells")->capture_default_str();
  c_synth->add_option("--spacing-km", synth.spacing_km, "Truth grid spacing")->capture_default_str();
  c_synth->add_option("--from", synth.from, "First day (YYYY-MM-DD)")->capture_default_str();
  c_synth->add_option("--to", synth.to, "Last day (YYYY-MM-DD)")->capture_default_str();
  c_synth->add_option("--mislabel-rate", synth.mislabel_rate, "Fraction of wrong pass directions")->capture_default_str();
  c_synth->add_option("--footprint-px", synth.footprint_px, "Stored image side in pixels")->capture_default_str();
  c_synth->add_option("--coarse-factor", synth.coarse_factor, "Chart cell size in truth cells")->capture_default_str();
  c_synth->add_option("--edge-sharpness", synth.edge_sharpness, "Ice-edge logistic slope per cell")->capture_default_str();
  c_synth->add_option("--id-prefix", synth.id_prefix, "Entry id prefix")->capture_default_str();
  c_synth->add_option("--insitu", synth.insitu, "In-situ observations per day (0 = none)")->capture_default_str();
  c_synth->add_option("--insitu-sd", synth.insitu_sd, "Observation noise sd")->capture_default_str();

  BuildArgs build;
  auto* c_build = app.add_subcommand("build-dataset", "Turn a catalog into filtered, smoothed, batched samples");
  add_common(c_build, build.common);
  c_build->add_option("--catalog", build.catalog, "Catalog directory")->capture_default_str();
  c_build->add_option("--out", build.out, "Dataset directory")->capture_default_str();
  c_build->add_option("--patch", build.patch, "Sample side in pixels")->capture_default_str();
  c_build->add_option("--variance-threshold", build.variance_threshold, "Minimum label variance")->capture_default_str();
  c_build->add_option("--test-fraction", build.test_fraction, "Held-out fraction")->capture_default_str();
  c_build->add_option("--batch-size", build.batch_size, "Samples per batch file")->capture_default_str();
  c_build->add_flag("--no-median", build.no_median, "Skip the 5x5 label median filter");
  c_build->add_flag("--filter-after-median", build.filter_after_median, "Apply the variance filter after smoothing");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model over one or more dataset stages");
  add_common(c_train, tr.common);
  add_model_flags(c_train, tr.model);
  c_train->add_option("--dataset", tr.datasets, "ID=DIR (repeatable)")->required();
  c_train->add_option("--stages", tr.stages, "Comma list of ID:EPOCHS")->capture_default_str();
  c_train->add_option("--test", tr.test, "Test dataset id (default: last stage)");
  c_train->add_flag("--augment", tr.augment, "Random dihedral augmentation");
  c_train->add_option("--batch-size", tr.batch_size, "Minibatch size")->capture_default_str();
  c_train->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  c_train->add_option("--out", tr.out, "Run directory")->capture_default_str();
  c_train->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset split");
  add_common(c_eval, ev.common);
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  c_eval->add_option("--dataset", ev.dataset, "Dataset directory")->required();
  c_eval->add_option("--split", ev.split, "train or test")->capture_default_str();

  SearchArgs se;
  auto* c_search = app.add_subcommand("search", "Find catalog entries covering a location and date range");
  add_common(c_search, se.common);
  c_search->add_option("--catalog", se.catalog, "Manifest file or catalog directory")->capture_default_str();
  c_search->add_option("--lat", se.lat, "Latitude")->required();
  c_search->add_option("--lon", se.lon, "Longitude")->required();
  c_search->add_option("--from", se.from, "First day")->required();
  c_search->add_option("--to", se.to, "Last day")->required();
  c_search->add_option("--max", se.max_results, "Maximum results")->capture_default_str();

  ReportArgs rp;
  auto* c_report = app.add_subcommand("report", "Side-by-side comparison report for one entry");
  add_common(c_report, rp.common);
  c_report->add_option("--catalog", rp.catalog, "Catalog directory")->capture_default_str();
  c_report->add_option("--id", rp.id, "Entry id")->required();
  c_report->add_option("--checkpoint", rp.checkpoints, "[NAME=]FILE (repeatable)");
  c_report->add_option("--out", rp.out, "Report root directory")->capture_default_str();
  c_report->add_option("--patch", rp.patch, "Sample side in pixels")->capture_default_str();

  InsituArgs is;
  auto* c_insitu = app.add_subcommand("insitu", "Compare in-situ observations against a chart");
  add_common(c_insitu, is.common);
  c_insitu->add_option("--observations", is.observations, "Observation table")->capture_default_str();
  c_insitu->add_option("--chart", is.chart, "Chart file")->required();
  c_insitu->add_option("--out", is.out, "Bias table")->capture_default_str();
  c_insitu->add_option("--overlay", is.overlay, "Optional crosshair PGM");

  ExportArgs ex;
  auto* c_export = app.add_subcommand("export-trajectories", "Merge metrics logs into one plot-ready table");
  add_common(c_export, ex.common);
  c_export->add_option("--log", ex.logs, "Metrics CSV (repeatable)")->required();
  c_export->add_option("--out", ex.out, "Output table")->capture_default_str();

  Common count_common;
  ModelFlags count_model;
  auto* c_count = app.add_subcommand("count-params", "Print the parameter count of a model configuration");
  add_common(c_count, count_common);
  add_model_flags(c_count, count_model);

  GradcheckArgs gc;
  gc.model.config.layers_or_blocks = 2;
  gc.model.config.initial_filters = 4;
  gc.model.config.growth = 4;
  gc.model.config.dense_layers_per_block = 2;
  auto* c_grad = app.add_subcommand("gradcheck", "Compare reverse-mode gradients with central differences");
  add_common(c_grad, gc.common);
  add_model_flags(c_grad, gc.model);
  c_grad->add_option("--size", gc.size, "Input side")->capture_default_str();
  c_grad->add_option("--batch", gc.batch, "Batch size")->capture_default_str();
  c_grad->add_option("--loss", gc.loss, "wmae or mse")->capture_default_str();
  c_grad->add_option("--epsilon", gc.epsilon, "Finite-difference step")->capture_default_str();
  c_grad->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const CLI::FileError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  if (!write_config.empty()) {
    std::ofstream out(write_config);
    out << app.config_to_str(true, true);
    if (!out) return fail(kIo, "io", "cannot write config " + write_config);
    return kOk;
  }

  try {
    if (c_synth->parsed()) return run_synth(synth);
    if (c_build->parsed()) return run_build_dataset(build);
    if (c_train->parsed()) return run_train(tr);
    if (c_eval->parsed()) return run_evaluate(ev);
    if (c_search->parsed()) return run_search(se);
    if (c_report->parsed()) return run_report(rp);
    if (c_insitu->parsed()) return run_insitu(is);
    if (c_export->parsed()) return run_export(ex);
    if (c_count->parsed()) return run_count(count_model);
    if (c_grad->parsed()) return run_gradcheck(gc);
  } catch (const Error& e) {
    return fail(exit_code(e.kind()), to_string(e.kind()), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(kIo, "io", e.what());
  } catch (const std::exception& e) {
    return fail(kOther, "internal", e.what());
  }
  return fail(kUsage, "usage", "no subcommand");
}
