#include "sic/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "sic/io.hpp"
#include "sic/nn/checkpoint.hpp"

namespace sic {

namespace {

void check_pair(const Tensor4d& pred, const Tensor4d& label) {
  if (pred.c() != 1 || label.c() != 2 || !pred.same_spatial(label)) {
    throw InvalidArgument("prediction " + pred.shape_string() + " does not match label " + label.shape_string());
  }
}

}  // namespace

double uncertainty_weighted_mae(const Tensor4d& pred, const Tensor4d& label) {
  check_pair(pred, label);
  const auto p = pred.matrix().col(0).array();
  const auto c = label.matrix().col(0).array();
  const auto u = label.matrix().col(1).array();
  return ((p - c).abs() * (1.0 - u)).mean();
}

Tensor4d uw_mae_gradient(const Tensor4d& pred, const Tensor4d& label) {
  check_pair(pred, label);
  const double scale = 1.0 / static_cast<double>(pred.matrix().rows());
  Tensor4d g(pred.n(), pred.h(), pred.w(), 1);
  for (Index i = 0; i < pred.matrix().rows(); ++i) {
    const double e = pred.matrix()(i, 0) - label.matrix()(i, 0);
    const double s = e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
    g.matrix()(i, 0) = s * (1.0 - label.matrix()(i, 1)) * scale;
  }
  return g;
}

Metrics& Metrics::operator+=(const Metrics& o) {
  weighted_mae += o.weighted_mae;
  mae += o.mae;
  weighted_mse += o.weighted_mse;
  mse += o.mse;
  return *this;
}

Metrics& Metrics::operator/=(double d) {
  weighted_mae /= d;
  mae /= d;
  weighted_mse /= d;
  mse /= d;
  return *this;
}

Metrics metrics(const Tensor4d& pred, const Tensor4d& label) {
  check_pair(pred, label);
  const auto e = (pred.matrix().col(0) - label.matrix().col(0)).array();
  const auto w = 1.0 - label.matrix().col(1).array();
  Metrics m;
  m.weighted_mae = (e.abs() * w).mean();
  m.mae = e.abs().mean();
  m.weighted_mse = (e.square() * w).mean();
  m.mse = e.square().mean();
  return m;
}

namespace {

Tensor4d stack(const std::vector<const Sample*>& samples, bool labels) {
  if (samples.empty()) throw InvalidArgument("cannot stack an empty sample list");
  const auto& first = labels ? samples.front()->label : samples.front()->image;
  const Index h = first.rows(), w = first.cols(), c = first.channel_count();
  Tensor4d t(static_cast<Index>(samples.size()), h, w, c);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& r = labels ? samples[k]->label : samples[k]->image;
    if (r.rows() != h || r.cols() != w || r.channel_count() != c) {
      throw InvalidArgument("sample '" + samples[k]->source_id + "' differs in shape from the rest of the batch");
    }
    const auto n = static_cast<Index>(k);
    for (Index ch = 0; ch < c; ++ch) {
      for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) t(n, i, j, ch) = static_cast<double>(r[ch](i, j));
      }
    }
  }
  return t;
}

}  // namespace

Tensor4d stack_images(const std::vector<const Sample*>& samples) { return stack(samples, false); }
Tensor4d stack_labels(const std::vector<const Sample*>& samples) { return stack(samples, true); }

void TrainingStrategy::validate() const {
  if (stages.empty()) throw InvalidArgument("training strategy needs at least one stage");
  for (const auto& s : stages) {
    if (s.dataset_id.empty()) throw InvalidArgument("stage dataset id is empty");
    if (s.epochs <= 0) throw InvalidArgument("stage '" + s.dataset_id + "' must run at least one epoch");
  }
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be >= 0");
  if (test_dataset_id.empty()) throw InvalidArgument("test dataset id is empty");
}

int TrainingStrategy::total_epochs() const {
  return std::accumulate(stages.begin(), stages.end(), 0, [](int a, const Stage& s) { return a + s.epochs; });
}

std::vector<Stage> TrainingStrategy::parse_stages(const std::string& text) {
  std::vector<Stage> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0) throw InvalidArgument("stage '" + item + "' is not ID:EPOCHS");
    Stage s;
    s.dataset_id = item.substr(0, colon);
    try {
      std::size_t used = 0;
      s.epochs = std::stoi(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidArgument("stage '" + item + "' has a malformed epoch count");
    }
    if (s.epochs <= 0) throw InvalidArgument("stage '" + item + "' must run at least one epoch");
    out.push_back(s);
  }
  if (out.empty()) throw InvalidArgument("empty stage list");
  return out;
}

std::string run_name(nn::Family family, const TrainingStrategy& strategy) {
  strategy.validate();
  std::string name = nn::run_label(family) + "_";
  for (const auto& s : strategy.stages) name += s.dataset_id;
  name += "_" + strategy.test_dataset_id;
  if (strategy.augmentation) name += "_A";
  return name;
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {
      "train_weighted_mae", "train_mae", "train_weighted_mse", "train_mse",
      "test_weighted_mae",  "test_mae",  "test_weighted_mse",  "test_mse",
  };
  return cols;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw FormatError(FormatFault::Malformed, "metrics log: '" + s + "' is not a number");
  }
  return v;
}

std::array<double*, 8> metric_slots(EpochRecord& r) {
  return {&r.train.weighted_mae, &r.train.mae, &r.train.weighted_mse, &r.train.mse,
          &r.test.weighted_mae,  &r.test.mae,  &r.test.weighted_mse,  &r.test.mse};
}

}  // namespace

std::string MetricsLog::to_csv() const {
  std::string out = "epoch,stage,stage_start";
  for (const auto& c : metric_columns()) out += "," + c;
  out += "\n";
  for (const auto& r0 : records) {
    EpochRecord r = r0;
    out += std::to_string(r.epoch) + "," + r.stage + "," + (r.stage_start ? "1" : "0");
    for (double* v : metric_slots(r)) out += "," + io::format_double(*v);
    out += "\n";
  }
  return out;
}

MetricsLog MetricsLog::from_csv(const std::string& text, const std::string& run) {
  MetricsLog log;
  log.run_name = run;
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw FormatError(FormatFault::Malformed, "metrics log: missing header");
  const auto header = split(line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  auto need = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) throw FormatError(FormatFault::Malformed, "metrics log: missing column '" + name + "'");
    return it->second;
  };
  const std::size_t c_epoch = need("epoch"), c_stage = need("stage"), c_start = need("stage_start");
  std::vector<std::size_t> c_metrics;
  for (const auto& c : metric_columns()) c_metrics.push_back(need(c));

  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) {
      throw FormatError(FormatFault::Malformed, "metrics log: row has " + std::to_string(f.size()) + " fields, header " +
                                                    std::to_string(header.size()));
    }
    EpochRecord r;
    r.epoch = static_cast<int>(parse_number(f[c_epoch]));
    r.stage = f[c_stage];
    r.stage_start = f[c_start] == "1";
    auto slots = metric_slots(r);
    for (std::size_t k = 0; k < slots.size(); ++k) *slots[k] = parse_number(f[c_metrics[k]]);
    log.records.push_back(std::move(r));
  }
  return log;
}

void MetricsLog::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write metrics log " + path.string());
  out << to_csv();
  if (!out) throw IoError("failed writing metrics log " + path.string());
}

MetricsLog MetricsLog::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read metrics log " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str(), path.stem().string());
}

bool MetricsLog::same_values(const MetricsLog& other) const {
  if (records.size() != other.records.size()) return false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = other.records[i];
    if (a.epoch != b.epoch || a.stage != b.stage || a.stage_start != b.stage_start || !(a.train == b.train) ||
        !(a.test == b.test)) {
      return false;
    }
  }
  return true;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d;
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  d.train = load_batch_directory(dir / "train");
  d.test = load_batch_directory(dir / "test");
  return d;
}

Adam::Adam(const nn::Model& model, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon), m_(model.zero_gradients()), v_(model.zero_gradients()) {}

void Adam::step(nn::Model& model, const nn::Model::Gradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1_ * m + (1.0 - b1_) * g;
    v = b2_ * v + (1.0 - b2_) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    auto& layer = model.layers()[i];
    update(layer.weight, grads.weight[i], m_.weight[i], v_.weight[i]);
    update(layer.bias, grads.bias[i], m_.bias[i], v_.bias[i]);
  }
}

Metrics evaluate(const nn::Model& model, const std::vector<Sample>& samples, unsigned jobs) {
  if (samples.empty()) throw InvalidArgument("cannot evaluate on an empty sample set");
  nn::Model eval_model = model;
  eval_model.set_mode(nn::Mode::Eval);
  std::vector<Metrics> per_sample(samples.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::vector<const Sample*> one{&samples[k]};
      per_sample[k] = metrics(eval_model.forward(stack_images(one)).output(), stack_labels(one));
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min<std::size_t>(jobs, samples.size()));
  if (n_threads == 1) {
    work(0, samples.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    const std::size_t chunk = (samples.size() + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(samples.size(), b + chunk);
      pool.emplace_back([&, b, e, t] {
        try {
          work(b, e);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  Metrics total;
  for (const auto& m : per_sample) total += m;
  total /= static_cast<double>(samples.size());
  return total;
}

std::string checkpoint_name(const std::string& run, int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_e%03d.sicm", epoch);
  return run + buf;
}

MetricsLog train(nn::Model& model, const TrainingStrategy& strategy, const DatasetMap& datasets,
                 const TrainOptions& options) {
  strategy.validate();
  auto find = [&](const std::string& id) -> const Dataset& {
    const auto it = datasets.find(id);
    if (it == datasets.end()) throw InvalidArgument("dataset '" + id + "' is not available");
    return it->second;
  };
  for (const auto& s : strategy.stages) {
    if (find(s.dataset_id).train.empty()) throw InvalidArgument("dataset '" + s.dataset_id + "' has no training samples");
  }
  const auto& test_set = find(strategy.test_dataset_id).test;
  if (test_set.empty()) throw InvalidArgument("dataset '" + strategy.test_dataset_id + "' has no test samples");

  MetricsLog log;
  log.run_name = run_name(model.config().family, strategy);
  Adam adam(model, strategy.learning_rate);
  Rng dropout_rng = make_rng(strategy.seed, "dropout");
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  int epoch = 0;
  for (const auto& stage : strategy.stages) {
    const auto& train_set = find(stage.dataset_id).train;
    for (int e = 0; e < stage.epochs; ++e) {
      ++epoch;
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<std::size_t> order(train_set.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle_rng = make_rng(strategy.seed, "shuffle", static_cast<std::uint64_t>(epoch));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      Rng augment_rng = make_rng(strategy.seed, "augment", static_cast<std::uint64_t>(epoch));

      model.set_mode(nn::Mode::Train);
      for (std::size_t b = 0; b < order.size(); b += strategy.batch_size) {
        const std::size_t end = std::min(order.size(), b + strategy.batch_size);
        std::vector<Sample> augmented;
        std::vector<const Sample*> batch;
        if (strategy.augmentation) {
          augmented.reserve(end - b);
          for (std::size_t k = b; k < end; ++k) augmented.push_back(augment(train_set[order[k]], augment_rng));
          for (const auto& s : augmented) batch.push_back(&s);
        } else {
          for (std::size_t k = b; k < end; ++k) batch.push_back(&train_set[order[k]]);
        }
        const Tensor4d x = stack_images(batch);
        const Tensor4d y = stack_labels(batch);
        const auto trace = model.forward(x, &dropout_rng);
        const double loss = uncertainty_weighted_mae(trace.output(), y);
        if (!std::isfinite(loss)) {
          model.set_mode(nn::Mode::Eval);
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", stage '" + stage.dataset_id +
                             "', batch " + std::to_string(b / strategy.batch_size + 1));
        }
        adam.step(model, model.backward(trace, uw_mae_gradient(trace.output(), y)));
      }
      model.set_mode(nn::Mode::Eval);

      EpochRecord rec;
      rec.epoch = epoch;
      rec.stage = stage.dataset_id;
      rec.stage_start = e == 0;
      rec.train = evaluate(model, train_set, options.jobs);
      rec.test = evaluate(model, test_set, options.jobs);
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!std::isfinite(rec.train.weighted_mae) || !std::isfinite(rec.test.weighted_mae)) {
        throw NumericError("non-finite metrics at epoch " + std::to_string(epoch));
      }
      log.records.push_back(rec);
      if (options.on_epoch) options.on_epoch(rec);
    }
    if (!options.checkpoint_dir.empty()) {
      nn::save_checkpoint((options.checkpoint_dir / checkpoint_name(log.run_name, epoch)).string(), model);
    }
  }
  return log;
}

double loss_value(LossKind kind, const Tensor4d& pred, const Tensor4d& label) {
  if (kind == LossKind::WeightedMae) return uncertainty_weighted_mae(pred, label);
  return metrics(pred, label).mse;
}

Tensor4d loss_gradient(LossKind kind, const Tensor4d& pred, const Tensor4d& label) {
  if (kind == LossKind::WeightedMae) return uw_mae_gradient(pred, label);
  check_pair(pred, label);
  const double scale = 2.0 / static_cast<double>(pred.matrix().rows());
  Tensor4d g(pred.n(), pred.h(), pred.w(), 1);
  g.matrix().col(0) = scale * (pred.matrix().col(0) - label.matrix().col(0));
  return g;
}

double finite_difference_check(nn::Model& model, LossKind loss, const Tensor4d& input, const Tensor4d& label,
                               double epsilon, double floor) {
  const auto saved_mode = model.mode();
  model.set_mode(nn::Mode::Eval);
  const auto trace = model.forward(input);
  const auto grads = model.backward(trace, loss_gradient(loss, trace.output(), label));
  auto eval_loss = [&] { return loss_value(loss, model.forward(input).output(), label); };

  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double orig = param;
    param = orig + epsilon;
    const double up = eval_loss();
    param = orig - epsilon;
    const double down = eval_loss();
    param = orig;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    auto& layer = model.layers()[i];
    for (Index k = 0; k < layer.weight.size(); ++k) probe(layer.weight.data()[k], grads.weight[i].data()[k]);
    for (Index k = 0; k < layer.bias.size(); ++k) probe(layer.bias.data()[k], grads.bias[i].data()[k]);
  }
  model.set_mode(saved_mode);
  return worst;
}

}  // namespace sic
