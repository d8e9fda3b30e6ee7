#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sic/nn/model.hpp"
#include "sic/pipeline.hpp"

namespace sic {

using nn::Tensor4d;

// Predictions are N x H x W x 1; labels are N x H x W x 2 (concentration, uncertainty).

/// Mean over pixels of |pred - conc| * (1 - unc), averaged over samples.
double uncertainty_weighted_mae(const Tensor4d& pred, const Tensor4d& label);

/// sign(pred - conc) * (1 - unc) / (P * N); zero at pred == conc.
Tensor4d uw_mae_gradient(const Tensor4d& pred, const Tensor4d& label);

struct Metrics {
  double weighted_mae = 0.0;
  double mae = 0.0;
  double weighted_mse = 0.0;
  double mse = 0.0;

  Metrics& operator+=(const Metrics& o);
  Metrics& operator/=(double d);
  bool operator==(const Metrics&) const = default;
};

Metrics metrics(const Tensor4d& pred, const Tensor4d& label);

/// Stacks samples into N x H x W x C tensors (image and label).
Tensor4d stack_images(const std::vector<const Sample*>& samples);
Tensor4d stack_labels(const std::vector<const Sample*>& samples);

struct Stage {
  std::string dataset_id;
  int epochs = 0;
};

struct TrainingStrategy {
  std::vector<Stage> stages;
  bool augmentation = false;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  std::string test_dataset_id;

  void validate() const;
  int total_epochs() const;
  /// Parses "N:32,S:18".
  static std::vector<Stage> parse_stages(const std::string& text);
};

/// e.g. "DenseNet_NS_S" or "UNet_NS_S_A".
std::string run_name(nn::Family family, const TrainingStrategy& strategy);

struct EpochRecord {
  int epoch = 0;
  std::string stage;
  bool stage_start = false;
  Metrics train;
  Metrics test;
  double seconds = 0.0;  // wall clock, never exported
};

struct MetricsLog {
  std::string run_name;
  std::vector<EpochRecord> records;

  /// Header plus one comma-separated row per epoch, values at 17 significant digits.
  std::string to_csv() const;
  static MetricsLog from_csv(const std::string& text, const std::string& run_name = "");
  void save(const std::filesystem::path& path) const;
  static MetricsLog load(const std::filesystem::path& path);

  /// Export equality: everything except wall-clock time.
  bool same_values(const MetricsLog& other) const;
};

/// Column names of the metric fields in export order.
const std::vector<std::string>& metric_columns();

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
};
using DatasetMap = std::map<std::string, Dataset>;

/// Loads `<dir>/train` and `<dir>/test` batch directories.
Dataset load_dataset(const std::filesystem::path& dir);

class Adam {
 public:
  explicit Adam(const nn::Model& model, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  void step(nn::Model& model, const nn::Model::Gradients& grads);
  long steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  nn::Model::Gradients m_, v_;
};

/// Mean of per-sample metrics in Eval mode. Samples are split across `jobs`
/// threads and reduced in index order, so the result does not depend on `jobs`.
Metrics evaluate(const nn::Model& model, const std::vector<Sample>& samples, unsigned jobs = 1);

struct TrainOptions {
  unsigned jobs = 1;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Runs every stage in order. Throws InvalidArgument for missing datasets and
/// NumericError when the loss becomes non-finite.
MetricsLog train(nn::Model& model, const TrainingStrategy& strategy, const DatasetMap& datasets,
                 const TrainOptions& options = {});

/// Checkpoint file name for the end of `epoch`.
std::string checkpoint_name(const std::string& run, int epoch);

enum class LossKind { WeightedMae, Mse };

double loss_value(LossKind kind, const Tensor4d& pred, const Tensor4d& label);
Tensor4d loss_gradient(LossKind kind, const Tensor4d& pred, const Tensor4d& label);

/// Largest relative difference |a - n| / max(|a|, |n|, floor) between
/// reverse-mode and central-difference gradients over every parameter.
/// The model is evaluated in Eval mode and restored afterwards.
double finite_difference_check(nn::Model& model, LossKind loss, const Tensor4d& input, const Tensor4d& label,
                               double epsilon = 1e-5, double floor = 1e-7);

}  // namespace sic
