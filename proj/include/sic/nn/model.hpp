#pragma once

// Dimension-preserving fully-convolutional models (sequential CNN, pool-free
// U-Net, pool-free DenseNet) expressed as a small DAG of layer nodes with a
// reverse-mode backward pass.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sic/nn/layers.hpp"
#include "sic/rng.hpp"

namespace sic::nn {

enum class Family : std::uint8_t { Fcnn = 0, Unet = 1, Densenet = 2 };

std::string to_string(Family f);
/// Accepts fcnn/cnn, unet, densenet (case-insensitive).
Family parse_family(const std::string& text);
/// Name used in run names: CNN, UNet, DenseNet.
std::string run_label(Family f);

struct ModelConfig {
  Family family = Family::Fcnn;
  int layers_or_blocks = 10;      // FCNN layers, U-Net encoder levels, DenseNet blocks
  int dense_layers_per_block = 8;  // DenseNet only
  int initial_filters = 32;
  int growth = 32;                // additive growth per layer/level
  bool growth_doubling = false;   // x2 per level instead of +growth
  double dropout_rate = 0.0;
  int input_channels = 2;

  /// Throws InvalidArgument for non-positive counts or a dropout rate outside [0, 1).
  void validate() const;
  /// Filters of layer/level `i` (0-based).
  int filters_at(int i) const;
};

/// Full-size presets used for the reference parameter counts.
ModelConfig reference_fcnn_config();
ModelConfig reference_unet_config();
ModelConfig reference_densenet_config();

enum class Mode { Train, Eval };

struct ConvLayer {
  std::string name;
  Index kernel = 3;
  Index in_channels = 0;
  Index out_channels = 0;
  RowMatrix<double> weight;  // (kernel*kernel*in) x out, rows ordered (ky, kx, in)
  Vector<double> bias;

  std::size_t parameter_count() const { return static_cast<std::size_t>(weight.size() + bias.size()); }
};

struct Node {
  enum class Op { Input, Conv, Relu, Sigmoid, Dropout, Concat };
  Op op = Op::Input;
  std::vector<int> inputs;
  int conv = -1;       // index into Model::layers() for Conv nodes
  double rate = 0.0;   // Dropout nodes
  Index channels = 0;  // output channel count
};

/// Closed-form parameter count for a configuration (no allocation).
std::size_t count_parameters(const ModelConfig& config);

class Model {
 public:
  /// Builds the graph and initialises weights (He-uniform before relu,
  /// Glorot-uniform elsewhere, zero biases) from `seed`.
  static Model build(const ModelConfig& config, std::uint64_t seed = 0);

  const ModelConfig& config() const { return config_; }
  const std::vector<Node>& graph() const { return nodes_; }
  std::vector<ConvLayer>& layers() { return layers_; }
  const std::vector<ConvLayer>& layers() const { return layers_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  /// Sum of the sizes of all weight and bias arrays.
  std::size_t parameter_count() const;

  struct Trace {
    std::vector<Tensor4d> values;              // per node
    std::vector<RowMatrix<double>> masks;      // per node, only for Dropout nodes in Train mode
    const Tensor4d& output() const { return values.back(); }
  };

  /// Forward pass. In Train mode dropout draws from `dropout_rng`, which must be non-null.
  Trace forward(const Tensor4d& x, Rng* dropout_rng = nullptr) const;

  /// Eval-mode forward regardless of the current mode.
  Tensor4d predict(const Tensor4d& x) const;

  struct Gradients {
    std::vector<RowMatrix<double>> weight;
    std::vector<Vector<double>> bias;
    Tensor4d input;  // only filled when requested
  };

  Gradients backward(const Trace& trace, const Tensor4d& grad_output, bool need_input_grad = false) const;

  /// Zero-filled gradient buffers shaped like the parameters.
  Gradients zero_gradients() const;

 private:
  ModelConfig config_;
  std::vector<Node> nodes_;
  std::vector<ConvLayer> layers_;
  Mode mode_ = Mode::Eval;

  friend class GraphBuilder;
};

}  // namespace sic::nn
