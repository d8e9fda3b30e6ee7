#include "sic/nn/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace sic::nn {

std::string to_string(Family f) {
  switch (f) {
    case Family::Fcnn: return "fcnn";
    case Family::Unet: return "unet";
    case Family::Densenet: return "densenet";
  }
  return "unknown";
}

Family parse_family(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "fcnn" || t == "cnn") return Family::Fcnn;
  if (t == "unet" || t == "u-net") return Family::Unet;
  if (t == "densenet") return Family::Densenet;
  throw InvalidArgument("unknown model family '" + text + "'");
}

std::string run_label(Family f) {
  switch (f) {
    case Family::Fcnn: return "CNN";
    case Family::Unet: return "UNet";
    case Family::Densenet: return "DenseNet";
  }
  return "Model";
}

void ModelConfig::validate() const {
  if (family == Family::Fcnn ? layers_or_blocks < 0 : layers_or_blocks <= 0) {
    throw InvalidArgument("layer/block count must be positive");
  }
  if (initial_filters <= 0 || input_channels <= 0) throw InvalidArgument("filter and channel counts must be positive");
  if (!growth_doubling && growth < 0) throw InvalidArgument("growth must be non-negative");
  if (family == Family::Densenet && (dense_layers_per_block <= 0 || growth <= 0)) {
    throw InvalidArgument("DenseNet needs positive dense layers per block and growth");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
}

int ModelConfig::filters_at(int i) const {
  if (growth_doubling) return initial_filters << i;
  return initial_filters + i * growth;
}

ModelConfig reference_fcnn_config() {
  ModelConfig c;
  c.family = Family::Fcnn;
  c.layers_or_blocks = 10;
  c.initial_filters = 32;
  c.growth = 32;
  c.dropout_rate = 0.2;
  return c;
}

ModelConfig reference_unet_config() {
  ModelConfig c;
  c.family = Family::Unet;
  c.layers_or_blocks = 4;
  c.initial_filters = 128;
  c.growth_doubling = true;
  c.growth = 0;
  c.dropout_rate = 0.5;
  return c;
}

ModelConfig reference_densenet_config() {
  ModelConfig c;
  c.family = Family::Densenet;
  c.layers_or_blocks = 4;
  c.dense_layers_per_block = 8;
  c.initial_filters = 16;
  c.growth = 8;
  c.dropout_rate = 0.2;
  return c;
}

namespace {

std::size_t conv_params(std::size_t k, std::size_t in, std::size_t out) { return k * k * in * out + out; }

}  // namespace

std::size_t count_parameters(const ModelConfig& config) {
  config.validate();
  const auto in = static_cast<std::size_t>(config.input_channels);
  std::size_t total = 0;
  switch (config.family) {
    case Family::Fcnn: {
      std::size_t c = in;
      for (int i = 0; i < config.layers_or_blocks; ++i) {
        const auto f = static_cast<std::size_t>(config.filters_at(i));
        total += conv_params(3, c, f);
        c = f;
      }
      return total + conv_params(1, c, 1);
    }
    case Family::Unet: {
      std::size_t c = in;
      for (int l = 0; l <= config.layers_or_blocks; ++l) {
        const auto f = static_cast<std::size_t>(config.filters_at(l));
        total += conv_params(3, c, f) + conv_params(3, f, f);
        c = f;
      }
      for (int l = config.layers_or_blocks - 1; l >= 0; --l) {
        const auto f = static_cast<std::size_t>(config.filters_at(l));
        total += conv_params(2, c, f) + conv_params(3, 2 * f, f) + conv_params(3, f, f);
        c = f;
      }
      return total + conv_params(1, c, 1);
    }
    case Family::Densenet: {
      const auto g = static_cast<std::size_t>(config.growth);
      std::size_t c = static_cast<std::size_t>(config.initial_filters);
      total += conv_params(3, in, c);
      for (int b = 0; b < config.layers_or_blocks; ++b) {
        for (int l = 0; l < config.dense_layers_per_block; ++l) {
          total += conv_params(3, c, g);
          c += g;
        }
        if (b + 1 < config.layers_or_blocks) {
          const std::size_t half = std::max<std::size_t>(c / 2, 1);
          total += conv_params(1, c, half);
          c = half;
        }
      }
      return total + conv_params(1, c, 1);
    }
  }
  return total;
}

// Appends nodes and layers to a model while tracking channel counts.
class GraphBuilder {
 public:
  explicit GraphBuilder(Model& m) : m_(m) {}

  int input(Index channels) { return push({Node::Op::Input, {}, -1, 0.0, channels}); }

  int conv(int x, Index kernel, Index out, const std::string& name, bool feeds_relu) {
    ConvLayer layer;
    layer.name = name;
    layer.kernel = kernel;
    layer.in_channels = m_.nodes_[static_cast<std::size_t>(x)].channels;
    layer.out_channels = out;
    layer.weight = RowMatrix<double>::Zero(kernel * kernel * layer.in_channels, out);
    layer.bias = Vector<double>::Zero(out);
    m_.layers_.push_back(std::move(layer));
    he_init_.push_back(feeds_relu);
    return push({Node::Op::Conv, {x}, static_cast<int>(m_.layers_.size() - 1), 0.0, out});
  }

  int relu(int x) { return push({Node::Op::Relu, {x}, -1, 0.0, channels(x)}); }
  int sigmoid(int x) { return push({Node::Op::Sigmoid, {x}, -1, 0.0, channels(x)}); }
  int dropout(int x, double rate) { return push({Node::Op::Dropout, {x}, -1, rate, channels(x)}); }
  int concat(int a, int b) { return push({Node::Op::Concat, {a, b}, -1, 0.0, channels(a) + channels(b)}); }

  Index channels(int x) const { return m_.nodes_[static_cast<std::size_t>(x)].channels; }

  void initialise(std::uint64_t seed) {
    Rng rng = make_rng(seed, "init");
    for (std::size_t i = 0; i < m_.layers_.size(); ++i) {
      auto& layer = m_.layers_[i];
      const double fan_in = static_cast<double>(layer.kernel * layer.kernel * layer.in_channels);
      const double fan_out = static_cast<double>(layer.kernel * layer.kernel * layer.out_channels);
      const double limit = he_init_[i] ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = dist(rng);
      layer.bias.setZero();
    }
  }

 private:
  int push(Node n) {
    m_.nodes_.push_back(std::move(n));
    return static_cast<int>(m_.nodes_.size() - 1);
  }

  Model& m_;
  std::vector<bool> he_init_;
};

Model Model::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config_ = config;
  GraphBuilder g(m);
  const double rate = config.dropout_rate;
  int x = g.input(config.input_channels);

  switch (config.family) {
    case Family::Fcnn: {
      for (int i = 0; i < config.layers_or_blocks; ++i) {
        const auto tag = std::to_string(i + 1);
        x = g.conv(x, 3, config.filters_at(i), "conv" + tag, true);
        x = g.relu(x);
        x = g.dropout(x, rate);
      }
      break;
    }
    case Family::Unet: {
      // Encoder levels plus a bottleneck, all at full resolution.
      std::vector<int> skips;
      for (int l = 0; l <= config.layers_or_blocks; ++l) {
        const auto tag = std::to_string(l + 1);
        const int f = config.filters_at(l);
        x = g.relu(g.conv(x, 3, f, "down" + tag + "_a", true));
        x = g.dropout(x, rate);
        x = g.relu(g.conv(x, 3, f, "down" + tag + "_b", true));
        if (l < config.layers_or_blocks) skips.push_back(x);
      }
      for (int l = config.layers_or_blocks - 1; l >= 0; --l) {
        const auto tag = std::to_string(l + 1);
        const int f = config.filters_at(l);
        x = g.conv(x, 2, f, "up" + tag + "_proj", false);
        x = g.concat(x, skips[static_cast<std::size_t>(l)]);
        x = g.relu(g.conv(x, 3, f, "up" + tag + "_a", true));
        x = g.relu(g.conv(x, 3, f, "up" + tag + "_b", true));
      }
      break;
    }
    case Family::Densenet: {
      x = g.conv(x, 3, config.initial_filters, "stem", false);
      for (int b = 0; b < config.layers_or_blocks; ++b) {
        const auto btag = std::to_string(b + 1);
        for (int l = 0; l < config.dense_layers_per_block; ++l) {
          int y = g.conv(x, 3, config.growth, "block" + btag + "_layer" + std::to_string(l + 1), true);
          y = g.dropout(g.relu(y), rate);
          x = g.concat(x, y);
        }
        if (b + 1 < config.layers_or_blocks) {
          const Index half = std::max<Index>(g.channels(x) / 2, 1);
          x = g.relu(g.conv(x, 1, half, "transition" + btag, true));
        }
      }
      break;
    }
  }
  x = g.conv(x, 1, 1, "head", false);
  g.sigmoid(x);
  g.initialise(seed);
  return m;
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += l.parameter_count();
  return total;
}

Model::Trace Model::forward(const Tensor4d& x, Rng* dropout_rng) const {
  if (x.c() != config_.input_channels) {
    throw InvalidArgument("model expects " + std::to_string(config_.input_channels) + " input channels, got " +
                          x.shape_string());
  }
  const bool training = mode_ == Mode::Train;
  if (training && dropout_rng == nullptr) throw InvalidArgument("Train-mode forward needs a dropout generator");

  Trace t;
  t.values.resize(nodes_.size());
  t.masks.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    auto in = [&](std::size_t k) -> const Tensor4d& { return t.values[static_cast<std::size_t>(n.inputs[k])]; };
    switch (n.op) {
      case Node::Op::Input: t.values[i] = x; break;
      case Node::Op::Conv: {
        const auto& layer = layers_[static_cast<std::size_t>(n.conv)];
        t.values[i] = conv2d_forward(in(0), layer.weight, layer.bias, layer.kernel);
        break;
      }
      case Node::Op::Relu: t.values[i] = relu_forward(in(0)); break;
      case Node::Op::Sigmoid: t.values[i] = sigmoid_forward(in(0)); break;
      case Node::Op::Dropout:
        if (training && n.rate > 0.0) {
          const auto& src = in(0);
          t.masks[i] = dropout_mask<double>(src.matrix().rows(), src.matrix().cols(), n.rate, *dropout_rng);
          t.values[i] = Tensor4d(src.n(), src.h(), src.w(), src.matrix().cwiseProduct(t.masks[i]).eval());
        } else {
          t.values[i] = in(0);
        }
        break;
      case Node::Op::Concat: t.values[i] = concat_channels(in(0), in(1)); break;
    }
  }
  return t;
}

Tensor4d Model::predict(const Tensor4d& x) const {
  Model::Trace t;
  if (mode_ == Mode::Eval) {
    t = forward(x);
  } else {
    Model eval_view = *this;
    eval_view.set_mode(Mode::Eval);
    t = eval_view.forward(x);
  }
  return std::move(t.values.back());
}

Model::Gradients Model::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.weight.push_back(RowMatrix<double>::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector<double>::Zero(l.bias.size()));
  }
  return g;
}

Model::Gradients Model::backward(const Trace& trace, const Tensor4d& grad_output, bool need_input_grad) const {
  if (trace.values.size() != nodes_.size()) throw InvalidArgument("trace does not belong to this model");
  if (!grad_output.same_shape(trace.output())) {
    throw InvalidArgument("output gradient shape " + grad_output.shape_string() + " does not match " +
                          trace.output().shape_string());
  }
  Gradients g = zero_gradients();
  std::vector<std::optional<Tensor4d>> grads(nodes_.size());
  grads.back() = grad_output;

  auto accumulate = [&](int node, Tensor4d&& gx) {
    auto& slot = grads[static_cast<std::size_t>(node)];
    if (slot) {
      slot->matrix() += gx.matrix();
    } else {
      slot = std::move(gx);
    }
  };

  for (std::size_t ii = nodes_.size(); ii-- > 0;) {
    if (!grads[ii]) continue;
    const Node& n = nodes_[ii];
    const Tensor4d& gy = *grads[ii];
    switch (n.op) {
      case Node::Op::Input:
        if (need_input_grad) g.input = gy;
        break;
      case Node::Op::Conv: {
        const auto& layer = layers_[static_cast<std::size_t>(n.conv)];
        const int src = n.inputs[0];
        const bool want_x = nodes_[static_cast<std::size_t>(src)].op != Node::Op::Input || need_input_grad;
        auto cg = conv2d_backward(gy, trace.values[static_cast<std::size_t>(src)], layer.weight, layer.kernel, want_x);
        g.weight[static_cast<std::size_t>(n.conv)] += cg.grad_w;
        g.bias[static_cast<std::size_t>(n.conv)] += cg.grad_b;
        if (want_x) accumulate(src, std::move(cg.grad_x));
        break;
      }
      case Node::Op::Relu: accumulate(n.inputs[0], relu_backward(gy, trace.values[ii])); break;
      case Node::Op::Sigmoid: accumulate(n.inputs[0], sigmoid_backward(gy, trace.values[ii])); break;
      case Node::Op::Dropout:
        if (trace.masks[ii].size() > 0) {
          accumulate(n.inputs[0], Tensor4d(gy.n(), gy.h(), gy.w(), gy.matrix().cwiseProduct(trace.masks[ii]).eval()));
        } else {
          accumulate(n.inputs[0], Tensor4d(gy));
        }
        break;
      case Node::Op::Concat: {
        auto [ga, gb] = split_channels(gy, nodes_[static_cast<std::size_t>(n.inputs[0])].channels);
        accumulate(n.inputs[0], std::move(ga));
        accumulate(n.inputs[1], std::move(gb));
        break;
      }
    }
    grads[ii].reset();
  }
  return g;
}

}  // namespace sic::nn
