#include "sic/nn/checkpoint.hpp"

#include "sic/binio.hpp"

namespace sic::nn {

namespace {

constexpr char kMagic[4] = {'S', 'I', 'C', 'M'};

void put_array(binio::Writer& w, const std::string& name, const double* data, std::initializer_list<Index> dims) {
  w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
  w.put_bytes(name);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(dims.size()));
  std::size_t count = 1;
  for (Index d : dims) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    count *= static_cast<std::size_t>(d);
  }
  w.put_array(data, count);
}

void get_array(binio::Reader& r, const std::string& expect_name, double* data, std::initializer_list<Index> dims) {
  const auto len = r.get<std::uint16_t>("array name length");
  const std::string name = r.get_bytes(len, "array name");
  if (name != expect_name) {
    throw FormatError(FormatFault::DimensionMismatch, "checkpoint array '" + name + "' where '" + expect_name + "' expected");
  }
  const auto rank = r.get<std::uint8_t>("array rank");
  if (rank != dims.size()) {
    throw FormatError(FormatFault::DimensionMismatch, "checkpoint array '" + name + "' has rank " +
                                                          std::to_string(rank) + ", expected " +
                                                          std::to_string(dims.size()));
  }
  std::size_t count = 1;
  for (Index d : dims) {
    const auto got = r.get<std::uint32_t>("array dims");
    if (static_cast<Index>(got) != d) {
      throw FormatError(FormatFault::DimensionMismatch, "checkpoint array '" + name + "' has dimension " +
                                                            std::to_string(got) + ", expected " + std::to_string(d));
    }
    count *= static_cast<std::size_t>(d);
  }
  r.get_array(data, count, "array values");
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
  const auto& c = model.config();
  binio::Writer w;
  w.put_array(kMagic, 4);
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.family));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.layers_or_blocks));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.dense_layers_per_block));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.initial_filters));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.growth));
  w.put<std::uint8_t>(c.growth_doubling ? 1 : 0);
  w.put<double>(c.dropout_rate);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.input_channels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(2 * model.layers().size()));
  for (const auto& l : model.layers()) {
    put_array(w, l.name + ".weight", l.weight.data(), {l.kernel, l.kernel, l.in_channels, l.out_channels});
    put_array(w, l.name + ".bias", l.bias.data(), {l.out_channels});
  }
  return std::move(w.bytes());
}

Model decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  binio::Reader r(bytes);
  if (r.get_bytes(4, "magic") != std::string(kMagic, 4)) throw FormatError(FormatFault::BadMagic, "not a SICM checkpoint");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError(FormatFault::UnsupportedVersion, "unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  const auto family = r.get<std::uint8_t>("family");
  if (family > 2) throw FormatError(FormatFault::Malformed, "unknown model family code " + std::to_string(family));
  c.family = static_cast<Family>(family);
  c.layers_or_blocks = static_cast<int>(r.get<std::uint32_t>("config"));
  c.dense_layers_per_block = static_cast<int>(r.get<std::uint32_t>("config"));
  c.initial_filters = static_cast<int>(r.get<std::uint32_t>("config"));
  c.growth = static_cast<int>(r.get<std::uint32_t>("config"));
  c.growth_doubling = r.get<std::uint8_t>("config") != 0;
  c.dropout_rate = r.get<double>("config");
  c.input_channels = static_cast<int>(r.get<std::uint32_t>("config"));
  Model m;
  try {
    m = Model::build(c, 0);
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatFault::Malformed, std::string("checkpoint config invalid: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>("array count");
  if (count != 2 * m.layers().size()) {
    throw FormatError(FormatFault::DimensionMismatch, "checkpoint holds " + std::to_string(count) +
                                                          " arrays, architecture needs " +
                                                          std::to_string(2 * m.layers().size()));
  }
  for (auto& l : m.layers()) {
    get_array(r, l.name + ".weight", l.weight.data(), {l.kernel, l.kernel, l.in_channels, l.out_channels});
    get_array(r, l.name + ".bias", l.bias.data(), {l.out_channels});
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatFault::TrailingData, std::to_string(r.remaining()) + " trailing bytes after checkpoint");
  }
  return m;
}

void save_checkpoint(const std::string& path, const Model& model) { binio::write_file(path, encode_checkpoint(model)); }

Model load_checkpoint(const std::string& path) {
  try {
    return decode_checkpoint(binio::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(e.fault(), path + ": " + e.what());
  }
}

void load_parameters_into(Model& dst, const Model& src) {
  if (dst.layers().size() != src.layers().size()) throw InvalidArgument("parameter sets differ in layer count");
  for (std::size_t i = 0; i < dst.layers().size(); ++i) {
    auto& d = dst.layers()[i];
    const auto& s = src.layers()[i];
    if (d.weight.rows() != s.weight.rows() || d.weight.cols() != s.weight.cols() || d.bias.size() != s.bias.size()) {
      throw InvalidArgument("parameter shape mismatch at layer " + d.name);
    }
    d.weight = s.weight;
    d.bias = s.bias;
  }
}

}  // namespace sic::nn
