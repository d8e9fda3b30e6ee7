#pragma once

// Checkpoint container "SICM": magic | version u16 | family u8 |
// layers_or_blocks u32 | dense_layers_per_block u32 | initial_filters u32 |
// growth u32 | growth_doubling u8 | dropout_rate f64 | input_channels u32 |
// array count u32 | per array: name length u16, name, rank u8, dims u32 x rank, f64 data.

#include <cstdint>
#include <string>
#include <vector>

#include "sic/nn/model.hpp"

namespace sic::nn {

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Model& model);
/// Rebuilds the architecture from the stored config and loads every array.
/// Throws FormatError on bad magic/version, truncation, trailing bytes or
/// any count/shape/name mismatch against the rebuilt model.
Model decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

/// Copies parameters of `src` into `dst`; both must share the architecture.
void load_parameters_into(Model& dst, const Model& src);

}  // namespace sic::nn
