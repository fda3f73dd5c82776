// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "cirrange/nn/adam.hpp"
#include "cirrange/nn/model.hpp"

// Binary model checkpoint, all integers and floats little-endian:
//
//   "CIRM" | u16 version | u32 layer_count | u32 input_rank | u64 dims[input_rank]
//   layer_count x { u8 tag | u32 n_tensors | n_tensors x { u32 rank | u64 dims[rank] | f64 payload } }
//   u8 has_optimizer | [ f64 lr, beta1, beta2, eps | u64 t | per parameter tensor: f64 m[], f64 v[] ]
//   u32 n_attributes | n_attributes x { u16 key_len | key bytes | f64 value }
//
// Layer tags: 1 conv2d, 2 maxpool, 3 flatten, 4 dense, 5 relu.
namespace cirrange::nn {

inline constexpr std::uint16_t kCheckpointVersion = 1;

using Attributes = std::map<std::string, double>;

struct OptimizerSnapshot {
    AdamHyper hyper;
    AdamState state;
};

struct Checkpoint {
    Model model;
    std::optional<OptimizerSnapshot> optimizer;
    Attributes attributes;
};

void save_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cirrange::nn
