// SPDX-License-Identifier: Apache-2.0
//
// Binary weight files. Layout (all integers and floats little-endian):
//
//   magic      8 bytes  "SATNETWF"
//   version    u32      kWeightFormatVersion
//   n_real     u64
//   n_aux      u64
//   m          u64
//   k          u64
//   tol        f64
//   max_sweeps u64
//   delta      f64
//   seed       u64
//   S          f64[m * (n+1)]   row-major, column 0 is the truth column
//   v_top      f64[k]
//   v_rand     f64[n * k]       one k-vector per variable 1..n
//   checksum   u64              FNV-1a over every preceding byte

#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>

#include "satnet/layer.hpp"

namespace satnet {

inline constexpr uint32_t kWeightFormatVersion = 1;

struct WeightFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_state(const LayerState& state, const LayerConfig& cfg, std::ostream& out);
void save_state(const LayerState& state, const LayerConfig& cfg,
                const std::string& path);

/// Throws WeightFileError on bad magic, unknown version, truncation,
/// checksum mismatch, or inconsistent dimensions.
std::pair<LayerState, LayerConfig> load_state(std::istream& in);
std::pair<LayerState, LayerConfig> load_state(const std::string& path);

/// FNV-1a 64-bit hash, also used for dataset manifests.
uint64_t fnv1a64(std::string_view bytes, uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace satnet
