// SPDX-License-Identifier: Apache-2.0

#include "satnet/weights_io.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace satnet {
namespace {

std::string serialize(const LayerState& state, const LayerConfig& cfg) {
  std::ostringstream out(std::ios::binary);
  save_state(state, cfg, out);
  return out.str();
}

TEST(WeightsIo, SaveLoadSaveIsByteIdentical) {
  const LayerConfig cfg = LayerConfig::make(5, 3, 7, 42);
  const LayerState state = init_layer(cfg);
  const std::string first = serialize(state, cfg);
  std::istringstream in(first, std::ios::binary);
  auto [loaded, loaded_cfg] = load_state(in);
  EXPECT_EQ(serialize(loaded, loaded_cfg), first);
  EXPECT_EQ(loaded.weights.S, state.weights.S);
  EXPECT_EQ(loaded.v_top, state.v_top);
  EXPECT_EQ(loaded.v_rand, state.v_rand);
  EXPECT_EQ(loaded_cfg.n_real, 5);
  EXPECT_EQ(loaded_cfg.n_aux, 3);
  EXPECT_EQ(loaded_cfg.m, 7);
  EXPECT_EQ(loaded_cfg.k, cfg.k);
  EXPECT_EQ(loaded_cfg.seed, 42u);
  EXPECT_EQ(loaded_cfg.tol, cfg.tol);
  EXPECT_EQ(loaded_cfg.delta, cfg.delta);
}

TEST(WeightsIo, LoadedLayerReproducesForward) {
  const LayerConfig cfg = LayerConfig::make(4, 2, 6, 9);
  const LayerState state = init_layer(cfg);
  std::istringstream in(serialize(state, cfg), std::ios::binary);
  auto [loaded, loaded_cfg] = load_state(in);
  const std::vector<int> inputs = {1, 3};
  const Vector z = (Vector(2) << 0.2, 0.9).finished();
  EXPECT_EQ(forward(inputs, z, state, cfg).z_out, forward(inputs, z, loaded, loaded_cfg).z_out);
}

TEST(WeightsIo, HeaderIsLittleEndian) {
  const LayerConfig cfg = LayerConfig::make(2, 1, 3, 1);
  const std::string bytes = serialize(init_layer(cfg), cfg);
  EXPECT_EQ(bytes.substr(0, 8), "SATNETWF");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), kWeightFormatVersion);
  EXPECT_EQ(bytes[9], 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2u);  // n_real
  const std::size_t expected = 8 + 4 + 4 * 8 + 8 + 8 + 8 + 8 + 3 * 4 * 8 + cfg.k * 8 + 3 * cfg.k * 8 + 8;
  EXPECT_EQ(bytes.size(), expected);
}

TEST(WeightsIo, Errors) {
  const LayerConfig cfg = LayerConfig::make(3, 1, 2, 5);
  const std::string good = serialize(init_layer(cfg), cfg);
  auto load = [](const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return load_state(in);
  };

  std::string bad_version = good;
  bad_version[8] = 7;
  try {
    load(bad_version);
    FAIL() << "expected an error";
  } catch (const WeightFileError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(load(bad_magic), WeightFileError);

  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x10;
  EXPECT_THROW(load(flipped), WeightFileError);

  EXPECT_THROW(load(good.substr(0, good.size() - 3)), WeightFileError);
  EXPECT_THROW(load(""), WeightFileError);
  EXPECT_THROW(load_state(std::string("/nonexistent/weights.bin")), WeightFileError);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

}  // namespace
}  // namespace satnet
