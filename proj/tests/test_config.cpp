// SPDX-License-Identifier: Apache-2.0

#include "satnet/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace satnet {
namespace {

EnvLookup fake_env(std::map<std::string, std::string> vars) {
  return [vars](const std::string& name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

bool mentions(const ConfigError& e, const std::string& needle) {
  for (const auto& p : e.problems())
    if (p.find(needle) != std::string::npos) return true;
  return false;
}

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  const KeyValues kv = parse_key_values("# run\ntask = parity   # inline\n\n  lr=0.1\nout = runs/a b\n");
  EXPECT_EQ(kv.at("task"), "parity");
  EXPECT_EQ(kv.at("lr"), "0.1");
  EXPECT_EQ(kv.at("out"), "runs/a b");
  EXPECT_EQ(kv.size(), 3u);
}

TEST(KeyValues, RejectsMalformedLinesAndDuplicates) {
  try {
    parse_key_values("task = parity\nbroken line\nlr = 1\nlr = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.problems().size(), 2u);
    EXPECT_TRUE(mentions(e, "line 2"));
    EXPECT_TRUE(mentions(e, "lr"));
  }
}

TEST(RunConfig, TypedConversion) {
  const RunConfig c = config_from_key_values(parse_key_values(
      "task = sudoku\nboard = 4\nn_aux = 16\nm = 64\nlr = 2e-3\nperm_seed = 5\nepochs = 0\n"));
  EXPECT_EQ(c.task, "sudoku");
  EXPECT_EQ(c.n_aux, 16);
  EXPECT_DOUBLE_EQ(c.lr, 2e-3);
  EXPECT_EQ(c.perm_seed, std::optional<uint64_t>(5));
  EXPECT_EQ(c.epochs, 0);
  const RunConfig parity = config_from_key_values(parse_key_values("task = parity\nL = 12\nperm_seed = none\n"));
  EXPECT_EQ(parity.length, 12);
  EXPECT_FALSE(parity.perm_seed);
}

TEST(RunConfig, ItemizesEveryProblem) {
  try {
    config_from_key_values(parse_key_values(
        "task = chess\nm = 0\nlr = fast\nbatch_size = -3\nwidth = 3\nchain_mode = sideways\n"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_GE(e.problems().size(), 6u) << e.what();
    for (const char* key : {"task", "m", "lr", "batch_size", "width", "chain_mode"})
      EXPECT_TRUE(mentions(e, key)) << key << "\n" << e.what();
    EXPECT_NE(std::string(e.what()).find("invalid configuration"), std::string::npos);
  }
}

TEST(RunConfig, CrossFieldChecks) {
  RunConfig c;
  c.task = "sudoku";
  c.board = 5;
  c.count = 10;
  c.train_count = 10;
  c.eval_mode = "round:0";
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_TRUE(mentions(e, "board"));
    EXPECT_TRUE(mentions(e, "train_count"));
    EXPECT_TRUE(mentions(e, "eval_mode"));
  }
}

TEST(RunConfig, CanonicalTextRoundTrips) {
  RunConfig c;
  c.task = "sudoku";
  c.lr = 0.1;
  c.perm_seed = 3;
  c.chain_mode = "hard";
  const RunConfig back = config_from_key_values(parse_key_values(c.to_text()));
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.perm_seed, c.perm_seed);
  EXPECT_DOUBLE_EQ(back.lr, 0.1);
}

TEST(RunConfig, EveryKeyAppearsInCanonicalText) {
  RunConfig c;
  c.task = "parity";
  const KeyValues kv = parse_key_values(c.to_text());
  // Path keys are written only when set.
  for (const auto& key : config_keys())
    EXPECT_EQ(kv.count(key), key == "data" || key == "resume" ? 0u : 1u) << key;
  c.data = "d.txt";
  c.resume = "w.bin";
  EXPECT_EQ(parse_key_values(c.to_text()).size(), config_keys().size());
}

TEST(Env, OverridesFileValues) {
  KeyValues kv = parse_key_values("task = parity\nlr = 0.1\n");
  apply_env_overrides(kv, fake_env({{"SATNET_LR", "0.5"}, {"SATNET_N_AUX", "7"}, {"SATNET_L", "9"},
                                    {"UNRELATED", "1"}}));
  const RunConfig c = config_from_key_values(kv);
  EXPECT_DOUBLE_EQ(c.lr, 0.5);
  EXPECT_EQ(c.n_aux, 7);
  EXPECT_EQ(c.length, 9);
}

TEST(Env, LoadConfigAppliesOverridesAndValidates) {
  const auto path = std::filesystem::temp_directory_path() / "satnet_test_config.cfg";
  {
    std::ofstream f(path);
    f << "task = parity\nepochs = 3\n";
  }
  EXPECT_EQ(load_config(path.string(), fake_env({})).epochs, 3);
  EXPECT_EQ(load_config(path.string(), fake_env({{"SATNET_EPOCHS", "5"}})).epochs, 5);
  EXPECT_THROW(load_config(path.string(), fake_env({{"SATNET_EPOCHS", "x"}})), ConfigError);
  EXPECT_THROW(load_config((path.string() + ".missing"), fake_env({})), ConfigError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace satnet
