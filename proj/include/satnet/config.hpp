// SPDX-License-Identifier: Apache-2.0
//
// Flat key = value run configuration. A config fully determines a training
// run: data generation (or a dataset path), layer sizes, optimizer, seeds and
// output locations. Environment variables SATNET_<KEY> override file values.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace satnet {

/// Validation failure carrying every problem found, one per entry.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct RunConfig {
  std::string task;  // parity | sudoku
  int length = 20;   // parity L
  int board = 4;     // sudoku B
  int count = 10000;
  int train_count = 9000;
  uint64_t data_seed = 1;
  std::optional<uint64_t> perm_seed;
  /// Dataset file; when set, replaces generation (length/board/count/seeds
  /// are then taken from the file).
  std::string data;

  int n_aux = 4;
  int m = 8;
  double lr = 1e-3;
  int epochs = 10;
  int batch_size = 40;
  uint64_t seed = 1;
  int threads = 1;
  double tol = 1e-4;
  int max_sweeps = 40;
  double delta = 0.05;
  std::string chain_mode = "soft";  // soft | hard
  std::string eval_mode = "threshold";

  std::string out = "run";
  std::string resume;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
  /// Canonical key = value text; parse(to_text()) reproduces the config.
  std::string to_text() const;
};

using KeyValues = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment. Throws ConfigError on
/// malformed lines and duplicate keys.
KeyValues parse_key_values(const std::string& text);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// getenv-backed lookup.
EnvLookup process_env();

/// Applies SATNET_<UPPERCASE KEY> overrides for every known key.
void apply_env_overrides(KeyValues& kv, const EnvLookup& env);

/// Typed conversion and validation; unknown keys and bad values are all
/// reported together.
RunConfig config_from_key_values(const KeyValues& kv);

/// Reads a config file, applies environment overrides, and validates.
RunConfig load_config(const std::string& path, const EnvLookup& env = process_env());

/// Names of every accepted key.
const std::vector<std::string>& config_keys();

}  // namespace satnet
