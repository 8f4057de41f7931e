// SPDX-License-Identifier: Apache-2.0

#include "satnet/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "satnet/training.hpp"

namespace satnet {

namespace {

std::string join(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration:";
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_real(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "task",   "L",          "board",      "count",     "train_count", "data_seed",
      "perm_seed", "data",    "n_aux",      "m",         "lr",          "epochs",
      "batch_size", "seed",   "threads",    "tol",       "max_sweeps",  "delta",
      "chain_mode", "eval_mode", "out",     "resume"};
  return keys;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(number) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      problems.push_back("line " + std::to_string(number) + ": empty key");
    } else if (!kv.emplace(key, value).second) {
      problems.push_back("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return kv;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

void apply_env_overrides(KeyValues& kv, const EnvLookup& env) {
  for (const auto& key : config_keys()) {
    std::string name = "SATNET_";
    for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (auto value = env(name)) kv[key] = trim(*value);
  }
}

RunConfig config_from_key_values(const KeyValues& kv) {
  RunConfig cfg;
  std::vector<std::string> problems;
  const auto& keys = config_keys();

  for (const auto& [key, value] : kv) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    auto bad = [&](const char* what) {
      problems.push_back(key + ": expected " + what + ", got '" + value + "'");
    };
    auto integer = [&](int& out) {
      if (!parse_number(value, out)) bad("an integer");
    };
    auto unsigned64 = [&](uint64_t& out) {
      if (!parse_number(value, out)) bad("a non-negative integer");
    };
    auto real = [&](double& out) {
      if (!parse_real(value, out)) bad("a number");
    };

    if (key == "task") cfg.task = value;
    else if (key == "L") integer(cfg.length);
    else if (key == "board") integer(cfg.board);
    else if (key == "count") integer(cfg.count);
    else if (key == "train_count") integer(cfg.train_count);
    else if (key == "data_seed") unsigned64(cfg.data_seed);
    else if (key == "perm_seed") {
      if (!value.empty() && value != "none") {
        uint64_t s = 0;
        if (parse_number(value, s)) cfg.perm_seed = s;
        else bad("a non-negative integer or 'none'");
      }
    }
    else if (key == "data") cfg.data = value;
    else if (key == "n_aux") integer(cfg.n_aux);
    else if (key == "m") integer(cfg.m);
    else if (key == "lr") real(cfg.lr);
    else if (key == "epochs") integer(cfg.epochs);
    else if (key == "batch_size") integer(cfg.batch_size);
    else if (key == "seed") unsigned64(cfg.seed);
    else if (key == "threads") integer(cfg.threads);
    else if (key == "tol") real(cfg.tol);
    else if (key == "max_sweeps") integer(cfg.max_sweeps);
    else if (key == "delta") real(cfg.delta);
    else if (key == "chain_mode") cfg.chain_mode = value;
    else if (key == "eval_mode") cfg.eval_mode = value;
    else if (key == "out") cfg.out = value;
    else if (key == "resume") cfg.resume = value;
  }
  // Report range problems alongside type problems in one pass.
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems())
      if (std::none_of(problems.begin(), problems.end(), [&](const std::string& q) {
            return q.substr(0, q.find(':')) == p.substr(0, p.find(':'));
          }))
        problems.push_back(p);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto require = [&](bool ok, const std::string& message) {
    if (!ok) problems.push_back(message);
  };
  require(task == "parity" || task == "sudoku", "task: must be 'parity' or 'sudoku'");
  if (data.empty()) {
    if (task == "parity") require(length >= 2, "L: must be at least 2");
    if (task == "sudoku") require(board == 4 || board == 9, "board: must be 4 or 9");
    require(count >= 1, "count: must be positive");
    require(train_count >= 1 && train_count < count,
            "train_count: must lie in [1, count - 1] so the test split is non-empty");
  } else {
    require(train_count >= 1, "train_count: must be positive");
  }
  require(task != "parity" || !perm_seed, "perm_seed: only applies to sudoku");
  require(n_aux >= 0, "n_aux: must be non-negative");
  require(m >= 1, "m: must be positive");
  require(lr > 0.0, "lr: must be positive");
  require(epochs >= 0, "epochs: must be non-negative");
  require(batch_size >= 1, "batch_size: must be positive");
  require(threads >= 1, "threads: must be positive");
  require(tol > 0.0, "tol: must be positive");
  require(max_sweeps >= 1, "max_sweeps: must be positive");
  require(delta > 0.0 && delta < 0.5, "delta: must lie in (0, 0.5)");
  require(chain_mode == "soft" || chain_mode == "hard", "chain_mode: must be 'soft' or 'hard'");
  try {
    EvalMode::parse(eval_mode);
  } catch (const std::exception& e) {
    problems.push_back(std::string("eval_mode: ") + e.what());
  }
  require(!out.empty(), "out: must name a directory");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o.precision(17);
  o << "task = " << task << '\n'
    << "L = " << length << '\n'
    << "board = " << board << '\n'
    << "count = " << count << '\n'
    << "train_count = " << train_count << '\n'
    << "data_seed = " << data_seed << '\n'
    << "perm_seed = " << (perm_seed ? std::to_string(*perm_seed) : "none") << '\n';
  if (!data.empty()) o << "data = " << data << '\n';
  o << "n_aux = " << n_aux << '\n'
    << "m = " << m << '\n'
    << "lr = " << lr << '\n'
    << "epochs = " << epochs << '\n'
    << "batch_size = " << batch_size << '\n'
    << "seed = " << seed << '\n'
    << "threads = " << threads << '\n'
    << "tol = " << tol << '\n'
    << "max_sweeps = " << max_sweeps << '\n'
    << "delta = " << delta << '\n'
    << "chain_mode = " << chain_mode << '\n'
    << "eval_mode = " << eval_mode << '\n'
    << "out = " << out << '\n';
  if (!resume.empty()) o << "resume = " << resume << '\n';
  return o.str();
}

RunConfig load_config(const std::string& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::ostringstream text;
  text << in.rdbuf();
  KeyValues kv = parse_key_values(text.str());
  apply_env_overrides(kv, env);
  return config_from_key_values(kv);
}

}  // namespace satnet
