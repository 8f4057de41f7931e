// SPDX-License-Identifier: Apache-2.0

#include "satnet/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "satnet/config.hpp"
#include "satnet/dimacs.hpp"
#include "satnet/experiment.hpp"
#include "satnet/gradcheck.hpp"
#include "satnet/oracle.hpp"
#include "satnet/weights_io.hpp"

namespace satnet::cli {

namespace {

/// Raised for problems in the invocation itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical check fails; maps to kExitNumerical.
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

uint64_t to_u64(const std::string& key, const std::string& value) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw UsageError(key + ": expected a non-negative integer, got '" + value + "'");
  return out;
}

int to_int(const std::string& key, const std::string& value) {
  const uint64_t v = to_u64(key, value);
  if (v > static_cast<uint64_t>(std::numeric_limits<int>::max()))
    throw UsageError(key + ": value too large");
  return static_cast<int>(v);
}

// gen ---------------------------------------------------------------------

struct GenArgs {
  std::string task;
  std::vector<std::string> params;
  std::optional<uint64_t> seed;
  std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  std::map<std::string, std::string> kv;
  for (const auto& p : a.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + p + "'");
    kv[p.substr(0, eq)] = p.substr(eq + 1);
  }
  auto take = [&](const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  tasks::Dataset data;
  std::ostringstream params;
  uint64_t seed = to_u64("seed", take("seed", "1"));
  if (a.seed) seed = *a.seed;
  const int count = to_int("count", take("count", "10000"));
  if (count < 1) throw UsageError("count: must be positive");

  if (a.task == "parity") {
    const int L = to_int("L", take("L", "20"));
    if (L < 2) throw UsageError("L: must be at least 2");
    data = tasks::ParityDataset{L, seed, tasks::gen_parity(L, count, seed)};
    params << "L = " << L << '\n';
  } else if (a.task == "sudoku") {
    const int B = to_int("B", take("B", "4"));
    if (B != 4 && B != 9) throw UsageError("B: must be 4 or 9");
    tasks::SudokuDataset s;
    s.size = B;
    s.seed = seed;
    s.samples = tasks::gen_sudoku(B, count, seed);
    params << "B = " << B << '\n';
    const std::string perm = take("perm_seed", "");
    if (!perm.empty()) {
      s.perm_seed = to_u64("perm_seed", perm);
      s.samples = tasks::permute_dataset(s.samples, tasks::Permutation::random(B * B * B, *s.perm_seed));
      params << "perm_seed = " << *s.perm_seed << '\n';
    }
    data = std::move(s);
  } else {
    throw UsageError("unknown task '" + a.task + "' (expected parity or sudoku)");
  }
  if (!kv.empty()) throw UsageError("unknown parameter '" + kv.begin()->first + "'");

  {
    std::ofstream file(a.out);
    if (!file) throw std::runtime_error("cannot write '" + a.out + "'");
    tasks::write_dataset(file, data);
    if (!file) throw std::runtime_error("write failed for '" + a.out + "'");
  }
  const std::string manifest_path = a.out + ".manifest";
  const std::string checksum = hex64(file_checksum(a.out));
  std::ofstream manifest(manifest_path);
  if (!manifest) throw std::runtime_error("cannot write '" + manifest_path + "'");
  manifest << "# satnet-manifest v1\n"
           << "dataset = " << std::filesystem::path(a.out).filename().string() << '\n'
           << "task = " << a.task << '\n'
           << params.str() << "count = " << count << '\n'
           << "seed = " << seed << '\n'
           << "checksum = fnv1a64:" << checksum << '\n';
  out << "wrote " << count << " samples to " << a.out << " (fnv1a64 " << checksum << ")\n";
  return kExitOk;
}

// train -------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  KeyValues kv;
  {
    std::ifstream in(a.config);
    if (!in) throw ConfigError({"cannot read config file '" + a.config + "'"});
    std::ostringstream text;
    text << in.rdbuf();
    kv = parse_key_values(text.str());
  }
  apply_env_overrides(kv, process_env());
  if (a.seed) kv["seed"] = std::to_string(*a.seed);
  if (a.threads) kv["threads"] = std::to_string(*a.threads);
  if (!a.out.empty()) kv["out"] = a.out;
  const RunConfig cfg = config_from_key_values(kv);

  const TrainingRun run = run_training(cfg, {true, &out});
  out << "final weights: " << (std::filesystem::path(cfg.out) / "weights.bin").string() << '\n';
  if (!run.epochs.empty()) {
    char line[160];
    std::snprintf(line, sizeof(line), "best epoch %d, test sample error %.4f\n", run.best_epoch,
                  run.best_test_sample_error);
    out << line;
  }
  return kExitOk;
}

// eval --------------------------------------------------------------------

struct EvalArgs {
  std::string weights;
  std::string data;
  std::string mode = "threshold";
  std::string chain_mode = "soft";
  int threads = 1;
  std::optional<uint64_t> seed;
  std::size_t from = 0;
  std::optional<std::size_t> to;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  EvalMode mode = EvalMode::parse(a.mode);
  if (a.seed) mode.seed = *a.seed;
  auto [state, layer] = load_state(a.weights);
  const tasks::Dataset data = tasks::read_dataset_file(a.data);
  check_compatible(layer, data);
  const std::size_t total = dataset_size(data);
  const std::size_t end = std::min(a.to.value_or(total), total);
  if (a.from >= end) throw UsageError("dataset range is empty");
  const auto task = make_task(data, a.from, end, parse_chain_mode(a.chain_mode));
  const EpochMetrics m = evaluate(*task, state, layer, mode, a.threads);
  char line[256];
  std::snprintf(line, sizeof(line),
                "samples = %zu\nmode = %s\nloss = %.6f\nbit_accuracy = %.6f\nsample_accuracy = %.6f\n",
                m.samples, mode.str().c_str(), m.loss, 1.0 - m.bit_error, 1.0 - m.sample_error);
  out << line;
  return kExitOk;
}

// solve -------------------------------------------------------------------

struct SolveArgs {
  std::string weights;
  std::string cnf;
  std::string mode = "threshold";
  int rounds = 32;
  uint64_t seed = 1;
  bool oracle = false;
};

int solve_cnf_file(const SolveArgs& a, std::ostream& out) {
  const CnfInstance cnf = read_dimacs_file(a.cnf);
  if (a.rounds < 1) throw UsageError("--rounds must be positive");
  const CnfSolution sol = solve_cnf(cnf, a.rounds, a.seed);
  out << "c sweeps " << sol.stats.sweeps << (sol.stats.converged ? " converged" : " not converged")
      << '\n';
  out << "s " << sol.satisfied << " of " << cnf.clauses.size() << " clauses satisfied\n";
  if (a.oracle) {
    const auto best = oracle::brute_force_maxsat(cnf);
    out << "c optimum " << best.count << '\n';
  }
  out << 'v';
  for (int i = 0; i < cnf.num_vars; ++i)
    out << ' ' << (sol.assignment[static_cast<std::size_t>(i)] > 0 ? i + 1 : -(i + 1));
  out << " 0\n";
  return kExitOk;
}

int solve_bits(const SolveArgs& a, std::istream& in, std::ostream& out) {
  auto [state, layer] = load_state(a.weights);
  std::string text;
  if (!(in >> text)) throw UsageError("expected a bit string on stdin");
  if (static_cast<int>(text.size()) != layer.n_real)
    throw UsageError("bit string has " + std::to_string(text.size()) + " symbols; layer has " +
                     std::to_string(layer.n_real) + " real variables");
  std::vector<int> inputs;
  std::vector<double> z;
  for (int i = 0; i < layer.n_real; ++i) {
    const char c = text[static_cast<std::size_t>(i)];
    if (c == '0' || c == '1') {
      inputs.push_back(i + 1);
      z.push_back(c == '1' ? 1.0 : 0.0);
    } else if (c != '?') {
      throw UsageError(std::string("unexpected symbol '") + c + "' (use 0, 1 or ?)");
    }
  }
  const Vector z_in = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
  const ForwardContext ctx = forward(inputs, z_in, state, layer);
  EvalMode mode = EvalMode::parse(a.mode);
  Assignment rounded;
  if (mode.kind == EvalKind::kRound)
    rounded = randomized_round(ctx.V, state.weights, mode.round_samples, a.seed, RoundObjective::kEnergy);

  std::string bits = text;
  std::ostringstream probs;
  probs.precision(6);
  for (int i = 1; i <= layer.n_real; ++i) {
    const int pos = ctx.position[static_cast<std::size_t>(i)];
    if (pos < 0) continue;
    const double p = ctx.z_out(pos);
    probs << ' ' << i << ':' << p;
    const bool one = mode.kind == EvalKind::kRound ? rounded[static_cast<std::size_t>(i - 1)] > 0 : p > 0.5;
    bits[static_cast<std::size_t>(i - 1)] = one ? '1' : '0';
  }
  if (mode.kind == EvalKind::kProb) out << "p" << probs.str() << '\n';
  out << bits << '\n';
  return kExitOk;
}

// gradcheck / inspect ------------------------------------------------------

int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out) {
  const GradcheckReport report = run_gradcheck(o);
  out << report.text(o);
  if (!report.passed) throw CheckFailed("gradient check failed");
  return kExitOk;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  auto [state, layer] = load_state(path);
  const Matrix& S = state.weights.S;
  char line[512];
  std::snprintf(line, sizeof(line),
                "file = %s\nchecksum = fnv1a64:%s\nn_real = %d\nn_aux = %d\nm = %d\nk = %d\n"
                "tol = %g\nmax_sweeps = %d\ndelta = %g\nseed = %llu\n"
                "S_fro_norm = %.6g\nS_max_abs = %.6g\n",
                path.c_str(), hex64(file_checksum(path)).c_str(), layer.n_real, layer.n_aux, layer.m,
                layer.k, layer.tol, layer.max_sweeps, layer.delta,
                static_cast<unsigned long long>(layer.seed), S.norm(), S.cwiseAbs().maxCoeff());
  out << line;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Differentiable MAXSAT layer: data generation, training and checks", "satnet"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a dataset and its manifest");
  gen_cmd->add_option("task", gen.task, "parity | sudoku")->required();
  gen_cmd->add_option("params", gen.params, "key=value parameters (L, B, count, seed, perm_seed)");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Dataset path")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a layer from a config file");
  train_cmd->add_option("--config", train.config, "key = value run config")->required();
  train_cmd->add_option("--seed", train.seed, "Override the config seed");
  train_cmd->add_option("--threads", train.threads, "Override the config thread count");
  train_cmd->add_option("--out", train.out, "Override the output directory");

  EvalArgs eval;
  std::optional<std::size_t> eval_from;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate weights on a dataset");
  eval_cmd->add_option("--weights", eval.weights)->required();
  eval_cmd->add_option("--data", eval.data)->required();
  eval_cmd->add_option("--mode", eval.mode, "prob | threshold | round:N");
  eval_cmd->add_option("--seed", eval.seed, "Rounding seed");
  eval_cmd->add_option("--threads", eval.threads)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--from", eval_from, "First sample index");
  eval_cmd->add_option("--to", eval.to, "One past the last sample index");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one instance (bits on stdin, or --cnf)");
  auto* weights_opt = solve_cmd->add_option("--weights", solve.weights);
  auto* cnf_opt = solve_cmd->add_option("--cnf", solve.cnf, "DIMACS file");
  weights_opt->excludes(cnf_opt);
  solve_cmd->add_option("--mode", solve.mode, "prob | threshold | round:N");
  solve_cmd->add_option("--rounds", solve.rounds, "Hyperplanes for --cnf");
  solve_cmd->add_option("--seed", solve.seed);
  solve_cmd->add_flag("--oracle", solve.oracle, "Also report the brute-force optimum");

  GradcheckOptions gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gc_cmd->add_option("--instances", gc.instances)->check(CLI::PositiveNumber);
  gc_cmd->add_option("--seed", gc.seed);
  gc_cmd->add_option("--tolerance", gc.tolerance);
  gc_cmd->add_option("--coverage", gc.coverage);
  gc_cmd->add_option("--worst", gc.worst_tolerance);
  gc_cmd->add_option("--max-real", gc.max_real);
  gc_cmd->add_option("--max-aux", gc.max_aux);
  gc_cmd->add_option("--max-clauses", gc.max_clauses);
  gc_cmd->add_option("--forward-tol", gc.forward_tol);
  gc_cmd->add_option("--step", gc.h, "Finite-difference step");

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a weight file");
  inspect_cmd->add_option("weights", inspect_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*train_cmd) return cmd_train(train, out);
    if (*eval_cmd) {
      if (eval_from) eval.from = *eval_from;
      return cmd_eval(eval, out);
    }
    if (*solve_cmd) {
      if (!solve.cnf.empty()) return solve_cnf_file(solve, out);
      if (solve.weights.empty()) throw UsageError("solve needs --weights or --cnf");
      return solve_bits(solve, in, out);
    }
    if (*gc_cmd) return cmd_gradcheck(gc, out);
    if (*inspect_cmd) return cmd_inspect(inspect_path, out);
  } catch (const CheckFailed& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NonFiniteGradient& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace satnet::cli
