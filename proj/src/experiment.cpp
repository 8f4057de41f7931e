// SPDX-License-Identifier: Apache-2.0

#include "satnet/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "satnet/weights_io.hpp"

namespace satnet {

tasks::Dataset dataset_for(const RunConfig& cfg) {
  if (!cfg.data.empty()) return tasks::read_dataset_file(cfg.data);
  if (cfg.task == "parity") {
    return tasks::ParityDataset{cfg.length, cfg.data_seed,
                                tasks::gen_parity(cfg.length, cfg.count, cfg.data_seed)};
  }
  tasks::SudokuDataset data;
  data.size = cfg.board;
  data.seed = cfg.data_seed;
  data.samples = tasks::gen_sudoku(cfg.board, cfg.count, cfg.data_seed);
  if (cfg.perm_seed) {
    data.perm_seed = cfg.perm_seed;
    data.samples = tasks::permute_dataset(
        data.samples, tasks::Permutation::random(cfg.board * cfg.board * cfg.board, *cfg.perm_seed));
  }
  return data;
}

std::size_t dataset_size(const tasks::Dataset& data) {
  return std::visit([](const auto& d) { return d.samples.size(); }, data);
}

std::unique_ptr<Task> make_task(const tasks::Dataset& data, std::size_t begin,
                                std::size_t end, ChainMode chain_mode) {
  if (begin > end || end > dataset_size(data))
    throw std::out_of_range("make_task: sample range outside the dataset");
  if (const auto* parity = std::get_if<tasks::ParityDataset>(&data)) {
    std::vector<tasks::ParitySample> slice(parity->samples.begin() + begin,
                                           parity->samples.begin() + end);
    return std::make_unique<ParityChainTask>(std::move(slice), chain_mode);
  }
  return std::make_unique<SupervisedTask>(
      make_sudoku_task(std::get<tasks::SudokuDataset>(data), begin, end));
}

int real_vars_for(const tasks::Dataset& data) {
  if (std::holds_alternative<tasks::ParityDataset>(data)) return kChainRealVars;
  const int B = std::get<tasks::SudokuDataset>(data).size;
  return B * B * B;
}

void check_compatible(const LayerConfig& layer, const tasks::Dataset& data) {
  const int want = real_vars_for(data);
  if (layer.n_real != want)
    throw std::invalid_argument("layer has " + std::to_string(layer.n_real) +
                                " real variables but the dataset needs " +
                                std::to_string(want));
}

LayerConfig layer_config_for(const RunConfig& cfg, const tasks::Dataset& data) {
  LayerConfig layer = LayerConfig::make(real_vars_for(data), cfg.n_aux, cfg.m, cfg.seed);
  layer.tol = cfg.tol;
  layer.max_sweeps = cfg.max_sweeps;
  layer.delta = cfg.delta;
  layer.validate();
  return layer;
}

ChainMode parse_chain_mode(const std::string& text) {
  if (text == "soft") return ChainMode::kSoft;
  if (text == "hard") return ChainMode::kHard;
  throw std::invalid_argument("chain mode must be 'soft' or 'hard'");
}

void write_metrics_header(std::ostream& out) {
  out << kMetricsVersionLine << '\n' << kMetricsColumns << '\n';
}

void write_metrics_row(std::ostream& out, int epoch, const std::string& split,
                       const EpochMetrics& m) {
  char line[256];
  std::snprintf(line, sizeof(line), "%d,%s,%.10g,%.10g,%.10g,%.3f\n", epoch, split.c_str(),
                m.loss, m.bit_error, m.sample_error, m.seconds);
  out << line;
}

uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return fnv1a64(bytes.str());
}

std::string hex64(uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

TrainingRun run_training(const RunConfig& cfg, const RunOutputs& outputs) {
  cfg.validate();
  const tasks::Dataset data = dataset_for(cfg);
  const std::size_t total = dataset_size(data);
  if (static_cast<std::size_t>(cfg.train_count) >= total)
    throw ConfigError({"train_count: dataset has only " + std::to_string(total) +
                       " samples, leaving no test split"});
  const std::size_t split = static_cast<std::size_t>(cfg.train_count);
  const ChainMode mode = parse_chain_mode(cfg.chain_mode);
  const auto train = make_task(data, 0, split, mode);
  const auto test = make_task(data, split, total, mode);
  const EvalMode eval_mode = EvalMode::parse(cfg.eval_mode);

  TrainingRun run;
  run.layer = layer_config_for(cfg, data);
  if (cfg.resume.empty()) {
    run.state = init_layer(run.layer);
  } else {
    auto [state, stored] = load_state(cfg.resume);
    if (stored.n_real != run.layer.n_real || stored.n_aux != run.layer.n_aux ||
        stored.m != run.layer.m)
      throw ConfigError({"resume: weight file shape (" + std::to_string(stored.n_real) + ", " +
                         std::to_string(stored.n_aux) + ", " + std::to_string(stored.m) +
                         ") does not match the config"});
    run.layer.k = stored.k;
    run.layer.seed = stored.seed;
    run.state = std::move(state);
  }

  std::ofstream metrics;
  std::filesystem::path dir(cfg.out);
  if (outputs.write_files) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "config.cfg") << cfg.to_text();
    metrics.open(dir / "metrics.csv");
    if (!metrics) throw std::runtime_error("cannot write metrics to '" + dir.string() + "'");
    write_metrics_header(metrics);
    metrics.flush();
  }

  AdamOptions adam;
  adam.lr = cfg.lr;
  OptimizerState opt =
      OptimizerState::zeros(run.state.weights.S.rows(), run.state.weights.S.cols(), adam);
  LayerState best = run.state;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    TrainOptions options;
    options.batch_size = cfg.batch_size;
    options.seed = cfg.seed;
    options.epoch = epoch;
    options.threads = cfg.threads;
    EpochRecord record;
    record.epoch = epoch;
    record.train = train_epoch(*train, run.state, run.layer, opt, options);
    if (test->size() > 0) record.test = evaluate(*test, run.state, run.layer, eval_mode, cfg.threads);
    run.epochs.push_back(record);

    if (run.best_epoch == 0 || record.test.sample_error < run.best_test_sample_error) {
      run.best_epoch = epoch;
      run.best_test_sample_error = record.test.sample_error;
      best = run.state;
    }
    if (outputs.write_files) {
      write_metrics_row(metrics, epoch, "train", record.train);
      write_metrics_row(metrics, epoch, "test", record.test);
      metrics.flush();
    }
    if (outputs.log) {
      char line[256];
      std::snprintf(line, sizeof(line),
                    "epoch %d  train loss %.4f err %.4f  test loss %.4f bit_err %.4f err %.4f  (%.1fs)\n",
                    epoch, record.train.loss, record.train.sample_error, record.test.loss,
                    record.test.bit_error, record.test.sample_error,
                    record.train.seconds + record.test.seconds);
      *outputs.log << line << std::flush;
    }
  }

  if (outputs.write_files) {
    save_state(run.state, run.layer, (dir / "weights.bin").string());
    save_state(best, run.layer, (dir / "weights_best.bin").string());
  }
  return run;
}

}  // namespace satnet
