// SPDX-License-Identifier: Apache-2.0
//
// Train/eval driver shared by the command-line tool and the acceptance suite.

#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "satnet/config.hpp"
#include "satnet/parity_chain.hpp"
#include "satnet/tasks_data.hpp"
#include "satnet/training.hpp"

namespace satnet {

inline constexpr const char* kMetricsVersionLine = "# satnet-metrics v1";
inline constexpr const char* kMetricsColumns = "epoch,split,loss,bit_error,sample_error,wall_seconds";

/// Loads cfg.data, or generates the dataset the config describes.
tasks::Dataset dataset_for(const RunConfig& cfg);

std::size_t dataset_size(const tasks::Dataset& data);

/// Task over samples [begin, end) of a dataset.
std::unique_ptr<Task> make_task(const tasks::Dataset& data, std::size_t begin,
                                std::size_t end, ChainMode chain_mode);

/// Number of real layer variables a dataset needs.
int real_vars_for(const tasks::Dataset& data);

/// Throws std::invalid_argument when the layer cannot consume the dataset.
void check_compatible(const LayerConfig& layer, const tasks::Dataset& data);

LayerConfig layer_config_for(const RunConfig& cfg, const tasks::Dataset& data);

ChainMode parse_chain_mode(const std::string& text);

struct EpochRecord {
  int epoch = 0;
  EpochMetrics train;
  EpochMetrics test;
};

struct TrainingRun {
  LayerConfig layer;
  LayerState state;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_test_sample_error = 1.0;
};

struct RunOutputs {
  bool write_files = true;
  /// Progress lines; may be null.
  std::ostream* log = nullptr;
};

/// Runs the configured train/eval loop. When writing files, cfg.out receives
/// config.cfg, metrics.csv, weights.bin (final) and weights_best.bin.
TrainingRun run_training(const RunConfig& cfg, const RunOutputs& outputs = {});

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, int epoch, const std::string& split,
                       const EpochMetrics& m);

/// FNV-1a over a file's bytes.
uint64_t file_checksum(const std::string& path);

/// Hex rendering used in manifests.
std::string hex64(uint64_t value);

}  // namespace satnet
