// SPDX-License-Identifier: Apache-2.0
//
// Optimization stack: per-bit cross-entropy, Adam, and mini-batch epochs
// over a Task. Samples within a batch may be solved on several threads;
// gradients are reduced in a fixed order so a run is reproducible for a
// given thread count.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "satnet/layer.hpp"
#include "satnet/tasks_data.hpp"

namespace satnet {

struct BceResult {
  double loss = 0.0;
  Vector d_z;
};

inline constexpr double kBceClamp = 1e-7;

/// Mean of -[y log z + (1-y) log(1-z)] with z clamped into
/// [kBceClamp, 1 - kBceClamp]; d_z = (z - y) / (z (1 - z)) / t.
BceResult bce_loss(const Vector& z, const Vector& targets);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  Matrix first_moment;
  Matrix second_moment;
  long step = 0;
  AdamOptions options;

  static OptimizerState zeros(Eigen::Index rows, Eigen::Index cols,
                              const AdamOptions& options);
};

struct NonFiniteGradient : std::runtime_error {
  NonFiniteGradient(Eigen::Index row, Eigen::Index col)
      : std::runtime_error("non-finite gradient at (" + std::to_string(row) +
                           ", " + std::to_string(col) + ")"),
        row(row), col(col) {}
  Eigen::Index row, col;
};

/// Bias-corrected Adam update of params in place. Throws NonFiniteGradient
/// (before touching any state) if grads holds a NaN or infinity.
void adam_step(OptimizerState& opt, Matrix& params, const Matrix& grads);

enum class EvalKind { kProb, kThreshold, kRound };

struct EvalMode {
  EvalKind kind = EvalKind::kThreshold;
  /// Hyperplane samples per solve for kRound.
  int round_samples = 1;
  uint64_t seed = 0;

  /// Parses "prob", "threshold", or "round:N".
  static EvalMode parse(const std::string& text);
  std::string str() const;
};

/// Per-sample metrics. In kProb mode the error fields are expectations
/// under independent Bernoulli outputs.
struct SampleOutcome {
  double loss = 0.0;
  double bit_errors = 0.0;
  int bits = 0;
  double sample_correct = 0.0;
};

class Task {
 public:
  virtual ~Task() = default;
  virtual std::size_t size() const = 0;
  /// Differentiable forward pass on sample i. When d_S is non-null the
  /// sample's loss gradient times grad_scale is added to it.
  virtual SampleOutcome train_sample(std::size_t i, const LayerState& state,
                                     const LayerConfig& cfg, Matrix* d_S,
                                     double grad_scale) const = 0;
  virtual SampleOutcome eval_sample(std::size_t i, const LayerState& state,
                                    const LayerConfig& cfg,
                                    const EvalMode& mode) const = 0;
};

/// Single-layer task over explicit samples. Whole-sample correctness
/// defaults to "every thresholded output bit matches"; a judge may replace
/// it (it receives the output probabilities or 0/1 predictions).
class SupervisedTask : public Task {
 public:
  using Judge = std::function<bool(const Sample&, const Vector& predicted)>;

  explicit SupervisedTask(std::vector<Sample> samples, Judge judge = {});

  std::size_t size() const override { return samples_.size(); }
  const Sample& sample(std::size_t i) const { return samples_.at(i); }
  const Judge& judge() const { return judge_; }

  SampleOutcome train_sample(std::size_t i, const LayerState& state,
                             const LayerConfig& cfg, Matrix* d_S,
                             double grad_scale) const override;
  SampleOutcome eval_sample(std::size_t i, const LayerState& state,
                            const LayerConfig& cfg,
                            const EvalMode& mode) const override;

 private:
  std::vector<Sample> samples_;
  Judge judge_;
};

/// Sudoku samples as layer samples: filled-cell bits are inputs (variable
/// = bit index + 1), the rest are supervised outputs.
Sample sudoku_to_sample(const tasks::SudokuSample& s);

/// Layer task for a Sudoku dataset. Whole-board correctness decodes each
/// cell by argmax after undoing the dataset permutation, if any.
SupervisedTask make_sudoku_task(const tasks::SudokuDataset& data,
                                std::size_t begin, std::size_t end);

struct TrainOptions {
  int batch_size = 40;
  uint64_t seed = 0;
  int epoch = 0;
  int threads = 1;
};

struct EpochMetrics {
  double loss = 0.0;
  double bit_error = 0.0;
  double sample_error = 0.0;
  double seconds = 0.0;
  std::size_t samples = 0;
};

/// One pass over the task in a shuffled order derived from (seed, epoch);
/// one Adam step per batch on the batch-mean gradient.
EpochMetrics train_epoch(const Task& task, LayerState& state,
                         const LayerConfig& cfg, OptimizerState& opt,
                         const TrainOptions& options);

EpochMetrics evaluate(const Task& task, const LayerState& state,
                      const LayerConfig& cfg, const EvalMode& mode, int threads = 1);

/// Runs fn(thread, begin, end) over contiguous chunks of [0, count).
void parallel_chunks(std::size_t count, int threads,
                     const std::function<void(int, std::size_t, std::size_t)>& fn);

}  // namespace satnet
