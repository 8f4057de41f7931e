// SPDX-License-Identifier: Apache-2.0
//
// Tied-weight chain of layers computing parity. Every step uses the same
// layer with variable 1 = carry (previous output, or bit 1 on the first
// step), variable 2 = next input bit, variable 3 = output; auxiliaries
// follow.

#pragma once

#include <span>
#include <vector>

#include "satnet/layer.hpp"
#include "satnet/training.hpp"

namespace satnet {

inline constexpr int kChainCarryVar = 1;
inline constexpr int kChainBitVar = 2;
inline constexpr int kChainOutputVar = 3;
inline constexpr int kChainRealVars = 3;

enum class ChainMode {
  /// Pass the previous step's probability to the next step.
  kSoft,
  /// Pass the value rounded at 0.5; the backward pass treats the rounding
  /// as identity.
  kHard,
};

struct ChainSpec {
  int length = 2;
  ChainMode mode = ChainMode::kSoft;
};

struct ChainContext {
  std::vector<ForwardContext> steps;
  double output = 0.0;
};

/// Runs length-1 steps over `bits` (probabilities in [0, 1]). With
/// `evaluate` set, the carry between steps is always hard-rounded.
ChainContext chain_forward(std::span<const double> bits, const ChainSpec& chain,
                           const LayerState& state, const LayerConfig& cfg,
                           bool evaluate = false);

struct ChainGrads {
  Matrix d_S;
  /// dl/d bit for every input bit.
  Vector d_bits;
  /// Each step's own contribution to d_S, in step order.
  std::vector<Matrix> step_d_S;
};

/// Backpropagates from the final output to step 1, summing d_S over steps.
/// d_output is dl/dz of the final output. d_intermediate, when non-empty,
/// holds the direct loss dependence on each of the first length-2 step
/// outputs and enters as the direct term of the next step's input gradient.
ChainGrads chain_backward(const ChainContext& ctx, const ChainSpec& chain,
                          const LayerState& state, const LayerConfig& cfg,
                          double d_output, const Vector& d_intermediate = Vector(),
                          const SolverOptions* backward_options = nullptr);

/// Parity layer config: 3 real variables and the given auxiliaries.
LayerConfig parity_layer_config(int n_aux, int m, uint64_t seed);

/// Cross-entropy on the final chain output against the parity label.
class ParityChainTask : public Task {
 public:
  ParityChainTask(std::vector<tasks::ParitySample> samples, ChainMode mode);

  std::size_t size() const override { return samples_.size(); }
  SampleOutcome train_sample(std::size_t i, const LayerState& state,
                             const LayerConfig& cfg, Matrix* d_S,
                             double grad_scale) const override;
  /// Hard-rounds every carry; kProb reports the final probability, kRound
  /// rounds each step's output by hyperplane sampling instead of at 0.5.
  SampleOutcome eval_sample(std::size_t i, const LayerState& state,
                            const LayerConfig& cfg,
                            const EvalMode& mode) const override;

 private:
  std::vector<tasks::ParitySample> samples_;
  ChainMode mode_;
};

}  // namespace satnet
