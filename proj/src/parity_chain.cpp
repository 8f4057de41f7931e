// SPDX-License-Identifier: Apache-2.0

#include "satnet/parity_chain.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace satnet {

namespace {

constexpr std::array<int, 2> kChainInputs = {kChainCarryVar, kChainBitVar};

double round_half(double z) { return z > 0.5 ? 1.0 : 0.0; }

}  // namespace

ChainContext chain_forward(std::span<const double> bits, const ChainSpec& chain,
                           const LayerState& state, const LayerConfig& cfg,
                           bool evaluate) {
  if (chain.length < 2) throw std::invalid_argument("chain length must be >= 2");
  if (static_cast<int>(bits.size()) != chain.length)
    throw std::invalid_argument("chain input has wrong length");
  if (cfg.n_real != kChainRealVars)
    throw std::invalid_argument("chain layer needs exactly 3 real variables");
  const bool hard = evaluate || chain.mode == ChainMode::kHard;

  ChainContext ctx;
  ctx.steps.reserve(static_cast<std::size_t>(chain.length - 1));
  double carry = bits[0];
  for (int d = 1; d < chain.length; ++d) {
    Vector z_in(2);
    z_in << carry, bits[d];
    ctx.steps.push_back(forward(kChainInputs, z_in, state, cfg));
    const double out = ctx.steps.back().z(kChainOutputVar);
    carry = hard ? round_half(out) : out;
  }
  ctx.output = ctx.steps.back().z(kChainOutputVar);
  return ctx;
}

ChainGrads chain_backward(const ChainContext& ctx, const ChainSpec& chain,
                          const LayerState& state, const LayerConfig& cfg,
                          double d_output, const Vector& d_intermediate,
                          const SolverOptions* backward_options) {
  const int steps = static_cast<int>(ctx.steps.size());
  if (steps != chain.length - 1) throw std::invalid_argument("chain context length mismatch");
  if (d_intermediate.size() != 0 && d_intermediate.size() != steps - 1)
    throw std::invalid_argument("d_intermediate must cover length-2 outputs");

  ChainGrads out;
  out.d_S = Matrix::Zero(state.weights.S.rows(), state.weights.S.cols());
  out.d_bits = Vector::Zero(chain.length);
  out.step_d_S.resize(static_cast<std::size_t>(steps));

  double d_out = d_output;
  for (int d = steps; d >= 1; --d) {
    const ForwardContext& step = ctx.steps[static_cast<std::size_t>(d - 1)];
    Vector d_z_out = Vector::Zero(static_cast<Eigen::Index>(step.outputs.size()));
    d_z_out(step.position[kChainOutputVar]) = d_out;
    // The carry into step d is step d-1's output; any direct loss term on
    // it is added as the direct part of this step's input gradient.
    Vector direct = Vector::Zero(2);
    if (d >= 2 && d_intermediate.size() != 0) direct(0) = d_intermediate(d - 2);
    GradBundle g = backward(step, state, cfg, d_z_out, direct, backward_options);
    out.d_S += g.d_S;
    out.step_d_S[static_cast<std::size_t>(d - 1)] = std::move(g.d_S);
    out.d_bits(d) += g.d_z_in(1);
    if (d == 1)
      out.d_bits(0) += g.d_z_in(0);
    else
      d_out = g.d_z_in(0);
  }
  return out;
}

LayerConfig parity_layer_config(int n_aux, int m, uint64_t seed) {
  return LayerConfig::make(kChainRealVars, n_aux, m, seed);
}

ParityChainTask::ParityChainTask(std::vector<tasks::ParitySample> samples, ChainMode mode)
    : samples_(std::move(samples)), mode_(mode) {}

namespace {

std::vector<double> as_probabilities(const tasks::ParitySample& s) {
  return {s.bits.begin(), s.bits.end()};
}

}  // namespace

SampleOutcome ParityChainTask::train_sample(std::size_t i, const LayerState& state,
                                            const LayerConfig& cfg, Matrix* d_S,
                                            double grad_scale) const {
  const auto& s = samples_.at(i);
  const ChainSpec chain{static_cast<int>(s.bits.size()), mode_};
  const std::vector<double> bits = as_probabilities(s);
  const ChainContext ctx = chain_forward(bits, chain, state, cfg);

  Vector z(1), y(1);
  z << ctx.output;
  y << s.parity;
  const BceResult bce = bce_loss(z, y);
  SampleOutcome out;
  out.loss = bce.loss;
  out.bits = 1;
  out.bit_errors = (round_half(ctx.output) != s.parity) ? 1.0 : 0.0;
  out.sample_correct = 1.0 - out.bit_errors;
  if (d_S) *d_S += grad_scale * chain_backward(ctx, chain, state, cfg, bce.d_z(0)).d_S;
  return out;
}

SampleOutcome ParityChainTask::eval_sample(std::size_t i, const LayerState& state,
                                           const LayerConfig& cfg,
                                           const EvalMode& mode) const {
  const auto& s = samples_.at(i);
  const int length = static_cast<int>(s.bits.size());
  SampleOutcome out;
  out.bits = 1;
  double prediction = 0.0;
  double z_final = 0.0;
  if (mode.kind == EvalKind::kRound) {
    double carry = s.bits[0];
    for (int d = 1; d < length; ++d) {
      Vector z_in(2);
      z_in << carry, static_cast<double>(s.bits[d]);
      const ForwardContext step = forward(kChainInputs, z_in, state, cfg);
      const Assignment a =
          randomized_round(step.V, state.weights, mode.round_samples,
                           mode.seed + i * static_cast<uint64_t>(length) + d,
                           RoundObjective::kEnergy);
      carry = a[kChainOutputVar - 1] > 0 ? 1.0 : 0.0;
      z_final = step.z(kChainOutputVar);
    }
    prediction = carry;
  } else {
    const std::vector<double> bits = as_probabilities(s);
    const ChainContext ctx = chain_forward(bits, {length, mode_}, state, cfg, true);
    z_final = ctx.output;
    prediction = round_half(z_final);
  }
  Vector z(1), y(1);
  z << z_final;
  y << s.parity;
  out.loss = bce_loss(z, y).loss;
  if (mode.kind == EvalKind::kProb) {
    out.bit_errors = std::abs(z_final - s.parity);
  } else {
    out.bit_errors = (prediction != s.parity) ? 1.0 : 0.0;
  }
  out.sample_correct = 1.0 - out.bit_errors;
  return out;
}

}  // namespace satnet
