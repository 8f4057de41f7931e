// SPDX-License-Identifier: Apache-2.0

#include "satnet/parity_chain.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "satnet/gradcheck.hpp"
#include "satnet/oracle.hpp"
#include "test_support.hpp"

namespace satnet {
namespace {

struct Planted {
  LayerConfig cfg;
  LayerState state;
};

// A layer trained on the XOR truth table, used as a parity step.
const Planted& planted_xor() {
  static const Planted p = [] {
    std::vector<Sample> rows;
    for (int rep = 0; rep < 10; ++rep)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          rows.push_back({{1, 2}, (Vector(2) << a, b).finished(), {3}, Vector::Constant(1, a ^ b)});
    const SupervisedTask task(rows);
    Planted out{parity_layer_config(4, 8, 2), {}};
    out.state = init_layer(out.cfg);
    AdamOptions adam;
    adam.lr = 0.1;
    OptimizerState opt = OptimizerState::zeros(out.state.weights.S.rows(), out.state.weights.S.cols(), adam);
    for (int epoch = 1; epoch <= 60; ++epoch) {
      TrainOptions o;
      o.batch_size = 4;
      o.epoch = epoch;
      train_epoch(task, out.state, out.cfg, opt, o);
    }
    return out;
  }();
  return p;
}

// Small random layer solved tightly enough for finite differences.
Planted tight_layer(uint64_t seed) {
  Planted p{parity_layer_config(1, 4, seed), {}};
  p.cfg.tol = 1e-11;
  p.cfg.max_sweeps = 200000;
  p.state = init_layer(p.cfg);
  return p;
}

const SolverOptions kTightBackward{1e-13, 200000};

TEST(ParityChain, LengthTwoIsOneLayerCall) {
  const Planted& p = planted_xor();
  const std::vector<double> bits = {1.0, 0.0};
  const ChainContext chain = chain_forward(bits, {2, ChainMode::kSoft}, p.state, p.cfg);
  const std::vector<int> inputs = {1, 2};
  const ForwardContext single = forward(inputs, (Vector(2) << 1.0, 0.0).finished(), p.state, p.cfg);
  ASSERT_EQ(chain.steps.size(), 1u);
  EXPECT_EQ(chain.output, single.z(kChainOutputVar));
}

TEST(ParityChain, PlantedXorComputesParity) {
  const Planted& p = planted_xor();
  for (int code = 0; code < 16; ++code) {
    std::vector<double> bits(4);
    int parity = 0;
    for (int b = 0; b < 4; ++b) {
      bits[b] = (code >> b) & 1;
      parity ^= (code >> b) & 1;
    }
    const ChainContext ctx = chain_forward(bits, {4, ChainMode::kSoft}, p.state, p.cfg, true);
    EXPECT_EQ(ctx.output > 0.5, parity == 1) << code;
  }
  const std::vector<double> zeros(6, 0.0);
  EXPECT_LT(chain_forward(zeros, {6, ChainMode::kHard}, p.state, p.cfg).output, 0.5);
}

TEST(ParityChain, TaskEvaluationOnPlantedLayer) {
  const ParityChainTask task(tasks::gen_parity(8, 40, 3), ChainMode::kSoft);
  const Planted& p = planted_xor();
  EXPECT_EQ(evaluate(task, p.state, p.cfg, EvalMode::parse("threshold")).sample_error, 0.0);
  const EpochMetrics prob = evaluate(task, p.state, p.cfg, EvalMode::parse("prob"));
  EXPECT_LT(prob.bit_error, 0.2);
  EXPECT_LE(evaluate(task, p.state, p.cfg, EvalMode::parse("round:16")).sample_error, 0.2);
}

TEST(ParityChain, RejectsBadShapes) {
  const Planted& p = planted_xor();
  const std::vector<double> one = {1.0};
  EXPECT_THROW(chain_forward(one, {1, ChainMode::kSoft}, p.state, p.cfg), std::invalid_argument);
  const std::vector<double> three = {1.0, 0.0, 1.0};
  EXPECT_THROW(chain_forward(three, {4, ChainMode::kSoft}, p.state, p.cfg), std::invalid_argument);
  const LayerConfig wide = LayerConfig::make(4, 0, 4, 1);
  EXPECT_THROW(chain_forward(three, {3, ChainMode::kSoft}, init_layer(wide), wide), std::invalid_argument);
  const ChainContext ctx = chain_forward(three, {3, ChainMode::kSoft}, p.state, p.cfg);
  EXPECT_THROW(chain_backward(ctx, {3, ChainMode::kSoft}, p.state, p.cfg, 1.0, Vector::Zero(2)),
               std::invalid_argument);
}

TEST(ParityChain, ZeroLossGradientGivesZeroGradients) {
  const Planted& p = planted_xor();
  const std::vector<double> bits = {1.0, 0.0, 1.0, 1.0};
  const ChainSpec spec{4, ChainMode::kSoft};
  const ChainContext ctx = chain_forward(bits, spec, p.state, p.cfg);
  const ChainGrads g = chain_backward(ctx, spec, p.state, p.cfg, 0.0);
  EXPECT_EQ(testing::max_abs(g.d_S), 0.0);
  EXPECT_EQ(g.d_bits.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParityChain, TiedWeightGradientIsSumOfSteps) {
  const Planted& p = planted_xor();
  const std::vector<double> bits = {0.9, 0.2, 0.7, 0.4, 0.6};
  const ChainSpec spec{5, ChainMode::kSoft};
  const ChainContext ctx = chain_forward(bits, spec, p.state, p.cfg);
  const ChainGrads g = chain_backward(ctx, spec, p.state, p.cfg, 1.0);
  ASSERT_EQ(g.step_d_S.size(), 4u);
  Matrix sum = Matrix::Zero(g.d_S.rows(), g.d_S.cols());
  for (const Matrix& s : g.step_d_S) sum += s;
  EXPECT_LE(testing::max_abs(sum - g.d_S), 1e-12);
  // The last step alone is an ordinary layer backward pass.
  const ForwardContext& last = ctx.steps.back();
  Vector d = Vector::Zero(static_cast<Eigen::Index>(last.outputs.size()));
  d(last.position[kChainOutputVar]) = 1.0;
  const GradBundle direct = backward(last, p.state, p.cfg, d);
  EXPECT_LE(testing::max_abs(direct.d_S - g.step_d_S.back()), 1e-12);
}

double chain_output(const Planted& p, const Matrix& S, const std::vector<double>& bits,
                    ChainMode mode = ChainMode::kSoft) {
  LayerState state = p.state;
  state.weights.S = S;
  return chain_forward(bits, {static_cast<int>(bits.size()), mode}, state, p.cfg).output;
}

TEST(ParityChain, WeightGradientMatchesFiniteDifferences) {
  const Planted p = tight_layer(5);
  const std::vector<double> bits = {0.3, 0.8, 0.6};
  const ChainSpec spec{3, ChainMode::kSoft};
  const ChainContext ctx = chain_forward(bits, spec, p.state, p.cfg);
  for (const auto& step : ctx.steps) ASSERT_TRUE(step.stats.converged);
  const ChainGrads g = chain_backward(ctx, spec, p.state, p.cfg, 1.0, Vector(), &kTightBackward);

  const Matrix& S = p.state.weights.S;
  const Vector numeric = oracle::finite_difference(
      [&](const Vector& x) { return chain_output(p, x.reshaped(S.rows(), S.cols()), bits); },
      S.reshaped(), 1e-5);
  const Vector analytic = g.d_S.reshaped();
  int within = 0;
  for (Eigen::Index i = 0; i < numeric.size(); ++i)
    within += relative_error(analytic(i), numeric(i)) < 1e-3;
  EXPECT_GE(within, static_cast<int>(0.95 * numeric.size()));
  EXPECT_LE((analytic - numeric).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(ParityChain, InteriorBitGradientSumsBothPaths) {
  const Planted p = tight_layer(5);
  std::vector<double> bits = {0.3, 0.8, 0.6, 0.45};
  const ChainSpec spec{4, ChainMode::kSoft};
  const ChainContext ctx = chain_forward(bits, spec, p.state, p.cfg);
  const ChainGrads g = chain_backward(ctx, spec, p.state, p.cfg, 1.0, Vector(), &kTightBackward);
  const Vector point = Eigen::Map<const Vector>(bits.data(), 4);
  const Vector numeric = oracle::finite_difference(
      [&](const Vector& x) {
        return chain_output(p, p.state.weights.S, {x.data(), x.data() + x.size()});
      },
      point, 1e-5);
  for (Eigen::Index b = 0; b < 4; ++b)
    EXPECT_LT(relative_error(g.d_bits(b), numeric(b)), 1e-3) << b << " " << g.d_bits(b) << " " << numeric(b);
}

TEST(ParityChain, IntermediateLossTermsEnterAsDirectGradients) {
  const Planted p = tight_layer(5);
  const std::vector<double> bits = {0.3, 0.8, 0.6, 0.45};
  const ChainSpec spec{4, ChainMode::kSoft};
  const Vector weights = (Vector(2) << 0.7, -1.3).finished();
  auto loss = [&](const Matrix& S) {
    LayerState state = p.state;
    state.weights.S = S;
    const ChainContext c = chain_forward(bits, spec, state, p.cfg);
    return c.output + weights(0) * c.steps[0].z(kChainOutputVar) +
           weights(1) * c.steps[1].z(kChainOutputVar);
  };
  const ChainContext ctx = chain_forward(bits, spec, p.state, p.cfg);
  const ChainGrads g = chain_backward(ctx, spec, p.state, p.cfg, 1.0, weights, &kTightBackward);
  const Matrix& S = p.state.weights.S;
  const Vector numeric = oracle::finite_difference(
      [&](const Vector& x) { return loss(x.reshaped(S.rows(), S.cols())); }, S.reshaped(), 1e-5);
  EXPECT_LE((g.d_S.reshaped() - numeric).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(ParityChain, HardModeUsesStraightThroughGradient) {
  const Planted& p = planted_xor();
  const std::vector<double> bits = {1.0, 0.0, 1.0, 1.0, 0.0};
  const ChainSpec hard{5, ChainMode::kHard};
  const ChainContext ctx = chain_forward(bits, hard, p.state, p.cfg);
  for (std::size_t d = 1; d < ctx.steps.size(); ++d) {
    const double carry = ctx.steps[d].z_in(0);
    EXPECT_TRUE(carry == 0.0 || carry == 1.0);
  }
  const ChainGrads g = chain_backward(ctx, hard, p.state, p.cfg, 1.0);
  EXPECT_TRUE(g.d_S.allFinite());
  EXPECT_GT(testing::max_abs(g.step_d_S.front()), 0.0);
}

TEST(ParityChainTask, TrainingReducesLoss) {
  const ParityChainTask task(tasks::gen_parity(4, 80, 1), ChainMode::kHard);
  LayerConfig cfg = parity_layer_config(4, 8, 3);
  LayerState state = init_layer(cfg);
  AdamOptions adam;
  adam.lr = 0.1;
  OptimizerState opt = OptimizerState::zeros(state.weights.S.rows(), state.weights.S.cols(), adam);
  std::vector<double> losses;
  for (int e = 1; e <= 6; ++e) {
    TrainOptions o;
    o.batch_size = 20;
    o.epoch = e;
    losses.push_back(train_epoch(task, state, cfg, opt, o).loss);
  }
  EXPECT_LT(losses.back(), losses.front());
}

}  // namespace
}  // namespace satnet
