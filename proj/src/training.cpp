// SPDX-License-Identifier: Apache-2.0

#include "satnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

namespace satnet {

BceResult bce_loss(const Vector& z, const Vector& targets) {
  if (z.size() != targets.size())
    throw std::invalid_argument("bce_loss: prediction and target lengths differ");
  BceResult out;
  out.d_z = Vector::Zero(z.size());
  if (z.size() == 0) return out;
  const double t = static_cast<double>(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = std::clamp(z(i), kBceClamp, 1.0 - kBceClamp);
    const double y = targets(i);
    out.loss -= y * std::log(p) + (1.0 - y) * std::log1p(-p);
    out.d_z(i) = (p - y) / (p * (1.0 - p)) / t;
  }
  out.loss /= t;
  return out;
}

OptimizerState OptimizerState::zeros(Eigen::Index rows, Eigen::Index cols,
                                     const AdamOptions& options) {
  return {Matrix::Zero(rows, cols), Matrix::Zero(rows, cols), 0, options};
}

void adam_step(OptimizerState& opt, Matrix& params, const Matrix& grads) {
  if (grads.rows() != params.rows() || grads.cols() != params.cols() ||
      opt.first_moment.rows() != params.rows() ||
      opt.first_moment.cols() != params.cols())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (Eigen::Index c = 0; c < grads.cols(); ++c)
    for (Eigen::Index r = 0; r < grads.rows(); ++r)
      if (!std::isfinite(grads(r, c))) throw NonFiniteGradient(r, c);

  const AdamOptions& o = opt.options;
  ++opt.step;
  opt.first_moment = o.beta1 * opt.first_moment + (1.0 - o.beta1) * grads;
  opt.second_moment =
      o.beta2 * opt.second_moment + (1.0 - o.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(opt.step));
  params.array() -= o.lr * (opt.first_moment.array() / c1) /
                    ((opt.second_moment.array() / c2).sqrt() + o.eps);
}

EvalMode EvalMode::parse(const std::string& text) {
  EvalMode mode;
  if (text == "prob") {
    mode.kind = EvalKind::kProb;
  } else if (text == "threshold") {
    mode.kind = EvalKind::kThreshold;
  } else if (text.rfind("round:", 0) == 0) {
    mode.kind = EvalKind::kRound;
    const std::string count = text.substr(6);
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(count, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != count.size() || n < 1)
      throw std::invalid_argument("round:N needs a positive integer N");
    mode.round_samples = n;
  } else {
    throw std::invalid_argument("unknown eval mode '" + text +
                                "' (expected prob, threshold, or round:N)");
  }
  return mode;
}

std::string EvalMode::str() const {
  switch (kind) {
    case EvalKind::kProb: return "prob";
    case EvalKind::kThreshold: return "threshold";
    case EvalKind::kRound: return "round:" + std::to_string(round_samples);
  }
  return "?";
}

// SupervisedTask -------------------------------------------------------

SupervisedTask::SupervisedTask(std::vector<Sample> samples, Judge judge)
    : samples_(std::move(samples)), judge_(std::move(judge)) {}

namespace {

Vector supervised_z(const ForwardContext& ctx, const Sample& s) {
  Vector z(static_cast<Eigen::Index>(s.outputs.size()));
  for (std::size_t t = 0; t < s.outputs.size(); ++t)
    z(static_cast<Eigen::Index>(t)) = ctx.z(s.outputs[t]);
  return z;
}

double thresholded_errors(const Vector& z, const Vector& y) {
  double errors = 0.0;
  for (Eigen::Index t = 0; t < z.size(); ++t)
    errors += ((z(t) > 0.5) != (y(t) > 0.5)) ? 1.0 : 0.0;
  return errors;
}

}  // namespace

SampleOutcome SupervisedTask::train_sample(std::size_t i, const LayerState& state,
                                           const LayerConfig& cfg, Matrix* d_S,
                                           double grad_scale) const {
  const Sample& s = samples_.at(i);
  const ForwardContext ctx = forward(s.inputs, s.z_in, state, cfg);
  const Vector z = supervised_z(ctx, s);
  const BceResult bce = bce_loss(z, s.targets);

  SampleOutcome out;
  out.loss = bce.loss;
  out.bits = static_cast<int>(z.size());
  out.bit_errors = thresholded_errors(z, s.targets);
  out.sample_correct = judge_ ? judge_(s, z) : out.bit_errors == 0.0;

  if (d_S) {
    Vector d_z_out = Vector::Zero(static_cast<Eigen::Index>(ctx.outputs.size()));
    for (std::size_t t = 0; t < s.outputs.size(); ++t)
      d_z_out(ctx.position[s.outputs[t]]) = bce.d_z(static_cast<Eigen::Index>(t));
    const GradBundle grads = backward(ctx, state, cfg, d_z_out);
    *d_S += grad_scale * grads.d_S;
  }
  return out;
}

SampleOutcome SupervisedTask::eval_sample(std::size_t i, const LayerState& state,
                                          const LayerConfig& cfg,
                                          const EvalMode& mode) const {
  const Sample& s = samples_.at(i);
  const ForwardContext ctx = forward(s.inputs, s.z_in, state, cfg);
  const Vector z = supervised_z(ctx, s);

  SampleOutcome out;
  out.loss = bce_loss(z, s.targets).loss;
  out.bits = static_cast<int>(z.size());
  switch (mode.kind) {
    case EvalKind::kProb: {
      double all = 1.0;
      for (Eigen::Index t = 0; t < z.size(); ++t) {
        const double miss = std::abs(z(t) - s.targets(t));
        out.bit_errors += miss;
        all *= 1.0 - miss;
      }
      out.sample_correct = all;
      break;
    }
    case EvalKind::kThreshold:
      out.bit_errors = thresholded_errors(z, s.targets);
      out.sample_correct = judge_ ? judge_(s, z) : out.bit_errors == 0.0;
      break;
    case EvalKind::kRound: {
      const Assignment a = randomized_round(ctx.V, state.weights, mode.round_samples,
                                            mode.seed + i, RoundObjective::kEnergy);
      Vector pred(z.size());
      for (std::size_t t = 0; t < s.outputs.size(); ++t)
        pred(static_cast<Eigen::Index>(t)) = a[s.outputs[t] - 1] > 0 ? 1.0 : 0.0;
      out.bit_errors = thresholded_errors(pred, s.targets);
      out.sample_correct = judge_ ? judge_(s, pred) : out.bit_errors == 0.0;
      break;
    }
  }
  return out;
}

Sample sudoku_to_sample(const tasks::SudokuSample& s) {
  Sample out;
  std::vector<double> z_in, targets;
  for (std::size_t b = 0; b < s.mask.size(); ++b) {
    const int var = static_cast<int>(b) + 1;
    if (s.mask[b]) {
      out.inputs.push_back(var);
      z_in.push_back(s.puzzle[b]);
    } else {
      out.outputs.push_back(var);
      targets.push_back(s.solution[b]);
    }
  }
  out.z_in = Eigen::Map<const Vector>(z_in.data(), static_cast<Eigen::Index>(z_in.size()));
  out.targets =
      Eigen::Map<const Vector>(targets.data(), static_cast<Eigen::Index>(targets.size()));
  return out;
}

SupervisedTask make_sudoku_task(const tasks::SudokuDataset& data, std::size_t begin,
                                std::size_t end) {
  if (begin > end || end > data.samples.size())
    throw std::out_of_range("sudoku task range outside dataset");
  std::vector<Sample> samples;
  samples.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) samples.push_back(sudoku_to_sample(data.samples[i]));

  const int bits = data.size * data.size * data.size;
  std::optional<tasks::Permutation> perm;
  if (data.perm_seed) perm = tasks::Permutation::random(bits, *data.perm_seed);

  auto judge = [perm, bits](const Sample& s, const Vector& predicted) {
    std::vector<double> guess(static_cast<std::size_t>(bits)),
        truth(static_cast<std::size_t>(bits));
    for (std::size_t t = 0; t < s.inputs.size(); ++t)
      guess[s.inputs[t] - 1] = truth[s.inputs[t] - 1] = s.z_in(static_cast<Eigen::Index>(t));
    for (std::size_t t = 0; t < s.outputs.size(); ++t) {
      guess[s.outputs[t] - 1] = predicted(static_cast<Eigen::Index>(t));
      truth[s.outputs[t] - 1] = s.targets(static_cast<Eigen::Index>(t));
    }
    if (perm) {
      // bit i of the original layout sits at perm->map[i]
      std::vector<double> g(guess.size()), tr(truth.size());
      for (std::size_t i = 0; i < guess.size(); ++i) {
        g[i] = guess[perm->map[i]];
        tr[i] = truth[perm->map[i]];
      }
      guess.swap(g);
      truth.swap(tr);
    }
    return tasks::decode_bits(std::span<const double>(guess)) ==
           tasks::decode_bits(std::span<const double>(truth));
  };
  return SupervisedTask(std::move(samples), judge);
}

// Epoch loops ----------------------------------------------------------

void parallel_chunks(std::size_t count, int threads,
                     const std::function<void(int, std::size_t, std::size_t)>& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count));
  if (workers <= 1) {
    fn(0, 0, count);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  auto run = [&](std::size_t t) {
    const std::size_t begin = count * t / workers;
    const std::size_t end = count * (t + 1) / workers;
    try {
      fn(static_cast<int>(t), begin, end);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run, t);
  run(0);
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

struct Totals {
  double loss = 0.0;
  double bit_errors = 0.0;
  double bits = 0.0;
  double correct = 0.0;
  std::size_t samples = 0;

  void add(const SampleOutcome& o) {
    loss += o.loss;
    bit_errors += o.bit_errors;
    bits += o.bits;
    correct += o.sample_correct;
    ++samples;
  }
  void merge(const Totals& o) {
    loss += o.loss;
    bit_errors += o.bit_errors;
    bits += o.bits;
    correct += o.correct;
    samples += o.samples;
  }
  EpochMetrics metrics(double seconds) const {
    EpochMetrics m;
    m.samples = samples;
    m.seconds = seconds;
    if (samples == 0) return m;
    m.loss = loss / static_cast<double>(samples);
    m.bit_error = bits > 0 ? bit_errors / bits : 0.0;
    m.sample_error = 1.0 - correct / static_cast<double>(samples);
    return m;
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

EpochMetrics train_epoch(const Task& task, LayerState& state, const LayerConfig& cfg,
                         OptimizerState& opt, const TrainOptions& options) {
  if (task.size() == 0) throw std::invalid_argument("train_epoch: empty dataset");
  if (options.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(task.size());
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<uint32_t>(options.seed), static_cast<uint32_t>(options.seed >> 32),
                    static_cast<uint32_t>(options.epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  const int threads = std::max(1, options.threads);
  const Matrix& S = state.weights.S;
  std::vector<Matrix> partial(static_cast<std::size_t>(threads));
  std::vector<Totals> partial_totals(static_cast<std::size_t>(threads));
  Totals totals;
  Matrix grad(S.rows(), S.cols());

  for (std::size_t begin = 0; begin < order.size();
       begin += static_cast<std::size_t>(options.batch_size)) {
    const std::size_t end =
        std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
    const double scale = 1.0 / static_cast<double>(end - begin);
    for (int t = 0; t < threads; ++t) {
      partial[t].setZero(S.rows(), S.cols());
      partial_totals[t] = Totals{};
    }
    parallel_chunks(end - begin, threads, [&](int t, std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j)
        partial_totals[t].add(
            task.train_sample(order[begin + j], state, cfg, &partial[t], scale));
    });
    grad.setZero();
    for (int t = 0; t < threads; ++t) {
      grad += partial[t];
      totals.merge(partial_totals[t]);
    }
    adam_step(opt, state.weights.S, grad);
  }
  return totals.metrics(seconds_since(start));
}

EpochMetrics evaluate(const Task& task, const LayerState& state, const LayerConfig& cfg,
                      const EvalMode& mode, int threads) {
  if (task.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const auto start = std::chrono::steady_clock::now();
  threads = std::max(1, threads);
  std::vector<Totals> partial(static_cast<std::size_t>(threads));
  parallel_chunks(task.size(), threads, [&](int t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) partial[t].add(task.eval_sample(i, state, cfg, mode));
  });
  Totals totals;
  for (const auto& p : partial) totals.merge(p);
  return totals.metrics(seconds_since(start));
}

}  // namespace satnet
