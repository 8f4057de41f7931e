// SPDX-License-Identifier: Apache-2.0

#include "satnet/layer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace satnet {

namespace {

constexpr double kPi = std::numbers::pi;

Vector random_unit(std::mt19937_64& rng, Eigen::Index k) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(k);
  do {
    for (Eigen::Index d = 0; d < k; ++d) v(d) = normal(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

}  // namespace

LayerConfig LayerConfig::make(int n_real, int n_aux, int m, uint64_t seed) {
  LayerConfig cfg;
  cfg.n_real = n_real;
  cfg.n_aux = n_aux;
  cfg.m = m;
  cfg.seed = seed;
  cfg.k = rank_for(std::max(1, n_real + n_aux));
  cfg.validate();
  return cfg;
}

void LayerConfig::validate() const {
  if (n_real < 1) throw std::invalid_argument("n_real must be >= 1");
  if (n_aux < 0) throw std::invalid_argument("n_aux must be >= 0");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
  if (!(delta > 0.0 && delta < 0.5))
    throw std::invalid_argument("delta must lie in (0, 0.5)");
}

void Sample::validate(int n_real) const {
  if (static_cast<std::size_t>(z_in.size()) != inputs.size() ||
      static_cast<std::size_t>(targets.size()) != outputs.size())
    throw std::invalid_argument("sample: value and index lengths differ");
  std::vector<char> seen(static_cast<std::size_t>(n_real) + 1, 0);
  auto mark = [&](int var) {
    if (var < 1 || var > n_real || seen[var])
      throw std::invalid_argument("sample: index " + std::to_string(var) +
                                  " out of range or repeated");
    seen[var] = 1;
  };
  for (int v : inputs) mark(v);
  for (int v : outputs) mark(v);
  if (inputs.size() + outputs.size() != static_cast<std::size_t>(n_real))
    throw std::invalid_argument("sample: inputs and outputs do not cover every variable");
  auto in_unit = [](const Vector& x) {
    return x.size() == 0 || (x.minCoeff() >= 0.0 && x.maxCoeff() <= 1.0);
  };
  if (!in_unit(z_in) || !in_unit(targets))
    throw std::invalid_argument("sample: probability outside [0, 1]");
}

LayerState init_layer(const LayerConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  LayerState state;
  state.v_top = random_unit(rng, cfg.k);
  state.v_rand.resize(cfg.k, cfg.n());
  for (int i = 0; i < cfg.n(); ++i) state.v_rand.col(i) = random_unit(rng, cfg.k);
  std::normal_distribution<double> normal(
      0.0, 1.0 / std::sqrt(static_cast<double>(cfg.m) * (cfg.n() + 1)));
  state.weights.S.resize(cfg.m, cfg.n() + 1);
  for (Eigen::Index j = 0; j < state.weights.S.cols(); ++j)
    for (Eigen::Index r = 0; r < state.weights.S.rows(); ++r)
      state.weights.S(r, j) = normal(rng);
  return state;
}

Vector orthogonal_direction(const Vector& v_top,
                            const Eigen::Ref<const Vector>& v_rand) {
  Vector w = v_rand - v_top.dot(v_rand) * v_top;
  double norm = w.norm();
  if (norm < 1e-9) {
    // v_rand parallel to v_top: fall back to the least aligned axis.
    Eigen::Index axis = 0;
    v_top.cwiseAbs().minCoeff(&axis);
    w = -v_top(axis) * v_top;
    w(axis) += 1.0;
    norm = w.norm();
  }
  return w / norm;
}

Matrix relax_inputs(const Vector& z_in, std::span<const int> inputs,
                    const LayerState& state) {
  if (static_cast<std::size_t>(z_in.size()) != inputs.size())
    throw std::invalid_argument("z_in and inputs differ in length");
  const Eigen::Index k = state.v_top.size();
  Matrix V_I(k, z_in.size());
  for (Eigen::Index t = 0; t < z_in.size(); ++t) {
    const double z = z_in(t);
    if (!(z >= 0.0 && z <= 1.0))
      throw std::invalid_argument("input probability outside [0, 1]: " +
                                  std::to_string(z));
    const int var = inputs[t];
    if (var < 1 || var > state.v_rand.cols())
      throw std::out_of_range("input index out of range");
    const Vector w = orthogonal_direction(state.v_top, state.v_rand.col(var - 1));
    V_I.col(t) = -std::cos(kPi * z) * state.v_top + std::sin(kPi * z) * w;
  }
  return V_I;
}

ForwardContext forward(std::span<const int> inputs, const Vector& z_in,
                       const LayerState& state, const LayerConfig& cfg) {
  const int n = cfg.n();
  ForwardContext ctx;
  ctx.inputs.assign(inputs.begin(), inputs.end());
  ctx.z_in = z_in;
  ctx.position.assign(n + 1, -1);

  std::vector<char> is_input(n + 1, 0);
  for (int var : inputs) {
    if (var < 1 || var > cfg.n_real)
      throw std::invalid_argument("input index " + std::to_string(var) +
                                  " is not a real variable");
    if (is_input[var]) throw std::invalid_argument("duplicate input index");
    is_input[var] = 1;
  }
  for (int i = 1; i <= n; ++i) {
    if (is_input[i]) continue;
    ctx.position[i] = static_cast<int>(ctx.outputs.size());
    ctx.outputs.push_back(i);
  }

  Matrix& V = ctx.V.V;
  V.resize(cfg.k, n + 1);
  V.col(kTruth) = state.v_top;
  V.rightCols(n) = state.v_rand;
  const Matrix V_I = relax_inputs(z_in, inputs, state);
  for (std::size_t t = 0; t < inputs.size(); ++t) V.col(inputs[t]) = V_I.col(t);

  ctx.stats = coordinate_descent_forward(ctx.V, state.weights, ctx.outputs,
                                         cfg.solver());
  ctx.z_out = assignment_probabilities(ctx.V, ctx.outputs);
  return ctx;
}

Matrix grad_output_relaxation(const Vector& d_z_out, const Vector& z_out,
                              const Vector& v_top, double delta) {
  if (d_z_out.size() != z_out.size())
    throw std::invalid_argument("d_z_out and z_out differ in length");
  Matrix d_V_O(v_top.size(), z_out.size());
  for (Eigen::Index t = 0; t < z_out.size(); ++t) {
    const double z = std::clamp(z_out(t), delta, 1.0 - delta);
    d_V_O.col(t) = (d_z_out(t) / (kPi * std::sin(kPi * z))) * v_top;
  }
  return d_V_O;
}

Matrix backward_coordinate_descent(const Matrix& d_V_O,
                                   const SphereEmbedding& embedding,
                                   const ClauseWeights& weights,
                                   std::span<const int> outputs,
                                   const Vector& g_norms,
                                   const SolverOptions& options,
                                   BackwardStats* stats_out,
                                   const BackwardObserver* observer) {
  const Matrix& V = embedding.V;
  const Matrix& S = weights.S;
  const Eigen::Index k = V.rows();
  const auto n_out = static_cast<Eigen::Index>(outputs.size());
  if (d_V_O.rows() != k || d_V_O.cols() != n_out || g_norms.size() != n_out)
    throw std::invalid_argument("backward: dimension mismatch");

  BackwardStats stats;
  Matrix U = Matrix::Zero(k, V.cols());
  Matrix psi = Matrix::Zero(k, S.rows());
  std::vector<char> frozen(outputs.size(), 0);
  for (Eigen::Index t = 0; t < n_out; ++t) {
    if (g_norms(t) < kDegenerateGradNorm) {
      frozen[t] = 1;
      stats.frozen.push_back(static_cast<int>(t));
    }
  }
  Vector s_sq(n_out);
  for (Eigen::Index t = 0; t < n_out; ++t) s_sq(t) = S.col(outputs[t]).squaredNorm();

  if (d_V_O.cwiseAbs().maxCoeff() == 0.0 || n_out == 0) {
    stats.converged = true;
    if (stats_out) *stats_out = std::move(stats);
    return U;
  }

  Vector dg(k), u_prev(k), du(k);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double delta = 0.0;
    for (Eigen::Index t = 0; t < n_out; ++t) {
      if (frozen[t]) continue;
      const int o = outputs[t];
      const auto v_o = V.col(o);
      dg.noalias() = psi * S.col(o);
      dg -= s_sq(t) * U.col(o) + d_V_O.col(t);
      u_prev = U.col(o);
      // u_o = -P_o dg / ||g_o|| with P_o = I - v_o v_o^T
      U.col(o) = -(dg - v_o.dot(dg) * v_o) / g_norms(t);
      du = U.col(o) - u_prev;
      psi.noalias() += du * S.col(o).transpose();
      delta = std::max(delta, du.lpNorm<Eigen::Infinity>());
    }
    stats.sweeps = sweep + 1;
    stats.last_delta = delta;
    if (observer && observer->on_sweep) observer->on_sweep(U, psi);
    if (delta < options.tol) {
      stats.converged = true;
      break;
    }
  }
  if (stats_out) *stats_out = std::move(stats);
  return U;
}

InputAndWeightGrads grads_from_U(const Matrix& U, const SphereEmbedding& embedding,
                                 const ClauseWeights& weights,
                                 std::span<const int> inputs) {
  const Matrix& V = embedding.V;
  const Matrix& S = weights.S;
  if (U.rows() != V.rows() || U.cols() != V.cols() || S.cols() != V.cols())
    throw std::invalid_argument("grads_from_U: dimension mismatch");
  // U is zero outside O, so U S^T = sum_o u_o s_o^T.
  const Matrix W = U * S.transpose();
  InputAndWeightGrads out;
  out.d_V_I.resize(V.rows(), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t t = 0; t < inputs.size(); ++t)
    out.d_V_I.col(static_cast<Eigen::Index>(t)).noalias() = -W * S.col(inputs[t]);
  out.d_S.noalias() = -W.transpose() * V;
  out.d_S.noalias() -= (S * V.transpose()) * U;
  return out;
}

Vector input_tangent(double z, const Vector& v_top,
                     const Eigen::Ref<const Vector>& v_rand) {
  const Vector w = orthogonal_direction(v_top, v_rand);
  return kPi * (std::sin(kPi * z) * v_top + std::cos(kPi * z) * w);
}

Vector grad_inputs(const Matrix& d_V_I, const Vector& z_in,
                   std::span<const int> inputs, const LayerState& state,
                   const Vector& d_z_direct) {
  const auto n_in = static_cast<Eigen::Index>(inputs.size());
  if (d_V_I.cols() != n_in || z_in.size() != n_in)
    throw std::invalid_argument("grad_inputs: dimension mismatch");
  if (d_z_direct.size() != 0 && d_z_direct.size() != n_in)
    throw std::invalid_argument("grad_inputs: d_z_direct has wrong length");
  Vector d_z = d_z_direct.size() ? d_z_direct : Vector::Zero(n_in);
  for (Eigen::Index t = 0; t < n_in; ++t) {
    const Vector tangent =
        input_tangent(z_in(t), state.v_top, state.v_rand.col(inputs[t] - 1));
    d_z(t) += tangent.dot(d_V_I.col(t));
  }
  return d_z;
}

GradBundle backward(const ForwardContext& ctx, const LayerState& state,
                    const LayerConfig& cfg, const Vector& d_z_out,
                    const Vector& d_z_direct,
                    const SolverOptions* backward_options) {
  const Matrix d_V_O =
      grad_output_relaxation(d_z_out, ctx.z_out, state.v_top, cfg.delta);
  GradBundle out;
  const SolverOptions options = backward_options ? *backward_options : cfg.solver();
  const Matrix U = backward_coordinate_descent(d_V_O, ctx.V, state.weights,
                                               ctx.outputs, ctx.stats.g_norms,
                                               options, &out.stats);
  auto grads = grads_from_U(U, ctx.V, state.weights, ctx.inputs);
  out.d_S = std::move(grads.d_S);
  out.d_z_in = grad_inputs(grads.d_V_I, ctx.z_in, ctx.inputs, state, d_z_direct);
  return out;
}

}  // namespace satnet
