// SPDX-License-Identifier: Apache-2.0
//
// Differentiable MAXSAT layer: input relaxation, the SDP solve over the
// unknown variables, probabilistic outputs, and the analytic backward pass
// obtained by implicit differentiation of the coordinate-descent fixed point.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "satnet/sdp_solver.hpp"

namespace satnet {

struct LayerConfig {
  int n_real = 0;
  int n_aux = 0;
  int m = 1;
  /// Embedding rank; rank_for(n_real + n_aux) unless set explicitly for tests.
  int k = 0;
  double tol = 1e-4;
  int max_sweeps = 40;
  /// Clamp on z inside the 1 / sin(pi z) factor of the output gradient.
  double delta = 0.05;
  uint64_t seed = 0;

  int n() const { return n_real + n_aux; }
  SolverOptions solver() const { return {tol, max_sweeps}; }

  /// Fills k from rank_for and validates.
  static LayerConfig make(int n_real, int n_aux, int m, uint64_t seed);

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// One supervised example: known inputs with their probabilities, and the
/// real unknowns that carry targets. Auxiliaries are implicit outputs.
struct Sample {
  std::vector<int> inputs;
  Vector z_in;
  std::vector<int> outputs;
  Vector targets;

  /// Throws std::invalid_argument unless inputs and outputs partition
  /// 1..n_real and every probability lies in [0, 1].
  void validate(int n_real) const;
};

struct LayerState {
  ClauseWeights weights;
  /// Truth direction v_T (length k). Never updated by the solver.
  Vector v_top;
  /// k x n; column i-1 is the fixed random unit vector of variable i.
  Matrix v_rand;
};

/// Draws v_T, v_rand and a Gaussian S with standard deviation
/// 1 / sqrt(m (n+1)), all from cfg.seed.
LayerState init_layer(const LayerConfig& cfg);

/// Unit vector orthogonal to v_top obtained by projecting and renormalizing
/// v_rand.
Vector orthogonal_direction(const Vector& v_top, const Eigen::Ref<const Vector>& v_rand);

/// Relaxes each input probability z into a unit vector with
/// v^T v_T = -cos(pi z). Columns follow the order of `inputs`.
Matrix relax_inputs(const Vector& z_in, std::span<const int> inputs,
                    const LayerState& state);

struct ForwardContext {
  SphereEmbedding V;
  std::vector<int> inputs;
  Vector z_in;
  /// Every non-input variable (real unknowns and auxiliaries), ascending.
  std::vector<int> outputs;
  Vector z_out;
  ForwardStats stats;
  /// position[i] is the index of variable i in `outputs`, or -1.
  std::vector<int> position;

  double z(int var) const { return z_out(position.at(var)); }
};

/// Relax inputs, solve for every other variable, and read out
/// probabilities. `inputs` must be distinct real-variable indices.
ForwardContext forward(std::span<const int> inputs, const Vector& z_in,
                       const LayerState& state, const LayerConfig& cfg);

/// dl/dv_o = dl/dz_o / (pi sin(pi z~_o)) v_T with z~ = clamp(z, delta,
/// 1 - delta). Returns k x |O|.
Matrix grad_output_relaxation(const Vector& d_z_out, const Vector& z_out,
                              const Vector& v_top, double delta);

struct BackwardStats {
  int sweeps = 0;
  bool converged = false;
  double last_delta = 0.0;
  /// Positions (into outputs) whose ||g_o|| was degenerate; u_o stays 0.
  std::vector<int> frozen;
};

struct BackwardObserver {
  /// Called at the end of each sweep with U (k x (n+1)) and Psi = U_O S_O^T.
  std::function<void(const Matrix& U, const Matrix& psi)> on_sweep;
};

/// Block coordinate descent for the projected adjoint system
///   P ((C + D) (x) I_k) P vec(U_O) = vec(dl/dV_O).
/// Returns U as k x (n+1) with every non-output column zero.
Matrix backward_coordinate_descent(const Matrix& d_V_O,
                                   const SphereEmbedding& V,
                                   const ClauseWeights& S,
                                   std::span<const int> outputs,
                                   const Vector& g_norms,
                                   const SolverOptions& options,
                                   BackwardStats* stats = nullptr,
                                   const BackwardObserver* observer = nullptr);

struct InputAndWeightGrads {
  /// k x |I|, columns in the order of `inputs`.
  Matrix d_V_I;
  /// m x (n+1).
  Matrix d_S;
};

/// dl/dV_I = -(U S^T) S_I and dl/dS = -(U S^T)^T V - (S V^T) U.
InputAndWeightGrads grads_from_U(const Matrix& U, const SphereEmbedding& V,
                                 const ClauseWeights& S,
                                 std::span<const int> inputs);

/// dv/dz for one relaxed input; uses the same renormalized direction as
/// relax_inputs.
Vector input_tangent(double z, const Vector& v_top,
                     const Eigen::Ref<const Vector>& v_rand);

/// dl/dz_i = d_z_direct_i + (dv_i/dz_i)^T dl/dv_i. An empty d_z_direct is
/// treated as zero.
Vector grad_inputs(const Matrix& d_V_I, const Vector& z_in,
                   std::span<const int> inputs, const LayerState& state,
                   const Vector& d_z_direct = Vector());

struct GradBundle {
  /// Over ForwardContext::inputs.
  Vector d_z_in;
  Matrix d_S;
  BackwardStats stats;
};

/// Full backward pass. d_z_out is indexed like ForwardContext::outputs
/// (auxiliaries carry zero). backward_options defaults to cfg.solver().
GradBundle backward(const ForwardContext& ctx, const LayerState& state,
                    const LayerConfig& cfg, const Vector& d_z_out,
                    const Vector& d_z_direct = Vector(),
                    const SolverOptions* backward_options = nullptr);

}  // namespace satnet
