// SPDX-License-Identifier: Apache-2.0
//
// End-to-end check of the analytic layer gradients against central finite
// differences over random small layers.

#pragma once

#include <cstdint>
#include <string>

#include "satnet/layer.hpp"

namespace satnet {

struct GradcheckOptions {
  int instances = 20;
  int max_real = 8;
  int max_aux = 4;
  int max_clauses = 8;
  uint64_t seed = 1;
  /// Per-coordinate relative error bound.
  double tolerance = 1e-3;
  /// Fraction of coordinates that must meet `tolerance`, per block.
  double coverage = 0.95;
  /// Bound on the worst coordinate of each block.
  double worst_tolerance = 1e-2;
  double forward_tol = 1e-8;
  int max_sweeps = 200000;
  double h = 1e-5;
  double delta = 0.05;
};

struct BlockReport {
  std::size_t coords = 0;
  std::size_t within = 0;
  double worst = 0.0;

  double fraction() const { return coords ? static_cast<double>(within) / coords : 1.0; }
};

struct GradcheckReport {
  BlockReport d_S;
  BlockReport d_z_in;
  int instances = 0;
  int redraws = 0;
  bool passed = false;

  /// Stable, timing-free summary.
  std::string text(const GradcheckOptions& options) const;
};

/// |a - f| / max(|a|, |f|, 1e-6).
double relative_error(double analytic, double numeric);

/// A random instance for gradient checks: a layer with Gaussian S, inputs
/// with z in [delta, 1 - delta], and a linear loss sum_o w_o z_o over the
/// real outputs. Redrawn until every real output lies in [delta, 1 - delta],
/// every ||g_o|| exceeds 1e-6 and the fixed point is isolated.
struct GradcheckInstance {
  LayerConfig cfg;
  LayerState state;
  std::vector<int> inputs;
  Vector z_in;
  /// Loss weights over ForwardContext::outputs (zero on auxiliaries).
  Vector loss_weights;
  int redraws = 0;
};

/// True when the projected adjoint operator is nonsingular on the tangent
/// space up to the rotations that fix v_T and the inputs: its smallest
/// relevant eigenvalue exceeds rel_gap times the largest.
bool fixed_point_isolated(const ForwardContext& ctx, const Matrix& S, double rel_gap);

GradcheckInstance make_gradcheck_instance(const GradcheckOptions& options, uint64_t seed);

/// Loss of an instance at the given S and z_in.
double gradcheck_loss(const GradcheckInstance& inst, const Matrix& S, const Vector& z_in);

GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace satnet
