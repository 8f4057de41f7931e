// SPDX-License-Identifier: Apache-2.0
//
// Brute-force and dense linear-algebra references. Nothing here calls into
// the solver or layer code it is used to check.

#pragma once

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "satnet/sdp_solver.hpp"

namespace satnet::oracle {

struct MaxsatOptimum {
  int count = 0;
  /// Lowest binary value among optimal assignments (variable 1 is the most
  /// significant bit, false < true).
  Assignment assignment;
};

inline constexpr int kMaxBruteForceVars = 22;

/// Exhaustive search over all 2^n assignments. Throws std::invalid_argument
/// when num_vars exceeds kMaxBruteForceVars.
MaxsatOptimum brute_force_maxsat(const CnfInstance& cnf);

inline constexpr Eigen::Index kMaxDenseSystem = 400;

/// P ((C + D) (x) I_k) P for the given outputs, with
/// C = S_O^T S_O - diag(||s_o||^2), D = diag(g_norms), P = diag(I - v_o v_o^T).
Matrix dense_backward_operator(const Matrix& V, const Matrix& S,
                               std::span<const int> outputs,
                               const Vector& g_norms);

/// Block-diagonal projector diag(I - v_o v_o^T).
Matrix output_projector(const Matrix& V, std::span<const int> outputs);

/// Pseudoinverse solve of the projected adjoint system. Singular values
/// below 1e-10 * sigma_max are truncated. Returns U_O (k x |O|). Throws
/// std::invalid_argument if k |O| exceeds kMaxDenseSystem.
Matrix dense_backward_solve(const Matrix& d_V_O, const Matrix& V,
                            const Matrix& S, std::span<const int> outputs,
                            const Vector& g_norms);

using ScalarFn = std::function<double(const Vector&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h. Throws
/// std::runtime_error if fn returns a non-finite value.
Vector finite_difference(const ScalarFn& fn, const Vector& point, double h = 1e-5);

}  // namespace satnet::oracle
