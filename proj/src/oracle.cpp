// SPDX-License-Identifier: Apache-2.0

#include "satnet/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace satnet::oracle {

MaxsatOptimum brute_force_maxsat(const CnfInstance& cnf) {
  const int n = cnf.num_vars;
  if (n > kMaxBruteForceVars)
    throw std::invalid_argument("brute force limited to " +
                                std::to_string(kMaxBruteForceVars) + " variables");
  MaxsatOptimum best;
  best.count = -1;
  Assignment current(n);
  const uint64_t total = uint64_t{1} << n;
  for (uint64_t code = 0; code < total; ++code) {
    // variable 1 is the most significant bit
    for (int i = 0; i < n; ++i) current[i] = ((code >> (n - 1 - i)) & 1u) ? 1 : -1;
    int count = 0;
    for (const auto& clause : cnf.clauses) {
      // unsatisfied iff every literal present is false
      bool all_false = true;
      for (int i = 0; i < n && all_false; ++i)
        if (clause[i] != 0 && clause[i] == current[i]) all_false = false;
      count += all_false ? 0 : 1;
    }
    if (count > best.count) {
      best.count = count;
      best.assignment = current;
    }
  }
  return best;
}

Matrix output_projector(const Matrix& V, std::span<const int> outputs) {
  const Eigen::Index k = V.rows();
  const auto n_out = static_cast<Eigen::Index>(outputs.size());
  Matrix P = Matrix::Zero(k * n_out, k * n_out);
  for (Eigen::Index a = 0; a < n_out; ++a) {
    const Vector v = V.col(outputs[a]);
    P.block(a * k, a * k, k, k) = Matrix::Identity(k, k) - v * v.transpose();
  }
  return P;
}

Matrix dense_backward_operator(const Matrix& V, const Matrix& S,
                               std::span<const int> outputs,
                               const Vector& g_norms) {
  const Eigen::Index k = V.rows();
  const auto n_out = static_cast<Eigen::Index>(outputs.size());
  Matrix CD(n_out, n_out);
  for (Eigen::Index a = 0; a < n_out; ++a) {
    for (Eigen::Index b = 0; b < n_out; ++b) {
      double c = 0.0;
      for (Eigen::Index r = 0; r < S.rows(); ++r)
        c += S(r, outputs[a]) * S(r, outputs[b]);
      CD(a, b) = (a == b) ? g_norms(a) : c;
    }
  }
  Matrix kron = Matrix::Zero(k * n_out, k * n_out);
  for (Eigen::Index a = 0; a < n_out; ++a)
    for (Eigen::Index b = 0; b < n_out; ++b)
      kron.block(a * k, b * k, k, k) = CD(a, b) * Matrix::Identity(k, k);
  const Matrix P = output_projector(V, outputs);
  return P * kron * P;
}

Matrix dense_backward_solve(const Matrix& d_V_O, const Matrix& V,
                            const Matrix& S, std::span<const int> outputs,
                            const Vector& g_norms) {
  const Eigen::Index k = V.rows();
  const auto n_out = static_cast<Eigen::Index>(outputs.size());
  if (k * n_out > kMaxDenseSystem)
    throw std::invalid_argument("dense backward system too large: " +
                                std::to_string(k * n_out));
  if (n_out == 0) return Matrix(k, 0);
  const Matrix A = dense_backward_operator(V, S, outputs, g_norms);
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = 1e-10 * sigma(0);
  Vector inv_sigma = Vector::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cutoff) inv_sigma(i) = 1.0 / sigma(i);
  const Matrix pinv =
      svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().transpose();
  const Vector rhs = d_V_O.reshaped();
  const Vector x = pinv * rhs;
  return x.reshaped(k, n_out);
}

Vector finite_difference(const ScalarFn& fn, const Vector& point, double h) {
  Vector grad(point.size());
  Vector x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    x(i) = point(i) + h;
    const double plus = fn(x);
    x(i) = point(i) - h;
    const double minus = fn(x);
    x(i) = point(i);
    if (!std::isfinite(plus) || !std::isfinite(minus))
      throw std::runtime_error("finite_difference: non-finite evaluation at " +
                               std::to_string(i));
    grad(i) = (plus - minus) / (2.0 * h);
  }
  return grad;
}

}  // namespace satnet::oracle
