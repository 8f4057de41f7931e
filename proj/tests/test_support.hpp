// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit tests: random instances and naive reference
// computations that deliberately avoid the library's code paths.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "satnet/sdp_solver.hpp"

namespace satnet::testing {

inline Vector random_unit(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(k);
  for (int i = 0; i < k; ++i) v(i) = normal(rng);
  return v / v.norm();
}

inline Matrix random_gaussian(int rows, int cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix M(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) M(r, c) = normal(rng);
  return M;
}

inline SphereEmbedding random_sphere(int n, int k, std::mt19937_64& rng) {
  SphereEmbedding V{Matrix(k, n + 1)};
  for (int c = 0; c <= n; ++c) V.V.col(c) = random_unit(k, rng);
  return V;
}

/// Clauses of 1..max_len distinct literals with random signs.
inline CnfInstance random_cnf(int n, int m, std::mt19937_64& rng, int max_len = 3) {
  CnfInstance cnf;
  cnf.num_vars = n;
  std::uniform_int_distribution<int> var(0, n - 1);
  std::uniform_int_distribution<int> len(1, std::min(max_len, n));
  for (int j = 0; j < m; ++j) {
    std::vector<int8_t> clause(static_cast<std::size_t>(n), 0);
    const int want = len(rng);
    for (int placed = 0; placed < want;) {
      const int v = var(rng);
      if (clause[static_cast<std::size_t>(v)] != 0) continue;
      clause[static_cast<std::size_t>(v)] = (rng() & 1) ? 1 : -1;
      ++placed;
    }
    cnf.clauses.push_back(std::move(clause));
  }
  return cnf;
}

/// Literal-by-literal clause count.
inline int count_satisfied(const CnfInstance& cnf, const Assignment& a) {
  int count = 0;
  for (const auto& clause : cnf.clauses) {
    bool sat = false;
    for (int i = 0; i < cnf.num_vars; ++i) {
      const int s = clause[static_cast<std::size_t>(i)];
      if ((s > 0 && a[static_cast<std::size_t>(i)] > 0) || (s < 0 && a[static_cast<std::size_t>(i)] < 0))
        sat = true;
    }
    count += sat ? 1 : 0;
  }
  return count;
}

/// Assignment for the bits of an integer; variable 1 is the most significant.
inline Assignment assignment_from_code(int n, unsigned code) {
  Assignment a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = (code >> (n - 1 - i)) & 1u ? 1 : -1;
  return a;
}

/// sum_{i,j} (S^T S)_ij (V^T V)_ij with explicit loops.
inline double naive_objective(const Matrix& V, const Matrix& S) {
  const auto cols = S.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < cols; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double ss = 0.0, vv = 0.0;
      for (Eigen::Index r = 0; r < S.rows(); ++r) ss += S(r, i) * S(r, j);
      for (Eigen::Index r = 0; r < V.rows(); ++r) vv += V(r, i) * V(r, j);
      total += ss * vv;
    }
  return total;
}

inline double max_abs(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace satnet::testing
