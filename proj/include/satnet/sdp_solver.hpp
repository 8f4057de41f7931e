// SPDX-License-Identifier: Apache-2.0
//
// Low-rank SDP relaxation of MAXSAT, the mixing-method coordinate descent
// that solves it, and rounding back to discrete assignments.
//
// Column 0 of every (n+1)-column matrix is the truth direction; columns
// 1..n are the problem variables (real variables first, then auxiliaries).

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace satnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Index of the truth column in S and V.
inline constexpr int kTruth = 0;

/// Discrete assignment over variables 1..n stored at positions 0..n-1;
/// every entry is +1 (true) or -1 (false).
using Assignment = std::vector<int8_t>;

struct CnfInstance {
  int num_vars = 0;
  /// One dense sign vector of length num_vars per clause.
  std::vector<std::vector<int8_t>> clauses;

  /// Throws std::invalid_argument on an empty clause, a sign outside
  /// {-1, 0, 1}, or a length mismatch.
  void validate() const;
};

/// Learnable m x (n+1) clause matrix S.
struct ClauseWeights {
  Matrix S;

  int num_clauses() const { return static_cast<int>(S.rows()); }
  int num_vars() const { return static_cast<int>(S.cols()) - 1; }
};

/// k x (n+1) matrix V of unit-norm relaxation vectors.
struct SphereEmbedding {
  Matrix V;

  int rank() const { return static_cast<int>(V.rows()); }
  int num_vars() const { return static_cast<int>(V.cols()) - 1; }
  auto truth() const { return V.col(kTruth); }
};

/// Smallest rank for which the low-rank problem recovers the SDP optimum:
/// floor(sqrt(2n)) + 1.
int rank_for(int n);

/// Builds S = [s_T s_1 ... s_n] diag(1 / sqrt(4 |s_j|)) with s_T = -1 and
/// |s_j| the number of literals in clause j.
ClauseWeights clause_matrix_from_cnf(const CnfInstance& cnf);

/// <S^T S, V^T V>, evaluated as ||S V^T||_F^2.
double sdp_objective(const SphereEmbedding& V, const ClauseWeights& S);

/// g_i = V S^T s_i - ||s_i||^2 v_i. Requires i != kTruth.
Vector compute_g(const SphereEmbedding& V, const ClauseWeights& S, int i);

struct SolverOptions {
  double tol = 1e-4;
  int max_sweeps = 40;
};

/// Below this norm a coordinate block is treated as degenerate: the forward
/// pass keeps v_o and the backward pass freezes u_o at zero.
inline constexpr double kDegenerateGradNorm = 1e-12;

/// Optional hooks used by tests to watch the solver. Both may be empty.
struct ForwardObserver {
  /// Called after each single-column update with the current V.
  std::function<void(const Matrix& V, int column)> on_update;
  /// Called at the end of each sweep with V and the cached Omega = V S^T.
  std::function<void(const Matrix& V, const Matrix& omega)> on_sweep;
};

struct ForwardStats {
  int sweeps = 0;
  bool converged = false;
  /// max_o ||v_o - v_o^prev||_inf over the last sweep.
  double last_delta = 0.0;
  /// ||g_o|| at the returned V, one per output in the order given.
  Vector g_norms;
  /// Count of updates skipped because ||g_o|| was degenerate.
  int skipped_updates = 0;
};

/// Mixing-method block coordinate descent over the output columns only.
/// Outputs are visited in the given order each sweep; Omega = V S^T is
/// kept current with rank-one updates. Throws std::invalid_argument if any
/// column of V is not unit-norm on entry or dimensions disagree.
ForwardStats coordinate_descent_forward(SphereEmbedding& V,
                                        const ClauseWeights& S,
                                        std::span<const int> outputs,
                                        const SolverOptions& options,
                                        const ForwardObserver* observer = nullptr);

/// z_o = acos(-v_o^T v_T) / pi, clamped into [0, 1].
Vector assignment_probabilities(const SphereEmbedding& V,
                                std::span<const int> outputs);

enum class RoundObjective {
  /// Clause count of the CNF read off the sign pattern of S (exact for S
  /// built by clause_matrix_from_cnf).
  kClauseCount,
  /// Negated discrete energy -||S [1; v~]||^2, for learned dense S.
  kEnergy,
};

/// Score used by randomized_round; larger is better.
double round_score(const Assignment& assignment, const ClauseWeights& S,
                   RoundObjective objective);

/// Hyperplane rounding of every variable column. Draws num_samples
/// Gaussian hyperplanes; returns the best-scoring assignment (first wins
/// ties). Deterministic in seed.
Assignment randomized_round(const SphereEmbedding& V, const ClauseWeights& S,
                            int num_samples, uint64_t seed,
                            RoundObjective objective = RoundObjective::kClauseCount);

/// Number of clauses with at least one true literal.
int maxsat_count(const Assignment& assignment, const CnfInstance& cnf);

/// k x (n+1) embedding with i.i.d. Gaussian columns normalized to unit length.
SphereEmbedding random_embedding(int n, int k, uint64_t seed);

struct CnfSolution {
  SphereEmbedding V;
  ForwardStats stats;
  Assignment assignment;
  int satisfied = 0;
};

/// Solves the relaxation of a CNF from a random start (rank_for(n)) over
/// every variable, then rounds with round_samples hyperplanes.
CnfSolution solve_cnf(const CnfInstance& cnf, int round_samples, uint64_t seed,
                      const SolverOptions& options = {});

/// Throws std::invalid_argument unless every column of V has unit norm
/// within tol.
void require_unit_columns(const Matrix& V, double tol);

}  // namespace satnet
