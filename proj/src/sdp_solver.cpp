// SPDX-License-Identifier: Apache-2.0

#include "satnet/sdp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace satnet {

void CnfInstance::validate() const {
  if (num_vars < 0) throw std::invalid_argument("negative variable count");
  for (std::size_t j = 0; j < clauses.size(); ++j) {
    const auto& clause = clauses[j];
    if (static_cast<int>(clause.size()) != num_vars)
      throw std::invalid_argument("clause " + std::to_string(j + 1) +
                                  " has wrong length");
    int literals = 0;
    for (int8_t s : clause) {
      if (s < -1 || s > 1)
        throw std::invalid_argument("clause sign outside {-1,0,1}");
      literals += s != 0;
    }
    if (literals == 0)
      throw std::invalid_argument("clause " + std::to_string(j + 1) +
                                  " is empty");
  }
}

int rank_for(int n) {
  if (n < 1) throw std::invalid_argument("rank_for needs n >= 1");
  const long two_n = 2L * n;
  long r = static_cast<long>(std::sqrt(static_cast<double>(two_n)));
  while ((r + 1) * (r + 1) <= two_n) ++r;
  while (r * r > two_n) --r;
  return static_cast<int>(r) + 1;
}

ClauseWeights clause_matrix_from_cnf(const CnfInstance& cnf) {
  cnf.validate();
  const int m = static_cast<int>(cnf.clauses.size());
  ClauseWeights w{Matrix::Zero(m, cnf.num_vars + 1)};
  for (int j = 0; j < m; ++j) {
    const auto& clause = cnf.clauses[j];
    int literals = 0;
    for (int8_t s : clause) literals += s != 0;
    const double scale = 1.0 / std::sqrt(4.0 * literals);
    w.S(j, kTruth) = -scale;
    for (int i = 0; i < cnf.num_vars; ++i) w.S(j, i + 1) = clause[i] * scale;
  }
  return w;
}

namespace {

void require_same_width(const Matrix& V, const Matrix& S) {
  if (V.cols() != S.cols())
    throw std::invalid_argument("V has " + std::to_string(V.cols()) +
                                " columns but S has " +
                                std::to_string(S.cols()));
}

}  // namespace

void require_unit_columns(const Matrix& V, double tol) {
  for (Eigen::Index i = 0; i < V.cols(); ++i) {
    const double norm = V.col(i).norm();
    if (!(std::abs(norm - 1.0) <= tol))
      throw std::invalid_argument("column " + std::to_string(i) +
                                  " of V is not unit norm (" +
                                  std::to_string(norm) + ")");
  }
}

double sdp_objective(const SphereEmbedding& V, const ClauseWeights& S) {
  require_same_width(V.V, S.S);
  return (S.S * V.V.transpose()).squaredNorm();
}

Vector compute_g(const SphereEmbedding& V, const ClauseWeights& S, int i) {
  require_same_width(V.V, S.S);
  if (i <= kTruth || i >= V.V.cols())
    throw std::out_of_range("compute_g column out of range");
  const auto s_i = S.S.col(i);
  return V.V * (S.S.transpose() * s_i) - s_i.squaredNorm() * V.V.col(i);
}

ForwardStats coordinate_descent_forward(SphereEmbedding& embedding,
                                        const ClauseWeights& weights,
                                        std::span<const int> outputs,
                                        const SolverOptions& options,
                                        const ForwardObserver* observer) {
  Matrix& V = embedding.V;
  const Matrix& S = weights.S;
  require_same_width(V, S);
  require_unit_columns(V, 1e-8);
  for (int o : outputs)
    if (o <= kTruth || o >= V.cols())
      throw std::out_of_range("output index out of range");

  ForwardStats stats;
  stats.g_norms = Vector::Zero(static_cast<Eigen::Index>(outputs.size()));
  if (outputs.empty()) {
    stats.converged = true;
    return stats;
  }

  const Eigen::Index k = V.rows();
  Vector s_sq(static_cast<Eigen::Index>(outputs.size()));
  for (std::size_t t = 0; t < outputs.size(); ++t)
    s_sq(t) = S.col(outputs[t]).squaredNorm();

  Matrix omega = V * S.transpose();
  Vector g(k), v_prev(k), dv(k);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double delta = 0.0;
    for (std::size_t t = 0; t < outputs.size(); ++t) {
      const int o = outputs[t];
      g.noalias() = omega * S.col(o);
      g -= s_sq(t) * V.col(o);
      const double g_norm = g.norm();
      if (g_norm < kDegenerateGradNorm) {
        ++stats.skipped_updates;
        continue;
      }
      v_prev = V.col(o);
      V.col(o) = -g / g_norm;
      dv = V.col(o) - v_prev;
      omega.noalias() += dv * S.col(o).transpose();
      delta = std::max(delta, dv.lpNorm<Eigen::Infinity>());
      if (observer && observer->on_update) observer->on_update(V, o);
    }
    stats.sweeps = sweep + 1;
    stats.last_delta = delta;
    if (observer && observer->on_sweep) observer->on_sweep(V, omega);
    if (delta < options.tol) {
      stats.converged = true;
      break;
    }
  }

  omega.noalias() = V * S.transpose();
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const int o = outputs[t];
    g.noalias() = omega * S.col(o);
    g -= s_sq(t) * V.col(o);
    stats.g_norms(t) = g.norm();
  }
  return stats;
}

Vector assignment_probabilities(const SphereEmbedding& V,
                                std::span<const int> outputs) {
  Vector z(static_cast<Eigen::Index>(outputs.size()));
  const auto v_top = V.truth();
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const double c = std::clamp(-V.V.col(outputs[t]).dot(v_top), -1.0, 1.0);
    z(t) = std::clamp(std::acos(c) / std::numbers::pi, 0.0, 1.0);
  }
  return z;
}

double round_score(const Assignment& assignment, const ClauseWeights& weights,
                   RoundObjective objective) {
  const Matrix& S = weights.S;
  if (static_cast<Eigen::Index>(assignment.size()) != S.cols() - 1)
    throw std::invalid_argument("assignment length does not match S");
  if (objective == RoundObjective::kEnergy) {
    Vector x(S.cols());
    x(kTruth) = 1.0;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      x(static_cast<Eigen::Index>(i) + 1) = assignment[i];
    return -(S * x).squaredNorm();
  }
  int satisfied = 0;
  for (Eigen::Index j = 0; j < S.rows(); ++j) {
    for (Eigen::Index i = 1; i < S.cols(); ++i) {
      if (S(j, i) * assignment[i - 1] > 0.0) {
        ++satisfied;
        break;
      }
    }
  }
  return satisfied;
}

Assignment randomized_round(const SphereEmbedding& V, const ClauseWeights& S,
                            int num_samples, uint64_t seed,
                            RoundObjective objective) {
  if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
  require_same_width(V.V, S.S);
  const Eigen::Index k = V.V.rows();
  const Eigen::Index n = V.V.cols() - 1;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector r(k);
  Assignment current(n), best;
  double best_score = 0.0;
  for (int sample = 0; sample < num_samples; ++sample) {
    for (Eigen::Index d = 0; d < k; ++d) r(d) = normal(rng);
    r.normalize();
    const Vector side = V.V.transpose() * r;
    const bool truth_side = side(kTruth) >= 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      current[i] = ((side(i + 1) >= 0.0) == truth_side) ? 1 : -1;
    const double score = round_score(current, S, objective);
    if (sample == 0 || score > best_score) {
      best_score = score;
      best = current;
    }
  }
  return best;
}

int maxsat_count(const Assignment& assignment, const CnfInstance& cnf) {
  if (static_cast<int>(assignment.size()) != cnf.num_vars)
    throw std::invalid_argument("assignment length does not match CNF");
  int satisfied = 0;
  for (const auto& clause : cnf.clauses) {
    for (int i = 0; i < cnf.num_vars; ++i) {
      if (clause[i] * assignment[i] > 0) {
        ++satisfied;
        break;
      }
    }
  }
  return satisfied;
}

SphereEmbedding random_embedding(int n, int k, uint64_t seed) {
  if (n < 0 || k < 1) throw std::invalid_argument("random_embedding: bad dimensions");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SphereEmbedding V{Matrix(k, n + 1)};
  for (int c = 0; c <= n; ++c) {
    do {
      for (int r = 0; r < k; ++r) V.V(r, c) = normal(rng);
    } while (V.V.col(c).norm() < 1e-12);
    V.V.col(c).normalize();
  }
  return V;
}

CnfSolution solve_cnf(const CnfInstance& cnf, int round_samples, uint64_t seed,
                      const SolverOptions& options) {
  cnf.validate();
  const ClauseWeights S = clause_matrix_from_cnf(cnf);
  CnfSolution out;
  out.V = random_embedding(cnf.num_vars, rank_for(cnf.num_vars), seed);
  std::vector<int> outputs(static_cast<std::size_t>(cnf.num_vars));
  for (int i = 0; i < cnf.num_vars; ++i) outputs[static_cast<std::size_t>(i)] = i + 1;
  out.stats = coordinate_descent_forward(out.V, S, outputs, options);
  out.assignment = randomized_round(out.V, S, round_samples, seed + 1);
  out.satisfied = maxsat_count(out.assignment, cnf);
  return out;
}

}  // namespace satnet
