// SPDX-License-Identifier: Apache-2.0

#include "satnet/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

#include "satnet/layer.hpp"
#include "test_support.hpp"

namespace satnet {
namespace {

using testing::random_cnf;
using testing::random_gaussian;

TEST(BruteForce, ContradictoryUnits) {
  const auto best = oracle::brute_force_maxsat(CnfInstance{1, {{1}, {-1}}});
  EXPECT_EQ(best.count, 1);
  EXPECT_EQ(best.assignment, (Assignment{-1}));
}

TEST(BruteForce, EmptyFormula) {
  const auto best = oracle::brute_force_maxsat(CnfInstance{3, {}});
  EXPECT_EQ(best.count, 0);
  EXPECT_EQ(best.assignment, (Assignment{-1, -1, -1}));
}

TEST(BruteForce, LowestBinaryValueWinsTies) {
  // (x1 or x2): 01, 10 and 11 are optimal; 01 is the lowest.
  const auto best = oracle::brute_force_maxsat(CnfInstance{2, {{1, 1}}});
  EXPECT_EQ(best.assignment, (Assignment{-1, 1}));
}

TEST(BruteForce, TooManyVariables) {
  EXPECT_THROW(oracle::brute_force_maxsat(CnfInstance{oracle::kMaxBruteForceVars + 1, {}}),
               std::invalid_argument);
}

TEST(BruteForce, AtLeastBestOfRandomAssignments) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const CnfInstance cnf = random_cnf(10, 20, rng);
    const auto best = oracle::brute_force_maxsat(cnf);
    EXPECT_EQ(testing::count_satisfied(cnf, best.assignment), best.count);
    int sampled = 0;
    for (int s = 0; s < 1000; ++s) {
      Assignment a(10);
      for (auto& x : a) x = (rng() & 1) ? 1 : -1;
      sampled = std::max(sampled, testing::count_satisfied(cnf, a));
    }
    EXPECT_GE(best.count, sampled);
  }
}

// A forward-solved instance with every output's g well away from zero.
struct Solved {
  Matrix V, S;
  std::vector<int> outputs;
  Vector g_norms;
};

Solved solved_instance(int n, int inputs, int m, std::mt19937_64& rng) {
  Solved out;
  const int k = rank_for(n);
  out.S = random_gaussian(m, n + 1, rng);
  SphereEmbedding V = testing::random_sphere(n, k, rng);
  for (int o = inputs + 1; o <= n; ++o) out.outputs.push_back(o);
  const ForwardStats stats =
      coordinate_descent_forward(V, ClauseWeights{out.S}, out.outputs, {1e-12, 100000});
  out.V = V.V;
  out.g_norms = stats.g_norms;
  return out;
}

TEST(DenseBackward, ZeroRightHandSide) {
  std::mt19937_64 rng(5);
  const Solved s = solved_instance(4, 1, 3, rng);
  const Matrix U = oracle::dense_backward_solve(Matrix::Zero(s.V.rows(), 3), s.V, s.S, s.outputs,
                                                s.g_norms);
  EXPECT_EQ(U.rows(), s.V.rows());
  EXPECT_EQ(U.cols(), 3);
  EXPECT_LT(testing::max_abs(U), 1e-14);
}

TEST(DenseBackward, SolutionLiesInProjectedSubspace) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Solved s = solved_instance(5, 2, 4, rng);
    const Matrix rhs = random_gaussian(static_cast<int>(s.V.rows()), 3, rng);
    const Matrix U = oracle::dense_backward_solve(rhs, s.V, s.S, s.outputs, s.g_norms);
    const Matrix P = oracle::output_projector(s.V, s.outputs);
    const Vector u = U.reshaped();
    EXPECT_LT((P * u - u).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(DenseBackward, OperatorStructure) {
  std::mt19937_64 rng(7);
  const Solved s = solved_instance(4, 1, 5, rng);
  const Matrix A = oracle::dense_backward_operator(s.V, s.S, s.outputs, s.g_norms);
  const Eigen::Index k = s.V.rows();
  ASSERT_EQ(A.rows(), k * 3);
  EXPECT_LT((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  // Each v_o spans the kernel of its own projector, so A v_o-block = 0.
  for (int t = 0; t < 3; ++t) {
    Vector x = Vector::Zero(k * 3);
    x.segment(t * k, k) = s.V.col(s.outputs[static_cast<std::size_t>(t)]);
    EXPECT_LT((A * x).cwiseAbs().maxCoeff(), 1e-12);
  }
  // Diagonal block: P_o (||g_o|| I) P_o, since C has a zero diagonal.
  const Vector v = s.V.col(s.outputs[0]);
  const Matrix P0 = Matrix::Identity(k, k) - v * v.transpose();
  EXPECT_LT((A.topLeftCorner(k, k) - s.g_norms(0) * P0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DenseBackward, SizeLimit) {
  const int n = 300, k = rank_for(n);
  Matrix V = Matrix::Zero(k, n + 1);
  V.row(0).setOnes();
  std::vector<int> outputs;
  for (int o = 1; o <= n; ++o) outputs.push_back(o);
  EXPECT_THROW(oracle::dense_backward_solve(Matrix::Zero(k, n), V, Matrix::Zero(1, n + 1), outputs,
                                            Vector::Ones(n)),
               std::invalid_argument);
}

TEST(FiniteDifference, Quadratic) {
  const Vector x = (Vector(4) << 0.3, -1.2, 2.5, 0.0).finished();
  const Vector g = oracle::finite_difference([](const Vector& p) { return 0.5 * p.squaredNorm(); }, x);
  EXPECT_LT((g - x).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FiniteDifference, ObjectiveInOneWeight) {
  std::mt19937_64 rng(8);
  const SphereEmbedding V = testing::random_sphere(3, 3, rng);
  const Matrix S = random_gaussian(2, 4, rng);
  // d/dS ||S V^T||^2 = 2 S V^T V.
  const Matrix analytic = 2.0 * S * V.V.transpose() * V.V;
  const Vector g = oracle::finite_difference(
      [&](const Vector& x) { return sdp_objective(V, ClauseWeights{x.reshaped(2, 4)}); },
      S.reshaped());
  EXPECT_LT((g.reshaped(2, 4) - analytic).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FiniteDifference, ErrorShrinksQuadraticallyWithStep) {
  const Vector x = (Vector(1) << 0.7).finished();
  auto f = [](const Vector& p) { return std::sin(3.0 * p(0)); };
  const double exact = 3.0 * std::cos(2.1);
  const double e4 = std::abs(oracle::finite_difference(f, x, 1e-4)(0) - exact);
  const double e3 = std::abs(oracle::finite_difference(f, x, 1e-3)(0) - exact);
  const double e2 = std::abs(oracle::finite_difference(f, x, 1e-2)(0) - exact);
  EXPECT_NEAR(e2 / e3, 100.0, 1.0);
  EXPECT_NEAR(e3 / e4, 100.0, 5.0);
  // Below ~1e-5 rounding error takes over and the error plateaus.
  const double e6 = std::abs(oracle::finite_difference(f, x, 1e-6)(0) - exact);
  EXPECT_LT(e6, 1e-8);
}

TEST(FiniteDifference, NonFiniteEvaluation) {
  const Vector x = Vector::Zero(2);
  EXPECT_THROW(oracle::finite_difference([](const Vector& p) { return 1.0 / p(0) - 1.0 / p(0); }, x),
               std::runtime_error);
}

}  // namespace
}  // namespace satnet
