// SPDX-License-Identifier: Apache-2.0

#include "satnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "satnet/oracle.hpp"
#include <Eigen/Eigenvalues>

namespace satnet {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

namespace {

LayerConfig tight(LayerConfig cfg, const GradcheckOptions& o) {
  cfg.tol = o.forward_tol;
  cfg.max_sweeps = o.max_sweeps;
  cfg.delta = o.delta;
  return cfg;
}

}  // namespace

bool fixed_point_isolated(const ForwardContext& ctx, const Matrix& S, double rel_gap) {
  const Matrix A = oracle::dense_backward_operator(ctx.V.V, S, ctx.outputs, ctx.stats.g_norms);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  Vector ev = eig.eigenvalues().cwiseAbs();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<double>());
  const long k = ctx.V.rank();
  const long tangent = (k - 1) * static_cast<long>(ctx.outputs.size());
  const long free_dims = std::max(0L, k - 1 - static_cast<long>(ctx.inputs.size()));
  const long rotations = free_dims * (free_dims - 1) / 2;
  const long needed = tangent - rotations;
  if (needed <= 0) return true;
  return ev(needed - 1) > rel_gap * ev(0);
}

GradcheckInstance make_gradcheck_instance(const GradcheckOptions& o, uint64_t seed) {
  if (o.max_real < 2 || o.max_aux < 0 || o.max_clauses < 1)
    throw std::invalid_argument("gradcheck sizes too small");
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(o.delta, 1.0 - o.delta);

  GradcheckInstance inst;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int n_real = uniform_int(2, o.max_real);
    const int n_aux = uniform_int(0, o.max_aux);
    const int m = uniform_int(std::min(2, o.max_clauses), o.max_clauses);
    inst.cfg = tight(LayerConfig::make(n_real, n_aux, m, rng()), o);
    inst.state = init_layer(inst.cfg);
    for (Eigen::Index c = 0; c < inst.state.weights.S.cols(); ++c)
      for (Eigen::Index r = 0; r < inst.state.weights.S.rows(); ++r)
        inst.state.weights.S(r, c) = normal(rng) / std::sqrt(static_cast<double>(m));

    std::vector<int> vars(static_cast<std::size_t>(n_real));
    std::iota(vars.begin(), vars.end(), 1);
    std::shuffle(vars.begin(), vars.end(), rng);
    const int n_in = uniform_int(1, n_real - 1);
    inst.inputs.assign(vars.begin(), vars.begin() + n_in);
    std::sort(inst.inputs.begin(), inst.inputs.end());
    inst.z_in.resize(n_in);
    for (int t = 0; t < n_in; ++t) inst.z_in(t) = unit(rng);

    const ForwardContext ctx = forward(inst.inputs, inst.z_in, inst.state, inst.cfg);
    inst.loss_weights = Vector::Zero(static_cast<Eigen::Index>(ctx.outputs.size()));
    bool ok = ctx.stats.converged && ctx.stats.g_norms.minCoeff() > 1e-6 &&
              fixed_point_isolated(ctx, inst.state.weights.S, 1e-6);
    for (std::size_t t = 0; t < ctx.outputs.size() && ok; ++t) {
      if (ctx.outputs[t] > n_real) continue;
      const double z = ctx.z_out(static_cast<Eigen::Index>(t));
      ok = z >= o.delta && z <= 1.0 - o.delta;
      inst.loss_weights(static_cast<Eigen::Index>(t)) = normal(rng);
    }
    if (ok) return inst;
    ++inst.redraws;
  }
  throw std::runtime_error("gradcheck: could not draw a usable instance");
}

double gradcheck_loss(const GradcheckInstance& inst, const Matrix& S, const Vector& z_in) {
  LayerState state = inst.state;
  state.weights.S = S;
  const ForwardContext ctx = forward(inst.inputs, z_in, state, inst.cfg);
  return inst.loss_weights.dot(ctx.z_out);
}

GradcheckReport run_gradcheck(const GradcheckOptions& o) {
  GradcheckReport report;
  auto record = [&](BlockReport& block, double analytic, double numeric) {
    const double err = relative_error(analytic, numeric);
    ++block.coords;
    if (err <= o.tolerance) ++block.within;
    block.worst = std::max(block.worst, err);
  };

  for (int i = 0; i < o.instances; ++i) {
    const GradcheckInstance inst = make_gradcheck_instance(o, o.seed * 1000003ULL + static_cast<uint64_t>(i));
    report.redraws += inst.redraws;
    const ForwardContext ctx = forward(inst.inputs, inst.z_in, inst.state, inst.cfg);
    const SolverOptions back{1e-13, o.max_sweeps};
    const GradBundle g = backward(ctx, inst.state, inst.cfg, inst.loss_weights, Vector(), &back);

    const Matrix& S0 = inst.state.weights.S;
    const Vector s_flat = S0.reshaped();
    const Vector num_S = oracle::finite_difference(
        [&](const Vector& x) {
          return gradcheck_loss(inst, x.reshaped(S0.rows(), S0.cols()), inst.z_in);
        },
        s_flat, o.h);
    const Vector ana_S = g.d_S.reshaped();
    for (Eigen::Index c = 0; c < ana_S.size(); ++c) record(report.d_S, ana_S(c), num_S(c));

    const Vector num_z = oracle::finite_difference(
        [&](const Vector& z) { return gradcheck_loss(inst, S0, z); }, inst.z_in, o.h);
    for (Eigen::Index t = 0; t < num_z.size(); ++t) record(report.d_z_in, g.d_z_in(t), num_z(t));
    ++report.instances;
  }
  auto block_ok = [&](const BlockReport& b) {
    return b.fraction() >= o.coverage && b.worst <= o.worst_tolerance;
  };
  report.passed = block_ok(report.d_S) && block_ok(report.d_z_in);
  return report;
}

std::string GradcheckReport::text(const GradcheckOptions& o) const {
  std::ostringstream out;
  char line[256];
  out << "gradcheck: " << instances << " instances (seed " << o.seed << ", " << redraws
      << " redraws), tolerance " << o.tolerance << ", coverage " << o.coverage
      << ", worst bound " << o.worst_tolerance << '\n';
  auto block = [&](const char* name, const BlockReport& b) {
    std::snprintf(line, sizeof(line),
                  "  %-5s coords=%zu within=%zu fraction=%.4f worst_rel_err=%.3e\n", name,
                  b.coords, b.within, b.fraction(), b.worst);
    out << line;
  };
  block("d_S", d_S);
  block("d_z", d_z_in);
  out << (passed ? "PASS" : "FAIL") << '\n';
  return out.str();
}

}  // namespace satnet
