#include "capflex/decomp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "capflex/errors.hpp"

namespace capflex {

PrimitiveBasis primitive_basis() {
  PrimitiveBasis b;
  for (int k = 0; k < 3; ++k) {
    const double th = M_PI / 3.0 * k;  // 0, 60, 120 degrees
    b.nu[k] = {std::cos(th), std::sin(th)};
  }
  Eigen::Matrix3d G;
  for (int k = 0; k < 3; ++k) {
    const Sym2 p = sym_outer(b.nu[k][0], b.nu[k][1]);
    G(0, k) = p.a11;
    G(1, k) = p.a12;
    G(2, k) = p.a22;
  }
  const Eigen::Matrix3d Linv = G.inverse();
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j) b.L[k][j] = Linv(k, j);
  return b;
}

std::array<ScalarField, 3> linear_decompose(const MetricField& S,
                                            const PrimitiveBasis& basis) {
  std::array<ScalarField, 3> out{ScalarField(S.grid), ScalarField(S.grid),
                                 ScalarField(S.grid)};
  for (int idx = 0; idx < S.grid->size(); ++idx) {
    const auto c = basis.coeffs(S.at(idx));
    for (int k = 0; k < 3; ++k) out[k].at(idx) = c[k];
  }
  return out;
}

namespace {

std::string node_loc(const Grid& g, int idx) {
  return "node " + std::to_string(idx) + " at (" + std::to_string(g.x1_of(idx)) + ", " +
         std::to_string(g.x2_of(idx)) + ")";
}

}  // namespace

DecompositionResult nonlinear_decompose(GridPtr grid, const std::vector<int>& nodes,
                                        const std::function<NodeProblem(int)>& problem,
                                        const PrimitiveBasis& basis, double c_floor,
                                        double hypothesis_radius, double tol,
                                        int max_iters) {
  DecompositionResult res{{ScalarField(grid), ScalarField(grid), ScalarField(grid)},
                          MetricField(grid),
                          std::vector<int>(grid->size(), 0)};
  res.min_coefficient = std::numeric_limits<double>::infinity();
  const Sym2 P[3] = {basis.primitive(0), basis.primitive(1), basis.primitive(2)};
  for (int idx : nodes) {
    const NodeProblem np = problem(idx);
    // pointwise hypothesis of the perturbed decomposition
    double small = (np.tau - sym_identity()).frob();
    for (int i = 0; i < 3; ++i) small += np.M[i].frob();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) small += np.Lam[i][j].frob();
    res.smallness_measured = std::max(res.smallness_measured, small);
    if (small >= hypothesis_radius)
      throw SmallnessViolated("decomposition hypothesis " + std::to_string(small) +
                              " >= " + std::to_string(hypothesis_radius) + " at " +
                              node_loc(*grid, idx));
    const auto seed = basis.coeffs(np.tau);
    Eigen::Vector3d c;
    for (int i = 0; i < 3; ++i) {
      if (seed[i] <= 0.0)
        throw SmallnessViolated("nonpositive seed coefficient at " + node_loc(*grid, idx));
      c(i) = std::sqrt(seed[i]);
    }
    auto eval_res = [&](const Eigen::Vector3d& cv) {
      Sym2 F = np.tau * -1.0;
      for (int i = 0; i < 3; ++i) {
        F += P[i] * (cv(i) * cv(i));
        F += np.M[i] * cv(i);
        for (int j = 0; j < 3; ++j) F += np.Lam[i][j] * (cv(i) * cv(j));
      }
      return F;
    };
    Sym2 F = eval_res(c);
    int it = 0;
    while (F.frob() > tol) {
      if (++it > max_iters)
        throw NewtonDiverged("residual " + std::to_string(F.frob()) + " after " +
                             std::to_string(max_iters) + " iterations at " +
                             node_loc(*grid, idx));
      Eigen::Matrix3d J;
      for (int i = 0; i < 3; ++i) {
        Sym2 col = P[i] * (2.0 * c(i)) + np.M[i];
        for (int j = 0; j < 3; ++j) col += (np.Lam[i][j] + np.Lam[j][i]) * c(j);
        J(0, i) = col.a11;
        J(1, i) = col.a12;
        J(2, i) = col.a22;
      }
      const Eigen::Vector3d rhs(-F.a11, -F.a12, -F.a22);
      c += J.partialPivLu().solve(rhs);
      F = eval_res(c);
    }
    for (int i = 0; i < 3; ++i) {
      if (c(i) <= c_floor)
        throw SmallnessViolated("coefficient " + std::to_string(c(i)) + " <= floor at " +
                                node_loc(*grid, idx));
      res.c[i].at(idx) = c(i);
      res.min_coefficient = std::min(res.min_coefficient, c(i));
    }
    res.residual.set(idx, F);
    res.newton_iters[static_cast<size_t>(idx)] = it;
    res.max_residual = std::max(res.max_residual, F.frob());
    res.max_newton_iters = std::max(res.max_newton_iters, it);
  }
  return res;
}

DecompositionResult nonlinear_decompose(const MetricField& tau,
                                        const std::array<MetricField, 3>& M,
                                        const std::array<std::array<MetricField, 3>, 3>& Lam,
                                        const PrimitiveBasis& basis, double c_floor,
                                        double hypothesis_radius, double tol,
                                        int max_iters) {
  auto problem = [&](int idx) {
    NodeProblem np;
    np.tau = tau.at(idx);
    for (int i = 0; i < 3; ++i) np.M[i] = M[i].at(idx);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) np.Lam[i][j] = Lam[i][j].at(idx);
    return np;
  };
  return nonlinear_decompose(tau.grid, tau.grid->masked_nodes(), problem, basis, c_floor,
                             hypothesis_radius, tol, max_iters);
}

}  // namespace capflex
