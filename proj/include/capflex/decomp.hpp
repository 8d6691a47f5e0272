#pragma once

#include <array>
#include <functional>
#include <vector>

#include "capflex/field.hpp"

namespace capflex {

// Three unit directions whose rank-one squares span Sym_2, with the inverse
// linear maps L_k recovering the coefficients: S = sum_k L_k(S) nu_k x nu_k.
struct PrimitiveBasis {
  std::array<std::array<double, 2>, 3> nu;
  std::array<std::array<double, 3>, 3> L;  // row k maps (s11, s12, s22) to L_k(S)

  std::array<double, 3> coeffs(const Sym2& s) const {
    std::array<double, 3> out{};
    const double v[3] = {s.a11, s.a12, s.a22};
    for (int k = 0; k < 3; ++k)
      out[k] = L[k][0] * v[0] + L[k][1] * v[1] + L[k][2] * v[2];
    return out;
  }
  Sym2 primitive(int k) const { return sym_outer(nu[k][0], nu[k][1]); }
  Sym2 reconstruct(const std::array<double, 3>& c) const {
    Sym2 s;
    for (int k = 0; k < 3; ++k) s += primitive(k) * c[k];
    return s;
  }
};

// Directions at 0, 60 and 120 degrees; L is the exact inverse of the 3x3
// Gram system, so L_k(Id) = 2/3 for every k.
PrimitiveBasis primitive_basis();

// L_k(S) per node, exact linear algebra.
std::array<ScalarField, 3> linear_decompose(const MetricField& S,
                                            const PrimitiveBasis& basis);

// Per-node data of the quadratic decomposition problem.
struct NodeProblem {
  Sym2 tau;
  std::array<Sym2, 3> M;
  std::array<std::array<Sym2, 3>, 3> Lam;
};

struct DecompositionResult {
  std::array<ScalarField, 3> c;
  MetricField residual;
  std::vector<int> newton_iters;  // per node, 0 where not solved
  double max_residual = 0.0;
  int max_newton_iters = 0;
  double min_coefficient = 0.0;
  // max over nodes of |tau - Id| + sum|M_i| + sum|Lam_ij|
  double smallness_measured = 0.0;
};

// Newton solve of  sum c_i^2 nu_i x nu_i + sum c_i M_i + sum c_i c_j Lam_ij = tau
// at each listed node, seeded at c_i = sqrt(L_i(tau)).  Throws
// SmallnessViolated when the pointwise hypothesis
// |tau - Id| + sum|M_i| + sum|Lam_ij| < hypothesis_radius fails or a solved
// coefficient drops to the floor c_floor, NewtonDiverged when the iteration
// exhausts max_iters.
DecompositionResult nonlinear_decompose(GridPtr grid, const std::vector<int>& nodes,
                                        const std::function<NodeProblem(int)>& problem,
                                        const PrimitiveBasis& basis, double c_floor,
                                        double hypothesis_radius = 1.0,
                                        double tol = 1e-12, int max_iters = 25);

// Field-based convenience wrapper over the same solver.
DecompositionResult nonlinear_decompose(const MetricField& tau,
                                        const std::array<MetricField, 3>& M,
                                        const std::array<std::array<MetricField, 3>, 3>& Lam,
                                        const PrimitiveBasis& basis, double c_floor,
                                        double hypothesis_radius = 1.0,
                                        double tol = 1e-12, int max_iters = 25);

}  // namespace capflex
