#pragma once

#include <cstdint>
#include <vector>

#include "capflex/field.hpp"

namespace capflex {

// Orthonormal normal frame along an immersion, stored per node.
struct NormalFrame {
  GridPtr grid;
  int dim = 0;  // ambient dimension
  int d = 0;    // number of normals = dim - 2
  std::vector<double> xi;  // node * d * dim

  double get(int idx, int i, int c) const {
    return xi[(static_cast<size_t>(idx) * d + i) * dim + c];
  }
  double* at(int idx) { return &xi[static_cast<size_t>(idx) * d * dim]; }
};

// Constant reference frame e_3, ..., e_m for a planar immersion into R^m
// (image contained in the x1 x2 coordinate plane).  Throws NotPlanar.
std::vector<std::vector<double>> reference_frame(const JetField& u);

// Normal frame at a single node from the jacobian alone: solves the 2x2 Gram
// system for the tangential corrections of the constant reference normals,
// then runs a re-orthogonalizing Gram-Schmidt pass in frame order.
// out has size (dim-2)*dim.  Throws DegenerateGram.
void frame_at(int dim, const double* jac, double* out, double eig_floor = 1e-6);

// Frame along v, with the closeness precondition ||v - u||_1 < rho0 checked
// through the norm estimator.  Throws TooFar or DegenerateGram.
NormalFrame perturbed_frame(const JetField& u, const JetField& v, double rho0,
                            int pair_budget = 4096, uint64_t seed = 1);

// Frame quality over masked nodes: max |<xi_i, xi_j> - delta_ij| and
// max |<grad v, xi_i>|.
struct FrameQuality {
  double orthonormality = 0.0;
  double tangency = 0.0;
};
FrameQuality frame_quality(const NormalFrame& frame, const JetField& v);

}  // namespace capflex
