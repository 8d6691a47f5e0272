#pragma once

#include <vector>

#include "capflex/field.hpp"

namespace capflex {

// Discrete mollification kernel: radial bump c*exp(-1/(1-|x/ell|^2)) sampled
// on the grid stencil and normalized so the weights sum to 1 exactly.
struct Kernel {
  double ell = 0.0;
  double spacing = 0.0;
  int radius = 0;            // stencil radius in cells
  std::vector<double> w;     // (2*radius+1)^2 weights, row-major
};

Kernel make_kernel(double ell, double spacing);

// Discrete convolution with zero extension outside the square.  The caller
// guarantees the input is compactly supported at distance >= ell from the rim
// of the disk; when check_support is set, any value above 1e-13 there raises
// SupportViolation.  FFT path for wide kernels, direct summation when the
// stencil radius is at most 4 cells.
ScalarField convolve(const ScalarField& f, const Kernel& k, bool check_support = true);
JetField convolve(const JetField& f, const Kernel& k, bool check_support = true);

// Least-squares log-log slope of ||(fg)*phi - (f*phi)(g*phi)||_0 against ell.
double commutator_test(const ScalarField& f, const ScalarField& g,
                       const std::vector<double>& ell_list);

// Slope of the C^1(B_{1/2}) error of pullback(v * phi_eps) vs pullback(v)
// against eps.
double pullback_commutator_slope(const JetField& v, const std::vector<double>& eps_list);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace capflex
