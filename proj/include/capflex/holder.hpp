#pragma once

#include <cstdint>

#include "capflex/field.hpp"

namespace capflex {

struct HolderEstimate {
  int k = 0;             // derivative order 0..2
  double alpha = 0.0;    // exponent in [0,1]
  double value = 0.0;
  int pair_budget = 0;   // sampled pairs per dyadic separation band
  bool degraded = false; // pair budget below the masked node count
};

// Estimated Hölder seminorm [D^k f]_alpha over the masked disk.  alpha = 0
// returns the sup norm of D^k f.  Pairs are drawn per dyadic separation band
// with a seeded generator, so the estimate is deterministic.
HolderEstimate holder_seminorm(const JetField& f, int k, double alpha, int pair_budget,
                               uint64_t seed);
HolderEstimate holder_seminorm(const ScalarField& f, int k, double alpha, int pair_budget,
                               uint64_t seed);

// Margin [f]_s - C * ||f||_0^{1-s/r} [f]_r^{s/r} of the interpolation
// inequality on the estimator outputs (non-positive when it holds).
double check_interpolation(const JetField& f, double r, double s, double C, int pair_budget,
                           uint64_t seed);

// Full Hölder norm ||f||_{k,alpha} = sum of sup norms of D^0..D^k plus
// [D^k f]_alpha, from the same estimator.
double holder_norm(const JetField& f, int k, double alpha, int pair_budget, uint64_t seed);

}  // namespace capflex
