#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

namespace capflex {

// Uniform Cartesian grid over [-1,1]^2.  Node (ix, iy) sits at
// (-1 + ix*spacing, -1 + iy*spacing), linear index iy*n + ix (row-major).
// Values are stored on the full square; the mask flags nodes of the closed
// unit disk, and all norms/queries restrict to it.
struct Grid {
  int n = 0;
  double spacing = 0.0;
  std::vector<uint8_t> mask;

  Grid() = default;
  explicit Grid(int n_per_axis);

  int size() const { return n * n; }
  double coord(int i) const { return -1.0 + spacing * static_cast<double>(i); }
  int ix_of(int idx) const { return idx % n; }
  int iy_of(int idx) const { return idx / n; }
  double x1_of(int idx) const { return coord(ix_of(idx)); }
  double x2_of(int idx) const { return coord(iy_of(idx)); }
  double radius_of(int idx) const { return std::hypot(x1_of(idx), x2_of(idx)); }
  bool masked(int idx) const { return mask[static_cast<size_t>(idx)] != 0; }

  // Masked nodes with |x| in the closed band [lo, hi], row-major order.
  std::vector<int> annulus(double lo, double hi) const;
  const std::vector<int>& masked_nodes() const { return masked_; }
  // Masked nodes lying on the unit circle itself (up to 1e-9).
  std::vector<int> rim_nodes() const { return annulus(1.0 - 1e-9, 1.0 + 1e-9); }

 private:
  std::vector<int> masked_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(int n_per_axis);

}  // namespace capflex
