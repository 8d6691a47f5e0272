#include "capflex/grid.hpp"

#include "capflex/errors.hpp"

namespace capflex {

Grid::Grid(int n_per_axis) : n(n_per_axis) {
  if (n < 3) throw ConfigError("grid needs at least 3 nodes per axis");
  spacing = 2.0 / static_cast<double>(n - 1);
  mask.assign(static_cast<size_t>(n) * n, 0);
  const double tol = 1e-12;
  for (int iy = 0; iy < n; ++iy) {
    const double y = coord(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double x = coord(ix);
      const int idx = iy * n + ix;
      if (x * x + y * y <= 1.0 + tol) {
        mask[static_cast<size_t>(idx)] = 1;
        masked_.push_back(idx);
      }
    }
  }
}

std::vector<int> Grid::annulus(double lo, double hi) const {
  std::vector<int> out;
  for (int idx : masked_) {
    const double r = radius_of(idx);
    if (r >= lo && r <= hi) out.push_back(idx);
  }
  return out;
}

GridPtr make_grid(int n_per_axis) { return std::make_shared<Grid>(n_per_axis); }

}  // namespace capflex
