#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "capflex/grid.hpp"

namespace capflex {

struct ScalarField {
  GridPtr grid;
  std::vector<double> v;  // size n*n

  ScalarField() = default;
  explicit ScalarField(GridPtr g) : grid(std::move(g)), v(grid->size(), 0.0) {}
  double& at(int idx) { return v[static_cast<size_t>(idx)]; }
  double at(int idx) const { return v[static_cast<size_t>(idx)]; }
};

// Sampled map into R^dim carrying value and first-derivative samples.
// jac(idx, i, k) = d v_i / d x_k.
struct JetField {
  GridPtr grid;
  int dim = 0;
  std::vector<double> values;  // node*dim
  std::vector<double> jac;     // node*dim*2
  bool analytic_jac = false;

  JetField() = default;
  JetField(GridPtr g, int d)
      : grid(std::move(g)),
        dim(d),
        values(static_cast<size_t>(grid->size()) * d, 0.0),
        jac(static_cast<size_t>(grid->size()) * d * 2, 0.0) {}

  double& value(int idx, int i) { return values[static_cast<size_t>(idx) * dim + i]; }
  double value(int idx, int i) const { return values[static_cast<size_t>(idx) * dim + i]; }
  double& dvalue(int idx, int i, int k) {
    return jac[(static_cast<size_t>(idx) * dim + i) * 2 + k];
  }
  double dvalue(int idx, int i, int k) const {
    return jac[(static_cast<size_t>(idx) * dim + i) * 2 + k];
  }
};

// Symmetric 2x2 matrix per node, stored as the three independent entries.
struct Sym2 {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;

  Sym2 operator+(const Sym2& o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
  Sym2 operator-(const Sym2& o) const { return {a11 - o.a11, a12 - o.a12, a22 - o.a22}; }
  Sym2 operator*(double s) const { return {a11 * s, a12 * s, a22 * s}; }
  Sym2& operator+=(const Sym2& o) {
    a11 += o.a11;
    a12 += o.a12;
    a22 += o.a22;
    return *this;
  }
  double min_eig() const;
  double max_abs() const;
  double frob() const;  // Frobenius norm counting the off-diagonal twice
};

inline Sym2 sym_outer(double v1, double v2) { return {v1 * v1, v1 * v2, v2 * v2}; }
// sym(a b^T) for two 2-vectors.
inline Sym2 sym_of(double a1, double a2, double b1, double b2) {
  return {a1 * b1, 0.5 * (a1 * b2 + a2 * b1), a2 * b2};
}
inline Sym2 sym_identity() { return {1.0, 0.0, 1.0}; }

struct MetricField {
  GridPtr grid;
  std::vector<double> a11, a12, a22;

  MetricField() = default;
  explicit MetricField(GridPtr g)
      : grid(std::move(g)),
        a11(grid->size(), 0.0),
        a12(grid->size(), 0.0),
        a22(grid->size(), 0.0) {}

  Sym2 at(int idx) const {
    const auto i = static_cast<size_t>(idx);
    return {a11[i], a12[i], a22[i]};
  }
  void set(int idx, const Sym2& s) {
    const auto i = static_cast<size_t>(idx);
    a11[i] = s.a11;
    a12[i] = s.a12;
    a22[i] = s.a22;
  }
  // Minimum eigenvalue over masked nodes.
  double min_eig_masked() const;
};

// Closed-form map with exact jacobian, evaluated pointwise.
struct AnalyticMap {
  int dim = 0;
  // value(x1, x2, out[dim])
  std::function<void(double, double, double*)> value;
  // jacobian(x1, x2, out[dim*2]) row-major (i,k) -> d v_i / d x_k
  std::function<void(double, double, double*)> jacobian;
};

JetField sample(const AnalyticMap& fn, GridPtr grid);
// Sample values only and fill the jacobian by centered finite differences.
JetField sample_fd(const std::function<void(double, double, double*)>& value, int dim,
                   GridPtr grid);

MetricField pullback(const JetField& v);

// Centered finite-difference jacobian of the stored values (one-sided at the
// square edge).  Used to cross-check analytic jets.
JetField fd_jacobian_of(const JetField& v);

// Gradient of a scalar field, centered in the interior, one-sided at the edge.
void fd_gradient(const ScalarField& f, int idx, double out[2]);

// Max |values| over masked nodes.
double sup_norm_masked(const JetField& f);
double sup_norm_masked(const ScalarField& f);
// Max over masked nodes of the Frobenius norm of entrywise difference.
double max_abs_diff_masked(const MetricField& a, const MetricField& b);

void dump_csv(const JetField& f, const std::string& path);

}  // namespace capflex
