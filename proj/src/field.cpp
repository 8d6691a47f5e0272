#include "capflex/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "capflex/errors.hpp"

namespace capflex {

double Sym2::min_eig() const {
  const double tr = a11 + a22;
  const double det = a11 * a22 - a12 * a12;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return tr / 2.0 - disc;
}

double Sym2::max_abs() const {
  return std::max({std::fabs(a11), std::fabs(a12), std::fabs(a22)});
}

double Sym2::frob() const {
  return std::sqrt(a11 * a11 + 2.0 * a12 * a12 + a22 * a22);
}

double MetricField::min_eig_masked() const {
  double m = std::numeric_limits<double>::infinity();
  for (int idx : grid->masked_nodes()) m = std::min(m, at(idx).min_eig());
  return m;
}

JetField sample(const AnalyticMap& fn, GridPtr grid) {
  JetField out(grid, fn.dim);
  out.analytic_jac = true;
  const int n = grid->n;
  std::vector<double> val(fn.dim), jc(fn.dim * 2);
  for (int iy = 0; iy < n; ++iy) {
    const double y = grid->coord(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double x = grid->coord(ix);
      const int idx = iy * n + ix;
      fn.value(x, y, val.data());
      fn.jacobian(x, y, jc.data());
      for (int i = 0; i < fn.dim; ++i) {
        out.value(idx, i) = val[i];
        out.dvalue(idx, i, 0) = jc[i * 2 + 0];
        out.dvalue(idx, i, 1) = jc[i * 2 + 1];
      }
    }
  }
  return out;
}

namespace {

// One-dimensional FD weights along one axis: returns the two sample offsets
// and the signed weight (centered where possible, one-sided at the edge).
inline void fd_stencil(int i, int n, int& im, int& ip, double& inv_span) {
  im = (i > 0) ? i - 1 : i;
  ip = (i < n - 1) ? i + 1 : i;
  inv_span = 1.0 / static_cast<double>(ip - im);
}

}  // namespace

JetField sample_fd(const std::function<void(double, double, double*)>& value, int dim,
                   GridPtr grid) {
  JetField out(grid, dim);
  out.analytic_jac = false;
  const int n = grid->n;
  std::vector<double> val(dim);
  for (int iy = 0; iy < n; ++iy) {
    const double y = grid->coord(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double x = grid->coord(ix);
      const int idx = iy * n + ix;
      value(x, y, val.data());
      for (int i = 0; i < dim; ++i) out.value(idx, i) = val[i];
    }
  }
  JetField fd = fd_jacobian_of(out);
  out.jac = std::move(fd.jac);
  return out;
}

MetricField pullback(const JetField& v) {
  MetricField g(v.grid);
  const int nn = v.grid->size();
  for (int idx = 0; idx < nn; ++idx) {
    double s11 = 0.0, s12 = 0.0, s22 = 0.0;
    for (int i = 0; i < v.dim; ++i) {
      const double d1 = v.dvalue(idx, i, 0);
      const double d2 = v.dvalue(idx, i, 1);
      s11 += d1 * d1;
      s12 += d1 * d2;
      s22 += d2 * d2;
    }
    g.a11[static_cast<size_t>(idx)] = s11;
    g.a12[static_cast<size_t>(idx)] = s12;
    g.a22[static_cast<size_t>(idx)] = s22;
  }
  return g;
}

JetField fd_jacobian_of(const JetField& v) {
  const Grid& g = *v.grid;
  JetField out(v.grid, v.dim);
  const double h = g.spacing;
  for (int iy = 0; iy < g.n; ++iy) {
    int jm, jp;
    double wy;
    fd_stencil(iy, g.n, jm, jp, wy);
    for (int ix = 0; ix < g.n; ++ix) {
      int im, ip;
      double wx;
      fd_stencil(ix, g.n, im, ip, wx);
      const int idx = iy * g.n + ix;
      for (int i = 0; i < v.dim; ++i) {
        out.dvalue(idx, i, 0) =
            (v.value(iy * g.n + ip, i) - v.value(iy * g.n + im, i)) * wx / h;
        out.dvalue(idx, i, 1) =
            (v.value(jp * g.n + ix, i) - v.value(jm * g.n + ix, i)) * wy / h;
      }
    }
  }
  return out;
}

void fd_gradient(const ScalarField& f, int idx, double out[2]) {
  const Grid& g = *f.grid;
  const int ix = g.ix_of(idx), iy = g.iy_of(idx);
  int im, ip, jm, jp;
  double wx, wy;
  fd_stencil(ix, g.n, im, ip, wx);
  fd_stencil(iy, g.n, jm, jp, wy);
  out[0] = (f.at(iy * g.n + ip) - f.at(iy * g.n + im)) * wx / g.spacing;
  out[1] = (f.at(jp * g.n + ix) - f.at(jm * g.n + ix)) * wy / g.spacing;
}

double sup_norm_masked(const JetField& f) {
  double m = 0.0;
  for (int idx : f.grid->masked_nodes()) {
    double s = 0.0;
    for (int i = 0; i < f.dim; ++i) s += f.value(idx, i) * f.value(idx, i);
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

double sup_norm_masked(const ScalarField& f) {
  double m = 0.0;
  for (int idx : f.grid->masked_nodes()) m = std::max(m, std::fabs(f.at(idx)));
  return m;
}

double max_abs_diff_masked(const MetricField& a, const MetricField& b) {
  double m = 0.0;
  for (int idx : a.grid->masked_nodes()) m = std::max(m, (a.at(idx) - b.at(idx)).max_abs());
  return m;
}

void dump_csv(const JetField& f, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw IoError("cannot open " + path);
  std::fprintf(fp, "x1,x2");
  for (int i = 0; i < f.dim; ++i) std::fprintf(fp, ",c%d", i);
  std::fprintf(fp, "\n");
  for (int idx : f.grid->masked_nodes()) {
    std::fprintf(fp, "%.17g,%.17g", f.grid->x1_of(idx), f.grid->x2_of(idx));
    for (int i = 0; i < f.dim; ++i) std::fprintf(fp, ",%.17g", f.value(idx, i));
    std::fprintf(fp, "\n");
  }
  std::fclose(fp);
}

}  // namespace capflex
