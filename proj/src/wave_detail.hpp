#pragma once

// Internal helpers shared by the corrugation-wave constructions: rolling frame
// cache, per-node wave context, and the small matrix utilities they need.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "capflex/capgeom.hpp"
#include "capflex/decomp.hpp"
#include "capflex/field.hpp"
#include "capflex/normals.hpp"

namespace capflex {
namespace detail {

constexpr int kDim = 8;
constexpr int kNormals = 6;  // three (sin, cos) pairs

// sym(P^T Q) for two dim x 2 matrices stored row-major (component, direction)
inline Sym2 sym_tt(const double* P, const double* Q) {
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0;
  for (int i = 0; i < kDim; ++i) {
    m00 += P[i * 2] * Q[i * 2];
    m01 += P[i * 2] * Q[i * 2 + 1];
    m10 += P[i * 2 + 1] * Q[i * 2];
    m11 += P[i * 2 + 1] * Q[i * 2 + 1];
  }
  return {m00, 0.5 * (m01 + m10), m11};
}

// P^T v for a dim x 2 matrix and a dim vector
inline void mat_t_vec(const double* P, const double* v, double out[2]) {
  out[0] = out[1] = 0.0;
  for (int i = 0; i < kDim; ++i) {
    out[0] += P[i * 2] * v[i];
    out[1] += P[i * 2 + 1] * v[i];
  }
}

// sym(u g^T) for two 2-vectors
inline Sym2 sym_ug(const double u[2], const double g[2]) {
  return sym_of(u[0], u[1], g[0], g[1]);
}

inline Sym2 pullback_at(const JetField& v, int idx) {
  const double* j = &v.jac[static_cast<size_t>(idx) * v.dim * 2];
  double m00 = 0, m01 = 0, m11 = 0;
  for (int i = 0; i < v.dim; ++i) {
    m00 += j[i * 2] * j[i * 2];
    m01 += j[i * 2] * j[i * 2 + 1];
    m11 += j[i * 2 + 1] * j[i * 2 + 1];
  }
  return {m00, m01, m11};
}

// Rolling three-row cache of orthonormal normal frames along a jet field.
// Rows are requested in nondecreasing order; the source rows a cached frame
// row was computed from must not be mutated before the cache moves past them.
class FrameRows {
 public:
  explicit FrameRows(const JetField& v) : v_(v), n_(v.grid->n) {
    for (auto& b : buf_) b.assign(static_cast<size_t>(n_) * kNormals * kDim, 0.0);
  }

  const double* at(int iy, int ix) {
    return row(iy) + static_cast<size_t>(ix) * kNormals * kDim;
  }

 private:
  const double* row(int iy) {
    for (int s = 0; s < 3; ++s)
      if (iy_[s] == iy) return buf_[s].data();
    int victim = 0;
    for (int s = 1; s < 3; ++s)
      if (iy_[s] < iy_[victim]) victim = s;
    double* out = buf_[victim].data();
    for (int ix = 0; ix < n_; ++ix) {
      const int idx = iy * n_ + ix;
      double* dst = out + static_cast<size_t>(ix) * kNormals * kDim;
      if (!v_.grid->masked(idx)) {
        std::fill(dst, dst + kNormals * kDim, 0.0);
        continue;
      }
      frame_at(kDim, &v_.jac[static_cast<size_t>(idx) * kDim * 2], dst);
    }
    iy_[victim] = iy;
    return out;
  }

  const JetField& v_;
  int n_ = 0;
  std::array<std::vector<double>, 3> buf_;
  std::array<int, 3> iy_ = {-2, -3, -4};
};

// Everything the wave construction needs at one node.
struct NodeCtx {
  double sin_[3], cos_[3];
  double zeta[kNormals][kDim];
  double dzeta[kNormals][kDim][2];
  double A[3][kDim * 2], B[3][kDim * 2], C[3][kDim];
  const double* dv = nullptr;  // jacobian of the carrier map at the node
  Sym2 vbar_pb;
  double h = 0, sqrt_h = 0, dsqrt_h[2] = {0, 0};
  double eta = 0, deta[2] = {0, 0};
  Sym2 M[3];
  Sym2 Lam[3][3];
  double frame_orth = 0, frame_tang = 0;
};

inline void build_node_ctx(const JetField& vbar, FrameRows& frames,
                           const ScalarField& h_field, const ScalarField& sqrt_h,
                           const CutoffProfile& etaprof, const PrimitiveBasis& basis,
                           double lam, int idx, NodeCtx& ctx) {
  const Grid& g = *vbar.grid;
  const int ix = g.ix_of(idx), iy = g.iy_of(idx);
  const double x1 = g.x1_of(idx), x2 = g.x2_of(idx);
  const double r = g.radius_of(idx);

  const double* z = frames.at(iy, ix);
  const double* zxm = frames.at(iy, ix - 1);
  const double* zxp = frames.at(iy, ix + 1);
  const double* zym = frames.at(iy - 1, ix);
  const double* zyp = frames.at(iy + 1, ix);
  const double inv2h = 1.0 / (2.0 * g.spacing);
  for (int i = 0; i < kNormals; ++i)
    for (int c = 0; c < kDim; ++c) {
      ctx.zeta[i][c] = z[i * kDim + c];
      ctx.dzeta[i][c][0] = (zxp[i * kDim + c] - zxm[i * kDim + c]) * inv2h;
      ctx.dzeta[i][c][1] = (zyp[i * kDim + c] - zym[i * kDim + c]) * inv2h;
    }

  ctx.dv = &vbar.jac[static_cast<size_t>(idx) * kDim * 2];
  ctx.vbar_pb = pullback_at(vbar, idx);
  ctx.h = h_field.at(idx);
  ctx.sqrt_h = sqrt_h.at(idx);
  fd_gradient(sqrt_h, idx, ctx.dsqrt_h);
  ctx.eta = etaprof.value(r);
  const double de = r > 0.0 ? etaprof.deriv(r) / r : 0.0;
  ctx.deta[0] = de * x1;
  ctx.deta[1] = de * x2;

  // frame quality bookkeeping
  ctx.frame_orth = 0.0;
  ctx.frame_tang = 0.0;
  for (int i = 0; i < kNormals; ++i) {
    for (int j = i; j < kNormals; ++j) {
      double dot = 0;
      for (int c = 0; c < kDim; ++c) dot += ctx.zeta[i][c] * ctx.zeta[j][c];
      ctx.frame_orth = std::max(ctx.frame_orth, std::fabs(dot - (i == j ? 1.0 : 0.0)));
    }
    double t[2];
    mat_t_vec(ctx.dv, ctx.zeta[i], t);
    ctx.frame_tang = std::max(ctx.frame_tang, std::max(std::fabs(t[0]), std::fabs(t[1])));
  }

  for (int i = 0; i < 3; ++i) {
    const double ph = lam * (basis.nu[i][0] * x1 + basis.nu[i][1] * x2);
    ctx.sin_[i] = std::sin(ph);
    ctx.cos_[i] = std::cos(ph);
    const double* z1 = ctx.zeta[i];
    const double* z2 = ctx.zeta[3 + i];
    for (int c = 0; c < kDim; ++c) {
      for (int k = 0; k < 2; ++k) {
        ctx.A[i][c * 2 + k] =
            (ctx.cos_[i] * z1[c] - ctx.sin_[i] * z2[c]) * basis.nu[i][k];
        ctx.B[i][c * 2 + k] =
            ctx.sin_[i] * ctx.dzeta[i][c][k] + ctx.cos_[i] * ctx.dzeta[3 + i][c][k];
      }
      ctx.C[i][c] = ctx.sin_[i] * z1[c] + ctx.cos_[i] * z2[c];
    }
  }

  const double inv_lam = 1.0 / lam;
  const double inv_lam2 = inv_lam * inv_lam;
  for (int i = 0; i < 3; ++i)
    ctx.M[i] = sym_tt(ctx.dv, ctx.B[i]) * (2.0 * inv_lam / ctx.sqrt_h);
  const Sym2 de_outer = sym_outer(ctx.deta[0], ctx.deta[1]);
  const Sym2 de_dh = sym_ug(ctx.deta, ctx.dsqrt_h);
  const Sym2 dh_outer = sym_outer(ctx.dsqrt_h[0], ctx.dsqrt_h[1]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double bc[2];
      mat_t_vec(ctx.B[i], ctx.C[j], bc);
      Sym2 L = sym_tt(ctx.A[i], ctx.B[j]) * (2.0 * inv_lam);
      L += sym_tt(ctx.B[i], ctx.B[j]) * inv_lam2;
      L += sym_ug(bc, ctx.deta) * (2.0 * inv_lam2);
      L += sym_ug(bc, ctx.dsqrt_h) * (2.0 * inv_lam2 / ctx.sqrt_h);
      if (i == j) {
        L += de_outer * inv_lam2;
        L += de_dh * (2.0 * inv_lam2 / ctx.sqrt_h);
        L += dh_outer * (inv_lam2 / ctx.h);
      }
      ctx.Lam[i][j] = L;
    }
}

}  // namespace detail
}  // namespace capflex
