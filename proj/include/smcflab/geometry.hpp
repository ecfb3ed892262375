#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "smcflab/calculus.hpp"
#include "smcflab/grid.hpp"

namespace smcflab {

// Graph geometry over the torus: Q(p) = sqrt(1+|p|^2) is the area element,
// v(p) = p/Q(p) the horizontal part of the downward normal. The drift of the
// Ito formulation is (1+eps)*lap(u) - 0.5*v'(D2 u)v, and the identity
// Q div v = lap(u) - v'(D2 u)v ties the divergence form to it.

inline ScalarField area_element(const VectorField& p) {
  const GridSpec& g = p.grid;
  ScalarField out(g);
  const std::size_t vol = g.volume();
  for (std::size_t k = 0; k < vol; ++k) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double x = p.at(a, k);
      s += x * x;
    }
    out.values[k] = std::sqrt(1.0 + s);
  }
  return out;
}

inline VectorField normal_projection(const VectorField& p) {
  const GridSpec& g = p.grid;
  VectorField out(g);
  const std::size_t vol = g.volume();
  for (std::size_t k = 0; k < vol; ++k) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double x = p.at(a, k);
      s += x * x;
    }
    const double invq = 1.0 / std::sqrt(1.0 + s);
    for (int a = 0; a < g.dim; ++a) out.at(a, k) = p.at(a, k) * invq;
  }
  return out;
}

namespace detail {

// (A w)_i and w'A w for a packed symmetric A at one node.
inline void sym_apply(const TensorField& t, std::size_t node, const double* w,
                      double* aw) {
  const int n = t.grid.dim;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += t.entry(i, j, node) * w[j];
    aw[i] = s;
  }
}

inline double quad_form(const TensorField& t, std::size_t node, const double* w) {
  const int n = t.grid.dim;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += t.entry(i, j, node) * w[j];
    s += w[i] * row;
  }
  return s;
}

}  // namespace detail

// v'(D2 u)v as a scalar field, for given gradient and hessian of u.
inline ScalarField normal_hessian_form(const VectorField& grad,
                                       const TensorField& hess) {
  const GridSpec& g = grad.grid;
  ScalarField out(g);
  const std::size_t vol = g.volume();
  double v[8];
  for (std::size_t k = 0; k < vol; ++k) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double x = grad.at(a, k);
      s += x * x;
    }
    const double invq = 1.0 / std::sqrt(1.0 + s);
    for (int a = 0; a < g.dim; ++a) v[a] = grad.at(a, k) * invq;
    out.values[k] = detail::quad_form(hess, k, v);
  }
  return out;
}

inline ScalarField ito_drift(const ScalarField& u, double eps) {
  const VectorField grad = gradient(u);
  const TensorField hess = hessian(u);
  ScalarField lap(u.grid);
  const int n = u.grid.dim;
  for (std::size_t k = 0; k < u.grid.volume(); ++k) {
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += hess.entry(i, i, k);
    lap.values[k] = tr;
  }
  const ScalarField corr = normal_hessian_form(grad, hess);
  ScalarField out(u.grid);
  for (std::size_t k = 0; k < u.grid.volume(); ++k)
    out.values[k] = (1.0 + eps) * lap.values[k] - 0.5 * corr.values[k];
  return out;
}

struct MeanCurvatureTerm {
  ScalarField direct;        // Q * div(v), divergence applied to the v field
  ScalarField via_identity;  // lap(u) - v'(D2 u)v
};

inline MeanCurvatureTerm mean_curvature_term(const ScalarField& u) {
  const VectorField grad = gradient(u);
  const VectorField v = normal_projection(grad);
  const ScalarField q = area_element(grad);
  const ScalarField divv = divergence(v);
  const TensorField hess = hessian(u);
  const ScalarField lap = laplacian(u);
  const ScalarField corr = normal_hessian_form(grad, hess);
  MeanCurvatureTerm out;
  out.direct = ScalarField(u.grid);
  out.via_identity = ScalarField(u.grid);
  for (std::size_t k = 0; k < u.grid.volume(); ++k) {
    out.direct.values[k] = q.values[k] * divv.values[k];
    out.via_identity.values[k] = lap.values[k] - corr.values[k];
  }
  return out;
}

struct IdentityResiduals {
  double mcf_identity = 0.0;             // Linf(direct - via_identity)
  double second_fundamental_form = 0.0;  // Linf of the |A|^2 regrouping below
};

// Checks, at stencil accuracy:
//   Q div v            == lap u - v'(D2 u)v
//   |D2u|^2 - 2|D2u v|^2 + (v'D2u v)^2 == Q^2 * (Dv : Dv'), Dv the discrete
//                                          Jacobian of the v field
inline IdentityResiduals identity_residuals(const ScalarField& u) {
  IdentityResiduals out;
  const MeanCurvatureTerm mc = mean_curvature_term(u);
  for (std::size_t k = 0; k < u.grid.volume(); ++k)
    out.mcf_identity =
        std::max(out.mcf_identity,
                 std::abs(mc.direct.values[k] - mc.via_identity.values[k]));

  const GridSpec& g = u.grid;
  const int n = g.dim;
  const VectorField grad = gradient(u);
  const VectorField v = normal_projection(grad);
  const ScalarField q = area_element(grad);
  const TensorField hess = hessian(u);
  // discrete Jacobian of v: rows are gradients of the components
  std::vector<VectorField> dv;
  dv.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ScalarField vi(g);
    for (std::size_t k = 0; k < g.volume(); ++k) vi.values[k] = v.at(i, k);
    dv.push_back(gradient(vi));
  }
  double w[8], aw[8];
  for (std::size_t k = 0; k < g.volume(); ++k) {
    const double qk = q.values[k];
    for (int a = 0; a < n; ++a) w[a] = grad.at(a, k) / qk;
    detail::sym_apply(hess, k, w, aw);
    double a2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double e = hess.entry(i, j, k);
        a2 += e * e;
      }
    double av2 = 0.0, vav = 0.0;
    for (int i = 0; i < n; ++i) {
      av2 += aw[i] * aw[i];
      vav += w[i] * aw[i];
    }
    const double lhs = a2 - 2.0 * av2 + vav * vav;
    double ddv = 0.0;  // Dv : Dv' = sum_ij (Dv)_ij (Dv)_ji
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ddv += dv[static_cast<std::size_t>(i)].at(j, k) *
                                         dv[static_cast<std::size_t>(j)].at(i, k);
    out.second_fundamental_form = std::max(
        out.second_fundamental_form, std::abs(lhs - qk * qk * ddv));
  }
  return out;
}

// Everything downstream consumers need from one field evaluation.
struct GeometryBundle {
  VectorField grad;
  TensorField hess;
  ScalarField q;     // area element
  VectorField v;     // normal projection
  ScalarField divv;  // discrete divergence of v
  ScalarField drift; // Ito drift (1+eps) lap u - 0.5 v'(D2u)v
};

inline GeometryBundle make_geometry_bundle(const ScalarField& u, double eps) {
  GeometryBundle b;
  b.grad = gradient(u);
  b.hess = hessian(u);
  b.q = area_element(b.grad);
  b.v = normal_projection(b.grad);
  b.divv = divergence(b.v);
  const int n = u.grid.dim;
  b.drift = ScalarField(u.grid);
  ScalarField corr = normal_hessian_form(b.grad, b.hess);
  for (std::size_t k = 0; k < u.grid.volume(); ++k) {
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += b.hess.entry(i, i, k);
    b.drift.values[k] = (1.0 + eps) * tr - 0.5 * corr.values[k];
  }
  return b;
}

// --- small dense symmetric matrices ----------------------------------------

struct SmallMatrix {
  int n = 0;
  std::vector<double> a;  // row-major n x n

  SmallMatrix() = default;
  explicit SmallMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

namespace detail {

inline double max_abs(const SmallMatrix& m) {
  double s = 0.0;
  for (double x : m.a) s = std::max(s, std::abs(x));
  return s;
}

inline bool is_symmetric(const SmallMatrix& m, double tol) {
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j)
      if (std::abs(m.at(i, j) - m.at(j, i)) > tol) return false;
  return true;
}

// Cholesky of m + shift*I; success certifies min eigenvalue > -shift.
inline bool shifted_cholesky_ok(const SmallMatrix& m, double shift) {
  const int n = m.n;
  std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m.at(i, j) + (i == j ? shift : 0.0);
      for (int k = 0; k < j; ++k)
        s -= l[static_cast<std::size_t>(i) * n + k] * l[static_cast<std::size_t>(j) * n + k];
      if (i == j) {
        if (s <= 0.0) return false;
        l[static_cast<std::size_t>(i) * n + j] = std::sqrt(s);
      } else {
        l[static_cast<std::size_t>(i) * n + j] = s / l[static_cast<std::size_t>(j) * n + j];
      }
    }
  }
  return true;
}

}  // namespace detail

// AB : CA with the contraction sum_{ijkl} A_ij B_jk C_il D_lk (D = A here);
// requires A symmetric and B, C positive semidefinite (up to a small
// eigenvalue floor). The result is nonnegative up to roundoff.
inline double symmetric_product_check(const SmallMatrix& A, const SmallMatrix& B,
                                      const SmallMatrix& C) {
  if (A.n != B.n || A.n != C.n || A.n < 1)
    throw std::invalid_argument("symmetric_product_check: size mismatch");
  const double scale = std::max(1.0, std::max(detail::max_abs(A),
                                              std::max(detail::max_abs(B),
                                                       detail::max_abs(C))));
  if (!detail::is_symmetric(A, 1e-12 * scale))
    throw std::invalid_argument("symmetric_product_check: A must be symmetric");
  if (!detail::is_symmetric(B, 1e-12 * scale) ||
      !detail::shifted_cholesky_ok(B, 1e-10 * scale))
    throw std::invalid_argument(
        "symmetric_product_check: B must be positive semidefinite");
  if (!detail::is_symmetric(C, 1e-12 * scale) ||
      !detail::shifted_cholesky_ok(C, 1e-10 * scale))
    throw std::invalid_argument(
        "symmetric_product_check: C must be positive semidefinite");
  const int n = A.n;
  // AB : CA = sum_ij (AB)_ij (CA)_ij
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double ab = 0.0, ca = 0.0;
      for (int k = 0; k < n; ++k) {
        ab += A.at(i, k) * B.at(k, j);
        ca += C.at(i, k) * A.at(k, j);
      }
      s += ab * ca;
    }
  return s;
}

}  // namespace smcflab
