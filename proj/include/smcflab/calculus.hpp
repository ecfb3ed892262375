#pragma once

#include <cmath>
#include <stdexcept>

#include "smcflab/grid.hpp"

namespace smcflab {

// Second-order central differences on the periodic grid. The discrete
// operators act exactly on trigonometric grid modes:
//   d/dx sin(2*pi*k*x)   ->  factor sin(2*pi*k*h)/h per mode
//   laplacian exp mode k ->  eigenvalue -(2/h^2) * sum_i (1 - cos(2*pi*k_i*h))

inline VectorField gradient(const ScalarField& u) {
  const GridSpec& g = u.grid;
  VectorField out(g);
  const auto st = detail::strides(g);
  const double inv2h = 1.0 / (2.0 * g.spacing());
  detail::for_each_node(g, [&](std::size_t flat, const int* c) {
    for (int a = 0; a < g.dim; ++a) {
      const std::size_t up = detail::shift(g, flat, c, a, +1, st[a]);
      const std::size_t dn = detail::shift(g, flat, c, a, -1, st[a]);
      out.at(a, flat) = (u.values[up] - u.values[dn]) * inv2h;
    }
  });
  return out;
}

inline ScalarField divergence(const VectorField& v) {
  const GridSpec& g = v.grid;
  ScalarField out(g);
  const auto st = detail::strides(g);
  const double inv2h = 1.0 / (2.0 * g.spacing());
  detail::for_each_node(g, [&](std::size_t flat, const int* c) {
    double acc = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const std::size_t up = detail::shift(g, flat, c, a, +1, st[a]);
      const std::size_t dn = detail::shift(g, flat, c, a, -1, st[a]);
      acc += (v.at(a, up) - v.at(a, dn)) * inv2h;
    }
    out.values[flat] = acc;
  });
  return out;
}

inline ScalarField laplacian(const ScalarField& u) {
  const GridSpec& g = u.grid;
  ScalarField out(g);
  const auto st = detail::strides(g);
  const double invh2 = 1.0 / (g.spacing() * g.spacing());
  detail::for_each_node(g, [&](std::size_t flat, const int* c) {
    double acc = 0.0;
    const double u0 = u.values[flat];
    for (int a = 0; a < g.dim; ++a) {
      const std::size_t up = detail::shift(g, flat, c, a, +1, st[a]);
      const std::size_t dn = detail::shift(g, flat, c, a, -1, st[a]);
      acc += (u.values[up] - 2.0 * u0 + u.values[dn]) * invh2;
    }
    out.values[flat] = acc;
  });
  return out;
}

// Diagonal entries: standard second difference. Off-diagonal entries: the
// 4-point cross stencil (u_{++} - u_{+-} - u_{-+} + u_{--}) / (4 h^2),
// evaluated once per unordered pair.
inline TensorField hessian(const ScalarField& u) {
  const GridSpec& g = u.grid;
  TensorField out(g);
  const auto st = detail::strides(g);
  const double h = g.spacing();
  const double invh2 = 1.0 / (h * h);
  const double inv4h2 = 1.0 / (4.0 * h * h);
  detail::for_each_node(g, [&](std::size_t flat, const int* c) {
    const double u0 = u.values[flat];
    for (int i = 0; i < g.dim; ++i) {
      const std::size_t up = detail::shift(g, flat, c, i, +1, st[i]);
      const std::size_t dn = detail::shift(g, flat, c, i, -1, st[i]);
      out.at(TensorField::packed_index(g.dim, i, i), flat) =
          (u.values[up] - 2.0 * u0 + u.values[dn]) * invh2;
      for (int j = i + 1; j < g.dim; ++j) {
        // shift twice: along axis i, then axis j; the j-coordinate of the
        // i-shifted node is still c[j], so the wrap test stays valid
        const std::size_t upj_up = detail::shift(g, up, c, j, +1, st[j]);
        const std::size_t upj_dn = detail::shift(g, up, c, j, -1, st[j]);
        const std::size_t dnj_up = detail::shift(g, dn, c, j, +1, st[j]);
        const std::size_t dnj_dn = detail::shift(g, dn, c, j, -1, st[j]);
        out.at(TensorField::packed_index(g.dim, i, j), flat) =
            (u.values[upj_up] - u.values[upj_dn] - u.values[dnj_up] +
             u.values[dnj_dn]) *
            inv4h2;
      }
    }
  });
  return out;
}

// --- quadrature -------------------------------------------------------------

// Node sum times h^dim; exact for trigonometric modes below Nyquist.
inline double integral(const ScalarField& u) {
  double s = 0.0;
  for (double x : u.values) s += x;
  return s * u.grid.cell_measure();
}

inline double mean(const ScalarField& u) {
  double s = 0.0;
  for (double x : u.values) s += x;
  return s / static_cast<double>(u.values.size());
}

inline double inner_product(const ScalarField& a, const ScalarField& b) {
  if (a.grid != b.grid) throw std::invalid_argument("inner_product: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s * a.grid.cell_measure();
}

// --- norms ------------------------------------------------------------------

enum class NormKind { L2, Linf, H1, H2 };

inline double sum_squares(const ScalarField& u) {
  double s = 0.0;
  for (double x : u.values) s += x * x;
  return s;
}

inline double l2_norm_sq(const ScalarField& u) {
  return sum_squares(u) * u.grid.cell_measure();
}

inline double l2_norm_sq(const VectorField& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return s * v.grid.cell_measure();
}

// Frobenius norm; packed off-diagonal entries count twice.
inline double l2_norm_sq(const TensorField& t) {
  const int n = t.grid.dim;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double w = (i == j) ? 1.0 : 2.0;
      const double* p = t.component(TensorField::packed_index(n, i, j));
      double acc = 0.0;
      for (std::size_t k = 0; k < t.grid.volume(); ++k) acc += p[k] * p[k];
      s += w * acc;
    }
  return s * t.grid.cell_measure();
}

inline double linf_norm(const ScalarField& u) {
  double m = 0.0;
  for (double x : u.values) m = std::max(m, std::abs(x));
  return m;
}

// Pointwise Euclidean length, then sup over nodes.
inline double linf_norm(const VectorField& v) {
  const std::size_t vol = v.grid.volume();
  double m = 0.0;
  for (std::size_t k = 0; k < vol; ++k) {
    double s = 0.0;
    for (int a = 0; a < v.grid.dim; ++a) {
      const double x = v.at(a, k);
      s += x * x;
    }
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

inline double norm(const ScalarField& u, NormKind kind) {
  switch (kind) {
    case NormKind::L2: return std::sqrt(l2_norm_sq(u));
    case NormKind::Linf: return linf_norm(u);
    case NormKind::H1: return std::sqrt(l2_norm_sq(u) + l2_norm_sq(gradient(u)));
    case NormKind::H2:
      return std::sqrt(l2_norm_sq(u) + l2_norm_sq(gradient(u)) +
                       l2_norm_sq(hessian(u)));
  }
  throw std::invalid_argument("norm: unknown kind");
}

inline double norm(const VectorField& v, NormKind kind) {
  switch (kind) {
    case NormKind::L2: return std::sqrt(l2_norm_sq(v));
    case NormKind::Linf: return linf_norm(v);
    default:
      throw std::invalid_argument("norm: H1/H2 only defined for scalar fields");
  }
}

inline double norm(const TensorField& t, NormKind kind) {
  if (kind != NormKind::L2)
    throw std::invalid_argument("norm: only L2 defined for tensor fields");
  return std::sqrt(l2_norm_sq(t));
}

}  // namespace smcflab
