#pragma once

#include <cmath>
#include <stdexcept>

#include "smcflab/calculus.hpp"
#include "smcflab/geometry.hpp"
#include "smcflab/grid.hpp"

namespace smcflab {

// Energy functionals of the form I(u) = integral of g(Q(grad u)), with the
// convex profiles:
//   Dirichlet  g(r) = r^2, reported without the constant: integral |grad u|^2
//   Area       g(r) = r
//   GSquare    g(r) = r^2, reported in full: integral (1 + |grad u|^2)
//   MaxExcess  g_M, the C^1 hinge used for the gradient maximum principle
struct EnergyFunctional {
  enum class Kind { Dirichlet, Area, GSquare, MaxExcess };
  Kind kind = Kind::Dirichlet;
  double level = 1.0;  // M for MaxExcess, unused otherwise

  static EnergyFunctional dirichlet() { return {Kind::Dirichlet, 1.0}; }
  static EnergyFunctional area() { return {Kind::Area, 1.0}; }
  static EnergyFunctional gsquare() { return {Kind::GSquare, 1.0}; }
  static EnergyFunctional max_excess(double M) {
    if (!(M >= 1.0))
      throw std::invalid_argument("max_excess: level M must be >= 1");
    return {Kind::MaxExcess, M};
  }
};

// Vanishes for sigma <= M, quadratic hinge on (M, M+1], linear beyond; C^1
// at both knots, and strictly positive exactly where sigma > M.
inline double g_max_excess(double M, double sigma) {
  if (sigma <= M) return 0.0;
  if (sigma <= M + 1.0) {
    const double d = sigma - M;
    return d * d;
  }
  return 2.0 * sigma - 2.0 * M - 1.0;
}

inline double g_value(const EnergyFunctional& f, double r) {
  switch (f.kind) {
    case EnergyFunctional::Kind::Dirichlet:
    case EnergyFunctional::Kind::GSquare: return r * r;
    case EnergyFunctional::Kind::Area: return r;
    case EnergyFunctional::Kind::MaxExcess: return g_max_excess(f.level, r);
  }
  return 0.0;
}

inline double g_prime(const EnergyFunctional& f, double r) {
  switch (f.kind) {
    case EnergyFunctional::Kind::Dirichlet:
    case EnergyFunctional::Kind::GSquare: return 2.0 * r;
    case EnergyFunctional::Kind::Area: return 1.0;
    case EnergyFunctional::Kind::MaxExcess:
      if (r <= f.level) return 0.0;
      if (r <= f.level + 1.0) return 2.0 * (r - f.level);
      return 2.0;
  }
  return 0.0;
}

// Second derivative taken in the a.e. sense for the hinge profile.
inline double g_second(const EnergyFunctional& f, double r) {
  switch (f.kind) {
    case EnergyFunctional::Kind::Dirichlet:
    case EnergyFunctional::Kind::GSquare: return 2.0;
    case EnergyFunctional::Kind::Area: return 0.0;
    case EnergyFunctional::Kind::MaxExcess:
      return (r > f.level && r < f.level + 1.0) ? 2.0 : 0.0;
  }
  return 0.0;
}

// Integrand actually reported by evaluate(); Dirichlet drops the constant 1.
inline double g_report(const EnergyFunctional& f, double r) {
  if (f.kind == EnergyFunctional::Kind::Dirichlet) return r * r - 1.0;
  return g_value(f, r);
}

inline double evaluate(const GeometryBundle& b, const EnergyFunctional& f) {
  double s = 0.0;
  for (double qk : b.q.values) s += g_report(f, qk);
  return s * b.q.grid.cell_measure();
}

inline double evaluate(const ScalarField& u, const EnergyFunctional& f) {
  const VectorField grad = gradient(u);
  const ScalarField q = area_element(grad);
  double s = 0.0;
  for (double qk : q.values) s += g_report(f, qk);
  return s * u.grid.cell_measure();
}

// The four nonnegative groups whose sum is minus the expected-drift of I(u):
//   viscous    eps * int g''(Q)|Av|^2 + (g'(Q)/Q)(|A|^2 - |Av|^2)
//   mcf        (1/2) int g(Q) |div v|^2
//   tangential int (g'(Q)/Q - g(Q)/(2Q^2)) (|A|^2 - 2|Av|^2 + (v'Av)^2)
//   convexity  int g''(Q) (|Av|^2 - (v'Av)^2)
// with A = D2u and the discrete divergence of the v field.
struct DissipationTerms {
  double viscous = 0.0;
  double mcf = 0.0;
  double tangential = 0.0;
  double convexity = 0.0;
  double total() const { return viscous + mcf + tangential + convexity; }
};

inline DissipationTerms dissipation_terms(const GeometryBundle& b, double eps,
                                          const EnergyFunctional& f) {
  const GridSpec& g = b.q.grid;
  const int n = g.dim;
  DissipationTerms out;
  double w[8], aw[8];
  for (std::size_t k = 0; k < g.volume(); ++k) {
    const double qk = b.q.values[k];
    const double gv = g_value(f, qk);
    const double gp = g_prime(f, qk);
    const double gpp = g_second(f, qk);
    for (int a = 0; a < n; ++a) w[a] = b.v.at(a, k);
    detail::sym_apply(b.hess, k, w, aw);
    double a2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double e = b.hess.entry(i, j, k);
        a2 += e * e;
      }
    double av2 = 0.0, vav = 0.0;
    for (int i = 0; i < n; ++i) {
      av2 += aw[i] * aw[i];
      vav += w[i] * aw[i];
    }
    const double dv = b.divv.values[k];
    out.viscous += eps * (gpp * av2 + (gp / qk) * (a2 - av2));
    out.mcf += 0.5 * gv * dv * dv;
    out.tangential += (gp / qk - gv / (2.0 * qk * qk)) *
                      (a2 - 2.0 * av2 + vav * vav);
    out.convexity += gpp * (av2 - vav * vav);
  }
  const double cm = g.cell_measure();
  out.viscous *= cm;
  out.mcf *= cm;
  out.tangential *= cm;
  out.convexity *= cm;
  return out;
}

inline DissipationTerms dissipation_terms(const ScalarField& u, double eps,
                                          const EnergyFunctional& f) {
  return dissipation_terms(make_geometry_bundle(u, eps), eps, f);
}

// Expected drift of I(u) computed the long way round, from the Hessian of
// the integrand: -eps int (Hf A):A - (1/2) int f |div v|^2
//                + int (A P) : (f/(2Q^2) P - Hf) A,   P = I - v (x) v.
// Groups differently from dissipation_terms, so agreement between the two is
// a real cross-check, not a tautology.
inline double ito_drift_prediction(const GeometryBundle& b, double eps,
                                   const EnergyFunctional& f) {
  const GridSpec& g = b.q.grid;
  const int n = g.dim;
  double acc = 0.0;
  double w[8];
  double A[64], P[64], Hf[64], M[64], APm[64], MA[64];
  for (std::size_t k = 0; k < g.volume(); ++k) {
    const double qk = b.q.values[k];
    const double fv = g_value(f, qk);
    const double gp = g_prime(f, qk);
    const double gpp = g_second(f, qk);
    for (int a = 0; a < n; ++a) w[a] = b.v.at(a, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        A[i * n + j] = b.hess.entry(i, j, k);
        P[i * n + j] = (i == j ? 1.0 : 0.0) - w[i] * w[j];
        Hf[i * n + j] = gpp * w[i] * w[j] + (gp / qk) * P[i * n + j];
      }
    // -eps (Hf A) : A
    double visc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double hfa = 0.0;
        for (int l = 0; l < n; ++l) hfa += Hf[i * n + l] * A[l * n + j];
        visc += hfa * A[i * n + j];
      }
    const double dv = b.divv.values[k];
    // (A P) : (M A) with M = f/(2Q^2) P - Hf
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        M[i * n + j] = fv / (2.0 * qk * qk) * P[i * n + j] - Hf[i * n + j];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double ap = 0.0, ma = 0.0;
        for (int l = 0; l < n; ++l) {
          ap += A[i * n + l] * P[l * n + j];
          ma += M[i * n + l] * A[l * n + j];
        }
        APm[i * n + j] = ap;
        MA[i * n + j] = ma;
      }
    double tang = 0.0;
    for (int i = 0; i < n * n; ++i) tang += APm[i] * MA[i];
    acc += -eps * visc - 0.5 * fv * dv * dv + tang;
  }
  return acc * g.cell_measure();
}

inline double ito_drift_prediction(const ScalarField& u, double eps,
                                   const EnergyFunctional& f) {
  return ito_drift_prediction(make_geometry_bundle(u, eps), eps, f);
}

// Coefficient of dW in dI: sigma = -int f(grad u) div v, with f the reported
// integrand (so the Dirichlet profile drops its additive constant, which
// only shifts sigma by the vanishing mean of a discrete divergence).
inline double martingale_coefficient(const GeometryBundle& b,
                                     const EnergyFunctional& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < b.q.grid.volume(); ++k)
    s += g_report(f, b.q.values[k]) * b.divv.values[k];
  return -s * b.q.grid.cell_measure();
}

inline double martingale_coefficient(const ScalarField& u,
                                     const EnergyFunctional& f) {
  return martingale_coefficient(make_geometry_bundle(u, 0.0), f);
}

}  // namespace smcflab
