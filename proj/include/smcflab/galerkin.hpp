#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "smcflab/calculus.hpp"
#include "smcflab/config.hpp"
#include "smcflab/geometry.hpp"
#include "smcflab/grid.hpp"
#include "smcflab/noise.hpp"
#include "smcflab/spectral.hpp"
#include "smcflab/stepper.hpp"

namespace smcflab {

// Real trigonometric basis of the grid, enumerated in nondecreasing order of
// the variational weight lambda = 1 + 4 pi^2 |k|^2, ties broken by the
// lexicographic order of the canonical frequency and cos before sin. The
// first function is the constant with lambda = 1; the total count is res^dim.
struct BasisFunction {
  std::vector<int> k;  // canonical signed frequency (first component
                       // outside {0, res/2} is positive)
  bool is_sin = false; // constant and Nyquist-plane modes are cos-type
  double lambda = 1.0;
};

struct SpectralBasis {
  GridSpec grid;
  std::vector<BasisFunction> functions;

  std::size_t size() const { return functions.size(); }
};

inline SpectralBasis make_spectral_basis(const GridSpec& grid) {
  const int half = grid.res / 2;
  std::vector<BasisFunction> funcs;
  std::vector<int> k(static_cast<std::size_t>(grid.dim), -half + 1);
  const double four_pi2 = 4.0 * 3.14159265358979323846 * 3.14159265358979323846;
  for (;;) {
    // Pick the canonical member of each conjugate pair {k, -k mod res}.
    // Components equal to 0 or half are their own negatives mod res, so the
    // sign decision rests on the first component outside {0, half}; if every
    // component is 0 or half the frequency is self-conjugate (cos only).
    int first_free = 0;
    for (int a = 0; a < grid.dim; ++a) {
      const int ka = k[static_cast<std::size_t>(a)];
      if (ka != 0 && ka != half) { first_free = ka; break; }
    }
    if (first_free >= 0) {  // canonical representative (or self-conjugate)
      long long k2 = 0;
      bool self_conjugate = true;
      for (int a = 0; a < grid.dim; ++a) {
        const long long ka = k[static_cast<std::size_t>(a)];
        k2 += ka * ka;
        if (ka != 0 && ka != half) self_conjugate = false;
      }
      BasisFunction f;
      f.k = k;
      f.lambda = 1.0 + four_pi2 * static_cast<double>(k2);
      f.is_sin = false;
      funcs.push_back(f);
      const bool zero = (k2 == 0);
      if (!zero && !self_conjugate) {
        f.is_sin = true;
        funcs.push_back(f);
      }
    }
    int axis = grid.dim - 1;
    while (axis >= 0 && ++k[static_cast<std::size_t>(axis)] > half)
      k[static_cast<std::size_t>(axis--)] = -half + 1;
    if (axis < 0) break;
  }
  std::stable_sort(funcs.begin(), funcs.end(),
                   [](const BasisFunction& a, const BasisFunction& b) {
                     if (a.lambda != b.lambda) return a.lambda < b.lambda;
                     if (a.k != b.k) return a.k < b.k;
                     return a.is_sin < b.is_sin;
                   });
  return SpectralBasis{grid, std::move(funcs)};
}

namespace detail {

// Mark the stored DFT cells of +/-k; conjugate-duplicate cells (last-axis
// frequency 0 or Nyquist) both get marked so the half-spectrum stays
// Hermitian-consistent under masking.
inline void mark_cells(const SpectralWorkspace& ws, const std::vector<int>& k,
                       bool is_sin, std::vector<double>& re_mask,
                       std::vector<double>& im_mask) {
  const int res = ws.grid().res;
  const int dim = ws.grid().dim;
  for (int sign = 0; sign < 2; ++sign) {
    std::vector<int> m(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      const int ka = (sign == 0) ? k[static_cast<std::size_t>(a)]
                                 : -k[static_cast<std::size_t>(a)];
      m[static_cast<std::size_t>(a)] = ((ka % res) + res) % res;
    }
    std::size_t cell = 0;
    if (ws.cell_of(m, cell)) {
      if (is_sin) im_mask[cell] = 1.0;
      else re_mask[cell] = 1.0;
    }
  }
}

}  // namespace detail

// L2-orthogonal projection onto the span of the first K basis functions.
// Self-adjoint and idempotent by construction (a 0/1 mask in the DFT basis).
inline ScalarField spectral_project(SpectralWorkspace& ws, const SpectralBasis& basis,
                                    const ScalarField& u, std::size_t K) {
  if (K < 1 || K > basis.size())
    throw std::invalid_argument("galerkin: K must be in [1, mode count]");
  std::vector<double> re_mask(ws.cells(), 0.0), im_mask(ws.cells(), 0.0);
  for (std::size_t i = 0; i < K; ++i)
    detail::mark_cells(ws, basis.functions[i].k, basis.functions[i].is_sin,
                       re_mask, im_mask);
  ScalarField out(ws.grid());
  ws.apply_mode_scale(u, re_mask, im_mask, out);
  return out;
}

// The smoothing semigroup: damp every mode by exp(-eps_s * lambda), lambda
// the variational weight (so even the constant is damped by exp(-eps_s)).
inline ScalarField smooth(SpectralWorkspace& ws, const ScalarField& u, double eps_s) {
  if (!(eps_s >= 0.0)) throw std::invalid_argument("galerkin: eps_s must be >= 0");
  const std::vector<double>& lam = ws.lambda_v();
  std::vector<double> sc(ws.cells());
  for (std::size_t c = 0; c < ws.cells(); ++c) sc[c] = std::exp(-eps_s * lam[c]);
  ScalarField out(ws.grid());
  ws.apply_mode_scale(u, sc, sc, out);
  return out;
}

// <A_eps(grad u), grad w> = -int [(1+eps) lap u - 0.5 v'(D2u)v] lap w.
inline double variational_pairing_A(const ScalarField& u, const ScalarField& w,
                                    double eps) {
  if (u.grid != w.grid)
    throw std::invalid_argument("galerkin: pairing needs matching grids");
  const GeometryBundle b = make_geometry_bundle(u, eps);
  const ScalarField lw = laplacian(w);
  double s = 0.0;
  for (std::size_t k = 0; k < u.grid.volume(); ++k)
    s += b.drift.values[k] * lw.values[k];
  return -s * u.grid.cell_measure();
}

// B(grad u) = (D2u) v as a vector field.
inline VectorField diffusion_operator_field(const ScalarField& u) {
  const GeometryBundle b = make_geometry_bundle(u, 0.0);
  VectorField out(u.grid);
  double w[8], aw[8];
  for (std::size_t k = 0; k < u.grid.volume(); ++k) {
    for (int a = 0; a < u.grid.dim; ++a) w[a] = b.v.at(a, k);
    detail::sym_apply(b.hess, k, w, aw);
    for (int a = 0; a < u.grid.dim; ++a) out.at(a, k) = aw[a];
  }
  return out;
}

struct CoercivityGap {
  double gap = 0.0;  // 2<A_eps(grad u), grad u> + |B(grad u)|^2 + 2 eps |lap u|^2
  double tol = 0.0;  // stencil allowance, O(h^2) for fixed data
};

inline CoercivityGap coercivity_gap(const ScalarField& u, double eps) {
  const ScalarField lap_u = laplacian(u);
  const VectorField bfield = diffusion_operator_field(u);
  CoercivityGap out;
  out.gap = 2.0 * variational_pairing_A(u, u, eps) + l2_norm_sq(bfield) +
            2.0 * eps * l2_norm_sq(lap_u);
  const double h = u.grid.spacing();
  const double sup = linf_norm(gradient(u));
  out.tol = 10.0 * h * h * (1.0 + sup * sup) * l2_norm_sq(hessian(u));
  return out;
}

struct GrowthBound {
  double drift_ratio = 0.0;      // |A_eps(grad u)|^2 / |grad u|_{H1}^2
  double diffusion_ratio = 0.0;  // |B(grad u)|^2   / |grad u|_{H1}^2
  double admissible = 3.0;       // 2 (1+eps)^2 + 1
};

inline GrowthBound growth_bound_check(const ScalarField& u, double eps) {
  GrowthBound out;
  out.admissible = 2.0 * (1.0 + eps) * (1.0 + eps) + 1.0;
  const double denom = l2_norm_sq(gradient(u)) + l2_norm_sq(hessian(u));
  if (denom == 0.0) return out;  // zero field: both ratios report 0
  const GeometryBundle b = make_geometry_bundle(u, eps);
  double a2 = 0.0;
  for (double x : b.drift.values) a2 += x * x;
  out.drift_ratio = a2 * u.grid.cell_measure() / denom;
  out.diffusion_ratio = l2_norm_sq(diffusion_operator_field(u)) / denom;
  return out;
}

// Explicit Euler-Maruyama on the first K mode coefficients: every increment
// is projected back onto the span, which is the grid realization of the
// finite-dimensional coefficient SDE. With K = basis.size() the projection
// is the identity (up to a DFT round trip) and the run matches the nodal
// explicit scheme.
inline PathResult galerkin_simulate(const SimConfig& cfg, std::uint64_t path_id,
                                    std::size_t K) {
  const GridSpec grid = cfg.grid();
  const SpectralBasis basis = make_spectral_basis(grid);
  if (K < 1 || K > basis.size())
    throw std::invalid_argument("galerkin: K must be in [1, mode count]");
  SpectralWorkspace ws(grid);

  // stability gate on the largest retained discrete-Laplacian eigenvalue
  std::vector<double> re_mask(ws.cells(), 0.0), im_mask(ws.cells(), 0.0);
  for (std::size_t i = 0; i < K; ++i)
    detail::mark_cells(ws, basis.functions[i].k, basis.functions[i].is_sin,
                       re_mask, im_mask);
  double lam_max = 0.0;
  for (std::size_t c = 0; c < ws.cells(); ++c)
    if (re_mask[c] > 0.0 || im_mask[c] > 0.0)
      lam_max = std::max(lam_max, ws.laplacian_symbol()[c]);
  if (lam_max > 0.0 && cfg.dt * (1.0 + cfg.epsilon) * lam_max > 1.0)
    throw ConfigError(
        "galerkin: dt exceeds the stability bound 1/((1+epsilon)*lambda_max) "
        "for the retained modes");

  const long long steps = cfg.steps();
  NoisePath noise;
  if (cfg.noise && steps > 0)
    noise = sample_increments(cfg.base_seed, path_id,
                              static_cast<std::size_t>(steps), cfg.dt,
                              cfg.finest_subdivision());

  ScalarField u(grid);
  ws.apply_mode_scale(initial_datum(cfg, path_id), re_mask, im_mask, u);
  GeometryBundle b = make_geometry_bundle(u, cfg.epsilon);

  PathResult out;
  out.path_id = path_id;
  PathRecorder rec(grid, cfg.dt, cfg.stride());
  rec.start(b, u, out);

  ScalarField incr(grid), pincr(grid);
  for (long long k = 0; k < steps; ++k) {
    const double dw = cfg.noise ? noise.increments[static_cast<std::size_t>(k)] : 0.0;
    for (std::size_t i = 0; i < grid.volume(); ++i)
      incr.values[i] = cfg.dt * b.drift.values[i] + dw * b.q.values[i];
    ws.apply_mode_scale(incr, re_mask, im_mask, pincr);
    bool finite = true;
    for (std::size_t i = 0; i < grid.volume(); ++i) {
      u.values[i] += pincr.values[i];
      if (!std::isfinite(u.values[i]) || std::abs(u.values[i]) > 1e12)
        finite = false;
    }
    if (!finite) {
      rec.abort_diverged(k + 1);
      break;
    }
    b = make_geometry_bundle(u, cfg.epsilon);
    rec.after_step(b, u, k + 1, dw, steps);
  }
  rec.finalize(u);
  return out;
}

}  // namespace smcflab
