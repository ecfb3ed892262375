// Spectral basis enumeration, projection and smoothing operators, the
// variational coercivity and growth diagnostics, and the truncated
// coefficient-space simulation.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "smcflab/galerkin.hpp"
#include "smcflab/noise.hpp"

using namespace smcflab;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFourPiSq = 39.478417604357434;

ScalarField fill1(const GridSpec& g, const std::function<double(double)>& f) {
  ScalarField u(g);
  for (int i = 0; i < g.res; ++i) u.values[static_cast<std::size_t>(i)] = f(g.coordinate(i));
  return u;
}

double linf_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    m = std::max(m, std::abs(a.values[k] - b.values[k]));
  return m;
}

ScalarField random_trig(const GridSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-0.3, 0.3);
  ScalarField u(g, 0.0);
  if (g.dim == 1) {
    const double a1 = unif(rng), a2 = unif(rng), a3 = unif(rng), a4 = unif(rng);
    for (int i = 0; i < g.res; ++i) {
      const double x = g.coordinate(i);
      u.values[static_cast<std::size_t>(i)] =
          a1 * std::sin(2.0 * kPi * x) + a2 * std::cos(2.0 * kPi * x) +
          a3 * std::sin(4.0 * kPi * x) + a4 * std::cos(6.0 * kPi * x);
    }
    return u;
  }
  const double a1 = unif(rng), a2 = unif(rng);
  for (int i = 0; i < g.res; ++i)
    for (int j = 0; j < g.res; ++j) {
      const double x = g.coordinate(i), y = g.coordinate(j);
      u.values[static_cast<std::size_t>(i) * g.res + j] =
          a1 * std::sin(2.0 * kPi * x) * std::cos(2.0 * kPi * y) +
          a2 * std::cos(4.0 * kPi * x);
    }
  return u;
}

}  // namespace

TEST_CASE("basis enumeration counts, ordering, and weights") {
  {
    const SpectralBasis b = make_spectral_basis(make_grid(1, 8));
    REQUIRE(b.size() == 8);

    // Constant first, then cos/sin pairs per frequency, Nyquist cos-only.
    REQUIRE(b.functions[0].k == std::vector<int>{0});
    REQUIRE_FALSE(b.functions[0].is_sin);
    REQUIRE(b.functions[0].lambda == 1.0);

    REQUIRE(b.functions[1].k == std::vector<int>{1});
    REQUIRE_FALSE(b.functions[1].is_sin);
    REQUIRE(std::abs(b.functions[1].lambda - (1.0 + kFourPiSq)) < 1e-12);
    REQUIRE(b.functions[2].k == std::vector<int>{1});
    REQUIRE(b.functions[2].is_sin);

    REQUIRE(b.functions[3].k == std::vector<int>{2});
    REQUIRE(b.functions[5].k == std::vector<int>{3});
    REQUIRE(b.functions[7].k == std::vector<int>{4});
    REQUIRE_FALSE(b.functions[7].is_sin);
    REQUIRE(std::abs(b.functions[7].lambda - (1.0 + 16.0 * kFourPiSq)) < 1e-11);

    for (std::size_t i = 0; i + 1 < b.size(); ++i)
      REQUIRE(b.functions[i].lambda <= b.functions[i + 1].lambda);
  }
  {
    const SpectralBasis b = make_spectral_basis(make_grid(2, 8));
    REQUIRE(b.size() == 64);
    REQUIRE(b.functions[0].lambda == 1.0);
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
      REQUIRE(b.functions[i].lambda <= b.functions[i + 1].lambda);

    // Ties at |k|^2 = 1 resolve lexicographically, cos before sin.
    REQUIRE(b.functions[1].k == std::vector<int>{0, 1});
    REQUIRE_FALSE(b.functions[1].is_sin);
    REQUIRE(b.functions[2].k == std::vector<int>{0, 1});
    REQUIRE(b.functions[2].is_sin);
    REQUIRE(b.functions[3].k == std::vector<int>{1, 0});
    REQUIRE_FALSE(b.functions[3].is_sin);
    REQUIRE(b.functions[4].k == std::vector<int>{1, 0});
    REQUIRE(b.functions[4].is_sin);

    // Fully self-conjugate frequencies appear once, as cos-type.
    int nyquist_like = 0;
    for (const BasisFunction& f : b.functions) {
      bool self_conj = true;
      for (int ka : f.k)
        if (ka != 0 && ka != 4) self_conj = false;
      if (self_conj) {
        REQUIRE_FALSE(f.is_sin);
        ++nyquist_like;
      }
    }
    REQUIRE(nyquist_like == 4);  // (0,0), (0,4), (4,0), (4,4)
  }
}

TEST_CASE("projection separates modes and is a contraction") {
  const GridSpec g = make_grid(1, 32);
  SpectralWorkspace ws(g);
  const SpectralBasis basis = make_spectral_basis(g);

  const ScalarField u =
      fill1(g, [](double x) { return std::sin(2.0 * kPi * x) + std::sin(6.0 * kPi * x); });
  const ScalarField low = spectral_project(ws, basis, u, 3);
  const ScalarField first = fill1(g, [](double x) { return std::sin(2.0 * kPi * x); });
  REQUIRE(linf_diff(low, first) < 1e-12);

  // Widening the span to cover the third harmonic restores the field.
  const ScalarField both = spectral_project(ws, basis, u, 7);
  REQUIRE(linf_diff(both, u) < 1e-12);

  // Full span is the identity.
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 5; ++trial) {
    const ScalarField r = random_trig(g, rng);
    REQUIRE(linf_diff(spectral_project(ws, basis, r, basis.size()), r) < 1e-12);
  }

  // Idempotent and self-adjoint.
  const ScalarField w = random_trig(g, rng);
  const ScalarField pu = spectral_project(ws, basis, u, 5);
  REQUIRE(linf_diff(spectral_project(ws, basis, pu, 5), pu) < 1e-12);
  const ScalarField pw = spectral_project(ws, basis, w, 5);
  REQUIRE(std::abs(inner_product(pu, w) - inner_product(u, pw)) < 1e-12);

  // Contraction in L2 for arbitrary fields and spans.
  std::uniform_int_distribution<std::size_t> pick(1, basis.size());
  for (int trial = 0; trial < 50; ++trial) {
    const ScalarField r = random_trig(g, rng);
    const std::size_t K = pick(rng);
    const ScalarField pr = spectral_project(ws, basis, r, K);
    REQUIRE(norm(pr, NormKind::L2) <= norm(r, NormKind::L2) * (1.0 + 1e-12) + 1e-15);
  }

  CHECK_THROWS_WITH(spectral_project(ws, basis, u, 0),
                    "galerkin: K must be in [1, mode count]");
  CHECK_THROWS_WITH(spectral_project(ws, basis, u, basis.size() + 1),
                    "galerkin: K must be in [1, mode count]");
}

TEST_CASE("smoothing semigroup structure") {
  const GridSpec g = make_grid(1, 64);
  SpectralWorkspace ws(g);
  std::mt19937_64 rng(99);
  const ScalarField u = random_trig(g, rng);

  // Zero strength is the identity (up to the transform round trip).
  REQUIRE(linf_diff(smooth(ws, u, 0.0), u) < 1e-12);

  // Single harmonic decays by exp(-eps_s (1 + 4 pi^2)).
  const ScalarField s = fill1(g, [](double x) { return std::sin(2.0 * kPi * x); });
  const double eps_s = 0.01;
  const ScalarField sm = smooth(ws, s, eps_s);
  const double factor = std::exp(-eps_s * (1.0 + kFourPiSq));
  for (std::size_t k = 0; k < g.volume(); ++k)
    REQUIRE(std::abs(sm.values[k] - factor * s.values[k]) < 1e-12);

  // Even the constant is damped: the weight at frequency zero is 1.
  const ScalarField c = fill1(g, [](double) { return 0.7; });
  const ScalarField cm = smooth(ws, c, 0.1);
  for (double x : cm.values) REQUIRE(std::abs(x - 0.7 * std::exp(-0.1)) < 1e-13);

  // Semigroup composition.
  const ScalarField ab = smooth(ws, u, 0.03);
  ScalarField tmp = smooth(ws, u, 0.01);
  const ScalarField a_then_b = smooth(ws, tmp, 0.02);
  REQUIRE(linf_diff(ab, a_then_b) < 1e-12);

  // Strength going to zero: the smoothed field converges to the original.
  double prev = -1.0;
  for (double e : {0.1, 0.01, 0.001}) {
    ScalarField d = smooth(ws, u, e);
    for (std::size_t k = 0; k < g.volume(); ++k) d.values[k] -= u.values[k];
    const double dist = norm(d, NormKind::L2);
    if (prev >= 0.0) REQUIRE(dist < prev);
    prev = dist;
  }

  CHECK_THROWS_WITH(smooth(ws, u, -0.1), "galerkin: eps_s must be >= 0");
}

TEST_CASE("variational pairing pins") {
  const GridSpec g = make_grid(1, 64);
  const double h = 1.0 / 64;

  // Constant test function: its Laplacian vanishes identically.
  const ScalarField u = fill1(g, [](double x) { return 0.3 * std::sin(2.0 * kPi * x); });
  const ScalarField wc = fill1(g, [](double) { return 5.0; });
  REQUIRE(variational_pairing_A(u, wc, 1.0) == 0.0);

  // The quadratic (1+eps)-part is symmetric; the cubic correction is tiny at
  // small amplitude, so the pairing is symmetric to that order.
  const double amp = 1e-4;
  const ScalarField ua = fill1(g, [=](double x) {
    return amp * (std::sin(2.0 * kPi * x) + std::cos(4.0 * kPi * x));
  });
  const ScalarField wa = fill1(g, [=](double x) {
    return amp * (2.0 * std::sin(2.0 * kPi * x) - std::cos(4.0 * kPi * x));
  });
  const double puw = variational_pairing_A(ua, wa, 1.0);
  const double pwu = variational_pairing_A(wa, ua, 1.0);
  REQUIRE(std::abs(puw) > 1e-8);  // genuinely nonzero
  REQUIRE(std::abs(puw - pwu) < 1e-5 * std::abs(puw));

  // Longhand stencil evaluation of the same integral.
  const int N = g.res;
  auto lap_at = [&](const ScalarField& f, int i) {
    const double up = f.values[static_cast<std::size_t>((i + 1) % N)];
    const double um = f.values[static_cast<std::size_t>((i + N - 1) % N)];
    return (up - 2.0 * f.values[static_cast<std::size_t>(i)] + um) / (h * h);
  };
  const ScalarField w = fill1(g, [](double x) { return 0.2 * std::cos(4.0 * kPi * x); });
  const double eps = 0.5;
  double brute = 0.0;
  for (int i = 0; i < N; ++i) {
    const double up = u.values[static_cast<std::size_t>((i + 1) % N)];
    const double um = u.values[static_cast<std::size_t>((i + N - 1) % N)];
    const double ux = (up - um) / (2.0 * h);
    const double uxx = lap_at(u, i);
    const double vv = ux / std::sqrt(1.0 + ux * ux);
    const double drift = (1.0 + eps) * uxx - 0.5 * vv * vv * uxx;
    brute += drift * lap_at(w, i);
  }
  brute *= -h;
  const double got = variational_pairing_A(u, w, eps);
  REQUIRE(std::abs(got - brute) < 1e-10 * std::max(1.0, std::abs(got)));

  CHECK_THROWS_WITH(variational_pairing_A(u, fill1(make_grid(1, 32), [](double) { return 0.0; }), 0.0),
                    "galerkin: pairing needs matching grids");
}

TEST_CASE("diffusion operator field is the hessian applied to the projection") {
  const GridSpec g = make_grid(1, 64);
  const ScalarField u = fill1(g, [](double x) { return 0.4 * std::sin(2.0 * kPi * x); });
  const VectorField bf = diffusion_operator_field(u);
  const GeometryBundle b = make_geometry_bundle(u, 0.0);
  for (std::size_t k = 0; k < g.volume(); ++k) {
    const double expect = b.hess.entry(0, 0, k) * b.v.at(0, k);
    REQUIRE(std::abs(bf.at(0, k) - expect) < 1e-14 * (1.0 + std::abs(expect)));
  }
}

TEST_CASE("coercivity gap is nonpositive up to the stencil allowance") {
  // Constants: every ingredient vanishes identically.
  {
    const GridSpec g = make_grid(1, 32);
    const CoercivityGap cg = coercivity_gap(fill1(g, [](double) { return 1.7; }), 0.5);
    REQUIRE(cg.gap == 0.0);
    REQUIRE(cg.tol == 0.0);
  }

  // One dimension: the viscosity cancels structurally and the gap equals
  // -2 int (lap u)^2 (1 - v^2), so it is strictly negative for wavy graphs.
  {
    const GridSpec g = make_grid(1, 128);
    const ScalarField u =
        fill1(g, [](double x) { return 0.3 * std::sin(2.0 * kPi * x) + 0.1 * std::cos(4.0 * kPi * x); });
    const CoercivityGap g0 = coercivity_gap(u, 0.0);
    const CoercivityGap g5 = coercivity_gap(u, 0.5);
    const CoercivityGap g1 = coercivity_gap(u, 1.0);
    REQUIRE(std::abs(g5.gap - g0.gap) < 1e-9 * std::abs(g0.gap));
    REQUIRE(std::abs(g1.gap - g0.gap) < 1e-9 * std::abs(g0.gap));
    REQUIRE(g0.gap < 0.0);
    REQUIRE(g0.gap <= g0.tol);

    const GeometryBundle b = make_geometry_bundle(u, 0.0);
    const ScalarField lap = laplacian(u);
    double brute = 0.0;
    for (std::size_t k = 0; k < g.volume(); ++k) {
      const double v = b.v.at(0, k);
      brute += lap.values[k] * lap.values[k] * (1.0 - v * v);
    }
    brute *= -2.0 * g.cell_measure();
    REQUIRE(std::abs(g0.gap - brute) < 1e-9 * std::abs(brute));
  }

  // Generic fields in both dimensions stay below the allowance.
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 3; ++trial) {
    for (int dim : {1, 2}) {
      const GridSpec g = make_grid(dim, dim == 1 ? 128 : 32);
      const ScalarField u = random_trig(g, rng);
      for (double eps : {0.0, 0.5, 1.0}) {
        const CoercivityGap cg = coercivity_gap(u, eps);
        REQUIRE(cg.gap <= cg.tol);
        REQUIRE(cg.tol > 0.0);
      }
    }
  }

  // The allowance shrinks like h^2 under refinement of the same profile.
  auto tol_at = [](int N) {
    const GridSpec g = make_grid(1, N);
    const ScalarField u =
        fill1(g, [](double x) { return 0.3 * std::sin(2.0 * kPi * x) + 0.1 * std::cos(4.0 * kPi * x); });
    return coercivity_gap(u, 0.0).tol;
  };
  const double ratio = tol_at(128) / tol_at(256);
  REQUIRE(ratio > 3.4);
  REQUIRE(ratio < 4.6);
}

TEST_CASE("growth ratios respect the admissible envelope") {
  const GridSpec g = make_grid(1, 128);

  {
    const GrowthBound gb = growth_bound_check(fill1(g, [](double) { return 0.4; }), 0.5);
    REQUIRE(gb.drift_ratio == 0.0);
    REQUIRE(gb.diffusion_ratio == 0.0);
    REQUIRE(gb.admissible == 2.0 * 1.5 * 1.5 + 1.0);
  }

  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 5; ++trial) {
    const ScalarField u = random_trig(g, rng);
    for (double eps : {0.0, 0.5}) {
      const GrowthBound gb = growth_bound_check(u, eps);
      REQUIRE(gb.diffusion_ratio >= 0.0);
      REQUIRE(gb.diffusion_ratio <= 1.0 + 1e-12);
      REQUIRE(gb.drift_ratio > 0.0);
      REQUIRE(gb.drift_ratio <= 2.0 * (1.0 + eps) * (1.0 + eps) + 0.5);
      REQUIRE(gb.drift_ratio <= gb.admissible);
    }
  }
}

TEST_CASE("single-mode truncation reduces to Brownian motion of the mean") {
  SimConfig cfg;
  cfg.dim = 1;
  cfg.res = 16;
  cfg.dt = 1e-3;
  cfg.T = 0.02;
  cfg.base_seed = 7;
  cfg.noise = true;
  cfg.initial.constant = 0.3;
  cfg.initial.sin_coeffs = {0.2};

  const PathResult r = galerkin_simulate(cfg, 4, 1);
  REQUIRE_FALSE(r.diverged);
  const NoisePath w = sample_increments(cfg.base_seed, 4,
                                        static_cast<std::size_t>(cfg.steps()),
                                        cfg.dt, cfg.finest_subdivision());
  double wt = 0.0;
  for (double dw : w.increments) wt += dw;
  for (double x : r.final_state.values) REQUIRE(std::abs(x - (0.3 + wt)) < 1e-12);
  for (double d : r.trace.dirichlet) REQUIRE(std::abs(d) < 1e-15);
}

TEST_CASE("stability gate rejects oversized steps for the retained span") {
  SimConfig cfg;
  cfg.dim = 1;
  cfg.res = 16;
  cfg.dt = 2e-3;  // dt * lam_max = 2e-3 * 1024 > 1 at full span
  cfg.T = 0.02;
  cfg.initial.sin_coeffs = {0.2};

  const SpectralBasis basis = make_spectral_basis(cfg.grid());
  CHECK_THROWS_WITH(galerkin_simulate(cfg, 0, basis.size()),
                    "galerkin: dt exceeds the stability bound "
                    "1/((1+epsilon)*lambda_max) for the retained modes");

  // The constant-only span has no Laplacian content, so the same dt passes.
  const PathResult r = galerkin_simulate(cfg, 0, 1);
  REQUIRE_FALSE(r.diverged);

  CHECK_THROWS_WITH(galerkin_simulate(cfg, 0, 0),
                    "galerkin: K must be in [1, mode count]");
  CHECK_THROWS_WITH(galerkin_simulate(cfg, 0, basis.size() + 1),
                    "galerkin: K must be in [1, mode count]");
}

TEST_CASE("full span reproduces the nodal explicit scheme") {
  SimConfig cfg;
  cfg.dim = 1;
  cfg.res = 16;
  cfg.dt = 5e-4;
  cfg.T = 0.01;
  cfg.base_seed = 11;
  cfg.noise = true;
  cfg.scheme = SchemeKind::ExplicitEM;
  cfg.initial.sin_coeffs = {0.2};

  const SpectralBasis basis = make_spectral_basis(cfg.grid());
  const PathResult full = galerkin_simulate(cfg, 0, basis.size());
  const PathResult nodal = simulate_path(cfg, 0);
  REQUIRE_FALSE(full.diverged);
  REQUIRE_FALSE(nodal.diverged);
  REQUIRE(linf_diff(full.final_state, nodal.final_state) < 1e-10);

  // A narrow truncation runs stably but lands elsewhere.
  const PathResult narrow = galerkin_simulate(cfg, 0, 3);
  REQUIRE_FALSE(narrow.diverged);
  REQUIRE(linf_diff(narrow.final_state, nodal.final_state) > 1e-8);
}
