// Periodic grid containers and the central-difference calculus on them.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "smcflab/calculus.hpp"

using namespace smcflab;

namespace {

constexpr double kPi = 3.14159265358979323846;

ScalarField fill1(const GridSpec& g, const std::function<double(double)>& f) {
  ScalarField u(g);
  for (int i = 0; i < g.res; ++i) u.values[static_cast<std::size_t>(i)] = f(g.coordinate(i));
  return u;
}

ScalarField fill2(const GridSpec& g, const std::function<double(double, double)>& f) {
  ScalarField u(g);
  for (int i = 0; i < g.res; ++i)
    for (int j = 0; j < g.res; ++j)
      u.values[static_cast<std::size_t>(i) * g.res + j] =
          f(g.coordinate(i), g.coordinate(j));
  return u;
}

// Exact symbol of the centered first difference acting on sin/cos modes.
double grad_factor(int k, double h) { return std::sin(2.0 * kPi * k * h) / h; }

}  // namespace

TEST_CASE("grid construction validates dimension and resolution") {
  CHECK_THROWS_AS(make_grid(0, 16), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(9, 16), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1, 7), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1, 6), std::invalid_argument);
  CHECK_THROWS_WITH(make_grid(1, 9), "grid: res must be even and >= 8");
  CHECK_NOTHROW(make_grid(1, 8));
  CHECK_NOTHROW(make_grid(3, 8));
}

TEST_CASE("grid geometry accessors") {
  const GridSpec g = make_grid(2, 16);
  CHECK(g.spacing() == 1.0 / 16.0);
  CHECK(g.volume() == 256);
  CHECK(g.cell_measure() == Catch::Approx(1.0 / 256.0).epsilon(1e-15));
  // row-major with axis 0 slowest
  CHECK(g.stride(0) == 16);
  CHECK(g.stride(1) == 1);
  CHECK(g.coordinate(4) == 0.25);
}

TEST_CASE("tensor packing covers the upper triangle once") {
  CHECK(TensorField::packed_index(3, 0, 0) == 0);
  CHECK(TensorField::packed_index(3, 0, 1) == 1);
  CHECK(TensorField::packed_index(3, 0, 2) == 2);
  CHECK(TensorField::packed_index(3, 1, 1) == 3);
  CHECK(TensorField::packed_index(3, 1, 2) == 4);
  CHECK(TensorField::packed_index(3, 2, 2) == 5);
  const GridSpec g = make_grid(2, 8);
  TensorField t(g);
  t.at(TensorField::packed_index(2, 0, 1), 3) = 7.5;
  CHECK(t.entry(0, 1, 3) == 7.5);
  CHECK(t.entry(1, 0, 3) == 7.5);  // symmetry is structural
}

TEST_CASE("gradient acts on trig modes with the exact difference symbol") {
  const GridSpec g = make_grid(1, 64);
  const double h = g.spacing();
  for (int k : {1, 3}) {
    const ScalarField u = fill1(g, [k](double x) { return std::sin(2.0 * kPi * k * x); });
    const VectorField du = gradient(u);
    const double c = grad_factor(k, h);
    for (int i = 0; i < g.res; ++i) {
      const double want = c * std::cos(2.0 * kPi * k * g.coordinate(i));
      CHECK(du.at(0, static_cast<std::size_t>(i)) == Catch::Approx(want).margin(1e-11));
    }
  }
}

TEST_CASE("gradient error on sin(2 pi x) is second order with the stated constant") {
  const GridSpec g = make_grid(1, 128);
  const double h = g.spacing();
  const ScalarField u = fill1(g, [](double x) { return std::sin(2.0 * kPi * x); });
  const VectorField du = gradient(u);
  double err = 0.0;
  for (int i = 0; i < g.res; ++i) {
    const double exact = 2.0 * kPi * std::cos(2.0 * kPi * g.coordinate(i));
    err = std::max(err, std::abs(du.at(0, static_cast<std::size_t>(i)) - exact));
  }
  const double bound = 2.0 * kPi * (2.0 * kPi * h) * (2.0 * kPi * h) / 6.0;
  CHECK(err <= bound);
  CHECK(err >= 0.99 * bound);  // the bound is attained to leading order
}

TEST_CASE("laplacian and diagonal hessian share the second-difference symbol") {
  const GridSpec g = make_grid(1, 128);
  const double h = g.spacing();
  const ScalarField u = fill1(g, [](double x) { return std::sin(2.0 * kPi * x); });
  const ScalarField lap = laplacian(u);
  const TensorField hess = hessian(u);
  const double lam = 2.0 / (h * h) * (1.0 - std::cos(2.0 * kPi * h));
  for (int i = 0; i < g.res; ++i) {
    const double want = -lam * u.values[static_cast<std::size_t>(i)];
    CHECK(lap.values[static_cast<std::size_t>(i)] == Catch::Approx(want).margin(1e-9));
    CHECK(hess.entry(0, 0, static_cast<std::size_t>(i)) ==
          Catch::Approx(want).margin(1e-9));
  }
  // at x = 1/4 the value approximates -4 pi^2 within the stated O(h^2) bound
  const double at_quarter = lap.values[32];
  const double tol = 2.0 * 4.0 * kPi * kPi * (2.0 * kPi * h) * (2.0 * kPi * h) / 12.0;
  CHECK(std::abs(at_quarter + 4.0 * kPi * kPi) <= tol);
}

TEST_CASE("mixed hessian entry uses the four-point cross stencil") {
  const GridSpec g = make_grid(2, 64);
  const double h = g.spacing();
  const ScalarField u = fill2(g, [](double x, double y) {
    return std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
  });
  const TensorField hess = hessian(u);
  const double c = grad_factor(1, h);
  for (int i = 0; i < g.res; ++i)
    for (int j = 0; j < g.res; ++j) {
      const double want = c * c * std::cos(2.0 * kPi * g.coordinate(i)) *
                          std::cos(2.0 * kPi * g.coordinate(j));
      const std::size_t flat = static_cast<std::size_t>(i) * g.res + j;
      REQUIRE(hess.entry(0, 1, flat) == Catch::Approx(want).margin(1e-10));
    }
  // at (1/8, 1/8) the continuum value is 4 pi^2 / 2 = 2 pi^2
  const std::size_t flat = 8 * 64 + 8;
  CHECK(hess.entry(0, 1, flat) ==
        Catch::Approx(2.0 * kPi * kPi).epsilon(0.01));
}

TEST_CASE("quadrature is exact on resolved trig polynomials") {
  const GridSpec g = make_grid(1, 128);
  const ScalarField s = fill1(g, [](double x) { return std::sin(2.0 * kPi * x); });
  const ScalarField s2 = fill1(g, [](double x) {
    const double v = std::sin(2.0 * kPi * x);
    return v * v;
  });
  CHECK(std::abs(integral(s)) <= 1e-13);
  CHECK(integral(s2) == Catch::Approx(0.5).margin(1e-13));
  CHECK(norm(s, NormKind::L2) ==
        Catch::Approx(0.7071067811865476).margin(1e-13));
  ScalarField ones(g, 1.0);
  CHECK(integral(ones) == Catch::Approx(1.0).margin(1e-14));
  CHECK(mean(s2) == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("derivative operators preserve the mean and are linear") {
  const GridSpec g = make_grid(2, 32);
  const ScalarField u = fill2(g, [](double x, double y) {
    return 0.4 * std::sin(2.0 * kPi * x) + 0.2 * std::cos(4.0 * kPi * y) +
           0.1 * std::sin(2.0 * kPi * (x + y));
  });
  const ScalarField w = fill2(g, [](double x, double y) {
    return 0.3 * std::cos(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
  });
  CHECK(std::abs(mean(laplacian(u))) <= 1e-12);
  CHECK(std::abs(mean(divergence(gradient(u)))) <= 1e-12);

  ScalarField lin(g);
  for (std::size_t i = 0; i < g.volume(); ++i)
    lin.values[i] = 2.0 * u.values[i] - 3.0 * w.values[i];
  const VectorField dlin = gradient(lin);
  const VectorField du = gradient(u);
  const VectorField dw = gradient(w);
  double worst = 0.0;
  for (std::size_t i = 0; i < dlin.values.size(); ++i)
    worst = std::max(worst, std::abs(dlin.values[i] - (2.0 * du.values[i] -
                                                       3.0 * dw.values[i])));
  CHECK(worst <= 1e-12);
}

TEST_CASE("doubling the resolution divides smooth-field errors by about four") {
  auto datum = [](double x) {
    return 0.3 * std::sin(2.0 * kPi * x) + 0.1 * std::cos(4.0 * kPi * x);
  };
  auto exact_grad = [](double x) {
    return 0.3 * 2.0 * kPi * std::cos(2.0 * kPi * x) -
           0.1 * 4.0 * kPi * std::sin(4.0 * kPi * x);
  };
  auto grad_err = [&](int N) {
    const GridSpec g = make_grid(1, N);
    const VectorField du = gradient(fill1(g, datum));
    double err = 0.0;
    for (int i = 0; i < N; ++i)
      err = std::max(err, std::abs(du.at(0, static_cast<std::size_t>(i)) -
                                   exact_grad(g.coordinate(i))));
    return err;
  };
  const double ratio = grad_err(128) / grad_err(256);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("norm dispatch and error paths") {
  const GridSpec g = make_grid(1, 16);
  const ScalarField u = fill1(g, [](double x) { return std::sin(2.0 * kPi * x); });
  const VectorField du = gradient(u);
  const TensorField hess = hessian(u);

  const double h1 = norm(u, NormKind::H1);
  const double want_h1 =
      std::sqrt(l2_norm_sq(u) + l2_norm_sq(du));
  CHECK(h1 == Catch::Approx(want_h1).epsilon(1e-12));
  const double h2 = norm(u, NormKind::H2);
  const double want_h2 =
      std::sqrt(l2_norm_sq(u) + l2_norm_sq(du) + l2_norm_sq(hess));
  CHECK(h2 == Catch::Approx(want_h2).epsilon(1e-12));

  CHECK_THROWS_WITH(norm(du, NormKind::H1),
                    "norm: H1/H2 only defined for scalar fields");
  CHECK_THROWS_AS(norm(hess, NormKind::Linf), std::invalid_argument);

  const GridSpec g2 = make_grid(1, 32);
  const ScalarField other(g2, 1.0);
  CHECK_THROWS_AS(inner_product(u, other), std::invalid_argument);
}

TEST_CASE("vector sup norm is the largest pointwise Euclidean length") {
  const GridSpec g = make_grid(2, 8);
  VectorField v(g);
  v.at(0, 5) = 3.0;
  v.at(1, 5) = 4.0;
  v.at(0, 9) = 4.5;
  CHECK(linf_norm(v) == Catch::Approx(5.0).margin(1e-15));
}

TEST_CASE("tensor squared norm doubles the off-diagonal contributions") {
  const GridSpec g = make_grid(2, 8);
  TensorField t(g);
  t.at(TensorField::packed_index(2, 0, 0), 0) = 1.0;
  t.at(TensorField::packed_index(2, 0, 1), 0) = 2.0;
  t.at(TensorField::packed_index(2, 1, 1), 0) = 3.0;
  // |A|^2 = 1 + 2*4 + 9 = 18 at one node, times the cell measure
  CHECK(l2_norm_sq(t) == Catch::Approx(18.0 * g.cell_measure()).epsilon(1e-13));
}
