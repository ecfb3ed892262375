#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace smcflab {

// Uniform periodic grid on the unit torus [0,1)^dim, res nodes per axis.
// Node coordinates are i/res; there is no ghost layer, neighbor access wraps.
struct GridSpec {
  int dim = 1;
  int res = 8;

  double spacing() const { return 1.0 / res; }

  std::size_t volume() const {
    std::size_t v = 1;
    for (int a = 0; a < dim; ++a) v *= static_cast<std::size_t>(res);
    return v;
  }

  // Quadrature weight per node, h^dim.
  double cell_measure() const {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) w /= res;
    return w;
  }

  double coordinate(int i) const { return static_cast<double>(i) / res; }

  // Row-major layout: axis 0 slowest, axis dim-1 fastest.
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = dim - 1; a > axis; --a) s *= static_cast<std::size_t>(res);
    return s;
  }

  bool operator==(const GridSpec& o) const { return dim == o.dim && res == o.res; }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

inline GridSpec make_grid(int dim, int res) {
  if (dim < 1 || dim > 8)
    throw std::invalid_argument("grid: dim must be between 1 and 8");
  if (res < 8 || res % 2 != 0)
    throw std::invalid_argument("grid: res must be even and >= 8");
  return GridSpec{dim, res};
}

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(g.volume(), fill) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

// dim components per node, stored component-major: values[c*volume + node].
struct VectorField {
  GridSpec grid;
  std::vector<double> values;

  VectorField() = default;
  explicit VectorField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(g.volume() * static_cast<std::size_t>(g.dim), fill) {}

  double& at(int comp, std::size_t node) {
    return values[static_cast<std::size_t>(comp) * grid.volume() + node];
  }
  double at(int comp, std::size_t node) const {
    return values[static_cast<std::size_t>(comp) * grid.volume() + node];
  }
  const double* component(int comp) const {
    return values.data() + static_cast<std::size_t>(comp) * grid.volume();
  }
  double* component(int comp) {
    return values.data() + static_cast<std::size_t>(comp) * grid.volume();
  }
};

// Symmetric dim x dim matrix per node, packed upper triangle row-wise:
// (0,0),(0,1),...,(0,n-1),(1,1),...,(n-1,n-1). Mixed partials are computed
// once, so symmetry is exact by construction.
struct TensorField {
  GridSpec grid;
  int pack = 1;  // dim*(dim+1)/2
  std::vector<double> values;

  TensorField() = default;
  explicit TensorField(const GridSpec& g, double fill = 0.0)
      : grid(g),
        pack(g.dim * (g.dim + 1) / 2),
        values(g.volume() * static_cast<std::size_t>(pack), fill) {}

  static int packed_index(int dim, int i, int j) {
    if (i > j) { int t = i; i = j; j = t; }
    return i * dim - i * (i - 1) / 2 + (j - i);
  }

  double& at(int p, std::size_t node) {
    return values[static_cast<std::size_t>(p) * grid.volume() + node];
  }
  double at(int p, std::size_t node) const {
    return values[static_cast<std::size_t>(p) * grid.volume() + node];
  }
  double entry(int i, int j, std::size_t node) const {
    return at(packed_index(grid.dim, i, j), node);
  }
  const double* component(int p) const {
    return values.data() + static_cast<std::size_t>(p) * grid.volume();
  }
  double* component(int p) {
    return values.data() + static_cast<std::size_t>(p) * grid.volume();
  }
};

namespace detail {

// Visit all nodes in flat order, maintaining coordinates as an odometer.
template <typename F>
inline void for_each_node(const GridSpec& g, F&& f) {
  std::vector<int> c(static_cast<std::size_t>(g.dim), 0);
  const std::size_t vol = g.volume();
  for (std::size_t flat = 0; flat < vol; ++flat) {
    f(flat, c.data());
    for (int a = g.dim - 1; a >= 0; --a) {
      if (++c[a] < g.res) break;
      c[a] = 0;
    }
  }
}

// Periodic neighbor of `flat` shifted by `step` (+1 or -1) along `axis`.
inline std::size_t shift(const GridSpec& g, std::size_t flat, const int* c,
                         int axis, int step, std::size_t axis_stride) {
  int ca = c[axis] + step;
  std::ptrdiff_t d = step;
  if (ca >= g.res) d -= g.res;
  else if (ca < 0) d += g.res;
  return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(flat) +
                                  static_cast<std::ptrdiff_t>(axis_stride) * d);
}

inline std::vector<std::size_t> strides(const GridSpec& g) {
  std::vector<std::size_t> s(static_cast<std::size_t>(g.dim));
  for (int a = 0; a < g.dim; ++a) s[static_cast<std::size_t>(a)] = g.stride(a);
  return s;
}

}  // namespace detail

}  // namespace smcflab
