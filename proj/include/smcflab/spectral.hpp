#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "smcflab/grid.hpp"

namespace smcflab {

// Real-to-complex DFT machinery for one grid. Each workspace owns its own
// FFTW plans and buffers, so distinct instances can run on distinct threads;
// plan creation itself is serialized (FFTW requirement).
//
// Complex cells use the usual half-spectrum layout: the last axis is
// truncated to res/2+1, cells are row-major. For a cell with multi-index m,
// the signed frequency is k_i = m_i <= res/2 ? m_i : m_i - res.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(const GridSpec& grid) : grid_(grid) {
    dims_.assign(static_cast<std::size_t>(grid.dim), grid.res);
    cells_ = 1;
    for (int a = 0; a + 1 < grid.dim; ++a) cells_ *= static_cast<std::size_t>(grid.res);
    cells_ *= static_cast<std::size_t>(grid.res / 2 + 1);
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * grid.volume()));
    cplx_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * cells_));
    if (real_ == nullptr || cplx_ == nullptr)
      throw std::runtime_error("spectral: allocation failed");
    {
      std::lock_guard<std::mutex> lock(plan_mutex());
      fwd_ = fftw_plan_dft_r2c(grid.dim, dims_.data(), real_, cplx_, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_c2r(grid.dim, dims_.data(), cplx_, real_, FFTW_ESTIMATE);
    }
    if (fwd_ == nullptr || bwd_ == nullptr)
      throw std::runtime_error("spectral: plan creation failed");
    build_symbols();
  }

  ~SpectralWorkspace() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (fwd_ != nullptr) fftw_destroy_plan(fwd_);
    if (bwd_ != nullptr) fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(cplx_);
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  const GridSpec& grid() const { return grid_; }
  std::size_t cells() const { return cells_; }

  // Discrete Laplacian magnitude per cell: (2/h^2) sum_i (1 - cos(2 pi m_i/res));
  // the operator's eigenvalue is minus this.
  const std::vector<double>& laplacian_symbol() const { return lap_; }

  // Variational weight per cell: 1 + 4 pi^2 |k|^2 with signed integer k.
  const std::vector<double>& lambda_v() const { return lambda_; }

  // Unnormalized forward coefficients of u.
  std::vector<std::complex<double>> transform(const ScalarField& u) {
    forward(u);
    std::vector<std::complex<double>> out(cells_);
    for (std::size_t c = 0; c < cells_; ++c) out[c] = {cplx_[c][0], cplx_[c][1]};
    return out;
  }

  // (I - alpha * lap_h)^{-1} rhs, alpha >= 0; diagonal in the DFT basis.
  void solve_helmholtz(const ScalarField& rhs, double alpha, ScalarField& out) {
    forward(rhs);
    for (std::size_t c = 0; c < cells_; ++c) {
      const double d = 1.0 / (1.0 + alpha * lap_[c]);
      cplx_[c][0] *= d;
      cplx_[c][1] *= d;
    }
    backward(out);
  }

  // Multiply every cell's real part by re_scale[c] and imaginary part by
  // im_scale[c]. Callers must keep conjugate-duplicate cells consistent.
  void apply_mode_scale(const ScalarField& in, const std::vector<double>& re_scale,
                        const std::vector<double>& im_scale, ScalarField& out) {
    if (re_scale.size() != cells_ || im_scale.size() != cells_)
      throw std::invalid_argument("spectral: scale array size mismatch");
    forward(in);
    for (std::size_t c = 0; c < cells_; ++c) {
      cplx_[c][0] *= re_scale[c];
      cplx_[c][1] *= im_scale[c];
    }
    backward(out);
  }

  // Multi-index of a cell (last axis truncated), and its flat index.
  std::vector<int> cell_index(std::size_t c) const {
    std::vector<int> m(static_cast<std::size_t>(grid_.dim));
    const int last = grid_.res / 2 + 1;
    for (int a = grid_.dim - 1; a >= 0; --a) {
      const int extent = (a == grid_.dim - 1) ? last : grid_.res;
      m[static_cast<std::size_t>(a)] = static_cast<int>(c % static_cast<std::size_t>(extent));
      c /= static_cast<std::size_t>(extent);
    }
    return m;
  }

  // Flat cell index for grid frequencies m_i in [0, res), provided the last
  // component lies in the stored half-spectrum; returns false otherwise.
  bool cell_of(const std::vector<int>& m, std::size_t& out) const {
    const int last = grid_.res / 2 + 1;
    if (m.back() >= last) return false;
    std::size_t c = 0;
    for (int a = 0; a < grid_.dim; ++a) {
      const int extent = (a == grid_.dim - 1) ? last : grid_.res;
      c = c * static_cast<std::size_t>(extent) + static_cast<std::size_t>(m[static_cast<std::size_t>(a)]);
    }
    out = c;
    return true;
  }

 private:
  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }

  void forward(const ScalarField& u) {
    if (u.grid != grid_) throw std::invalid_argument("spectral: grid mismatch");
    std::memcpy(real_, u.values.data(), sizeof(double) * grid_.volume());
    fftw_execute(fwd_);
  }

  void backward(ScalarField& out) {
    fftw_execute(bwd_);
    if (out.grid != grid_) out = ScalarField(grid_);
    const double inv = 1.0 / static_cast<double>(grid_.volume());
    for (std::size_t i = 0; i < grid_.volume(); ++i) out.values[i] = real_[i] * inv;
  }

  void build_symbols() {
    lap_.resize(cells_);
    lambda_.resize(cells_);
    const double h = grid_.spacing();
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (std::size_t c = 0; c < cells_; ++c) {
      const std::vector<int> m = cell_index(c);
      double lap = 0.0;
      double k2 = 0.0;
      for (int a = 0; a < grid_.dim; ++a) {
        const int mi = m[static_cast<std::size_t>(a)];
        const int ki = (mi <= grid_.res / 2) ? mi : mi - grid_.res;
        lap += 2.0 * (1.0 - std::cos(two_pi * mi / grid_.res)) / (h * h);
        k2 += static_cast<double>(ki) * ki;
      }
      lap_[c] = lap;
      lambda_[c] = 1.0 + two_pi * two_pi * k2;  // 1 + 4 pi^2 |k|^2
    }
  }

  GridSpec grid_;
  std::vector<int> dims_;
  std::size_t cells_ = 0;
  double* real_ = nullptr;
  fftw_complex* cplx_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
  std::vector<double> lap_;
  std::vector<double> lambda_;
};

}  // namespace smcflab
