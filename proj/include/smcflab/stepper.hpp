#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "smcflab/calculus.hpp"
#include "smcflab/config.hpp"
#include "smcflab/energies.hpp"
#include "smcflab/geometry.hpp"
#include "smcflab/grid.hpp"
#include "smcflab/noise.hpp"
#include "smcflab/rng.hpp"
#include "smcflab/spectral.hpp"

namespace smcflab {

// --- initial data -----------------------------------------------------------

namespace detail {

inline void add_mode(ScalarField& u, const std::vector<int>& k, double a, double b) {
  const GridSpec& g = u.grid;
  const double two_pi = 2.0 * 3.14159265358979323846;
  for_each_node(g, [&](std::size_t flat, const int* c) {
    double phase = 0.0;
    for (int axis = 0; axis < g.dim; ++axis)
      phase += static_cast<double>(k[static_cast<std::size_t>(axis)]) *
               g.coordinate(c[axis]);
    u.values[flat] += a * std::sin(two_pi * phase) + b * std::cos(two_pi * phase);
  });
}

}  // namespace detail

// Deterministic for the fourier family; pathId-keyed for randomLipschitz,
// which is rescaled so the discrete sup of |grad u0| equals L.
inline ScalarField initial_datum(const SimConfig& cfg, std::uint64_t path_id) {
  const GridSpec g = cfg.grid();
  ScalarField u(g, 0.0);
  const InitialData& init = cfg.initial;
  if (init.family == InitialData::Family::Fourier) {
    for (auto& x : u.values) x = init.constant;
    std::vector<int> k(static_cast<std::size_t>(g.dim), 0);
    for (std::size_t i = 0; i < init.sin_coeffs.size(); ++i) {
      k[0] = static_cast<int>(i) + 1;
      detail::add_mode(u, k, init.sin_coeffs[i], 0.0);
    }
    for (std::size_t i = 0; i < init.cos_coeffs.size(); ++i) {
      k[0] = static_cast<int>(i) + 1;
      detail::add_mode(u, k, 0.0, init.cos_coeffs[i]);
    }
    for (const auto& m : init.modes) detail::add_mode(u, m.k, m.a, m.b);
    return u;
  }
  // randomLipschitz: amplitudes on the canonical half of the low-mode cube
  const std::uint64_t key = rng::key(cfg.base_seed, path_id, 1, 0);
  std::uint64_t ctr = 0;
  std::vector<int> k(static_cast<std::size_t>(g.dim), -init.max_mode);
  for (;;) {
    bool canonical = false;
    for (int a = 0; a < g.dim; ++a) {
      const int ka = k[static_cast<std::size_t>(a)];
      if (ka != 0) { canonical = ka > 0; break; }
    }
    if (canonical) {
      const double a = rng::normal(key, ctr++);
      const double b = rng::normal(key, ctr++);
      detail::add_mode(u, k, a, b);
    }
    int axis = g.dim - 1;
    while (axis >= 0 && ++k[static_cast<std::size_t>(axis)] > init.max_mode)
      k[static_cast<std::size_t>(axis--)] = -init.max_mode;
    if (axis < 0) break;
  }
  const double sup = linf_norm(gradient(u));
  if (init.L == 0.0 || sup == 0.0) {
    for (auto& x : u.values) x = 0.0;
    return u;
  }
  const double scale = init.L / sup;
  for (auto& x : u.values) x *= scale;
  return u;
}

// --- per-path recording -----------------------------------------------------

// One sampled row per entry; the cumulative columns are advanced with a
// per-step trapezoid rule at full step resolution, not just at samples.
struct EnergyTrace {
  std::vector<double> t;
  std::vector<double> w;
  std::vector<double> dirichlet;
  std::vector<double> area;
  std::vector<double> maxexcess;
  std::vector<double> hess_cum;
  std::vector<double> grad_linf;
  std::vector<double> h1_dev;
  // internal columns used by the ensemble analyses
  std::vector<double> mean_u;
  std::vector<double> dev_l2;        // L2 norm of u minus its mean
  std::vector<double> area_diss_cum; // running integral of the area dissipation

  std::size_t samples() const { return t.size(); }
};

struct PathResult {
  std::uint64_t path_id = 0;
  ScalarField final_state;
  EnergyTrace trace;
  bool diverged = false;
  long long diverged_step = -1;
  double initial_grad_linf = 0.0;
  double max_grad_linf = 0.0;
  double alpha_hat = 0.0;  // mean(u(T)) - W(T), the large-time offset proxy
};

// --- one-step integrators ---------------------------------------------------

struct StepOptions {
  SchemeKind scheme = SchemeKind::SemiImplicitSpectral;
  double epsilon = 0.0;
  bool include_correction = true;  // debug switch: drop -0.5 v'(D2u)v from EM
};

// Marches one trajectory; owns the spectral workspace when the scheme needs
// it, and keeps the geometry bundle of the current state for reuse by both
// the next step and the caller's recording.
class PathSimulator {
 public:
  PathSimulator(const GridSpec& grid, double dt, const StepOptions& opt)
      : grid_(grid), dt_(dt), opt_(opt), u_(grid) {
    if (opt.scheme == SchemeKind::SemiImplicitSpectral)
      ws_ = std::make_unique<SpectralWorkspace>(grid);
  }

  void reset(const ScalarField& u0) {
    u_ = u0;
    bundle_ = make_geometry_bundle(u_, opt_.epsilon);
    diverged_ = false;
  }

  const ScalarField& state() const { return u_; }
  const GeometryBundle& bundle() const { return bundle_; }
  bool diverged() const { return diverged_; }
  double dt() const { return dt_; }

  void step(double dw) {
    if (diverged_) return;
    switch (opt_.scheme) {
      case SchemeKind::ExplicitEM: step_em(dw); break;
      case SchemeKind::SemiImplicitSpectral: step_semi_implicit(dw); break;
      case SchemeKind::StratonovichHeun: step_heun(dw); break;
    }
    if (!check_finite()) {
      diverged_ = true;
      return;
    }
    bundle_ = make_geometry_bundle(u_, opt_.epsilon);
  }

 private:
  double trace_at(const TensorField& hess, std::size_t k) const {
    double tr = 0.0;
    for (int i = 0; i < grid_.dim; ++i) tr += hess.entry(i, i, k);
    return tr;
  }

  // u+ = u + dt * [(1+eps) lap u - 0.5 v'(D2u)v] + dW Q
  void step_em(double dw) {
    const double eps = opt_.epsilon;
    for (std::size_t k = 0; k < grid_.volume(); ++k) {
      const double drift = opt_.include_correction
                               ? bundle_.drift.values[k]
                               : (1.0 + eps) * trace_at(bundle_.hess, k);
      u_.values[k] += dt_ * drift + dw * bundle_.q.values[k];
    }
  }

  // (I - dt (1+eps) lap_h) u+ = u + dt * (-0.5 v'(D2u)v) + dW Q
  void step_semi_implicit(double dw) {
    const double eps = opt_.epsilon;
    ScalarField rhs(grid_);
    for (std::size_t k = 0; k < grid_.volume(); ++k) {
      const double corr = opt_.include_correction
                              ? bundle_.drift.values[k] -
                                    (1.0 + eps) * trace_at(bundle_.hess, k)
                              : 0.0;
      rhs.values[k] = u_.values[k] + dt_ * corr + dw * bundle_.q.values[k];
    }
    ws_->solve_helmholtz(rhs, dt_ * (1.0 + eps), u_);
  }

  // Predictor-corrector on the Stratonovich form: a(u) = eps lap u + Q div v
  // (divergence form, no correction term), b(u) = Q.
  void step_heun(double dw) {
    const double eps = opt_.epsilon;
    const std::size_t vol = grid_.volume();
    ScalarField pred(grid_);
    std::vector<double> a0(vol), b0(vol);
    for (std::size_t k = 0; k < vol; ++k) {
      a0[k] = eps * trace_at(bundle_.hess, k) +
              bundle_.q.values[k] * bundle_.divv.values[k];
      b0[k] = bundle_.q.values[k];
      pred.values[k] = u_.values[k] + dt_ * a0[k] + dw * b0[k];
    }
    const GeometryBundle bp = make_geometry_bundle(pred, eps);
    for (std::size_t k = 0; k < vol; ++k) {
      const double a1 =
          eps * trace_at(bp.hess, k) + bp.q.values[k] * bp.divv.values[k];
      const double b1 = bp.q.values[k];
      u_.values[k] += 0.5 * dt_ * (a0[k] + a1) + 0.5 * dw * (b0[k] + b1);
    }
  }

  bool check_finite() const {
    for (double x : u_.values)
      if (!std::isfinite(x) || std::abs(x) > 1e12) return false;
    return true;
  }

  GridSpec grid_;
  double dt_;
  StepOptions opt_;
  ScalarField u_;
  GeometryBundle bundle_;
  bool diverged_ = false;
  std::unique_ptr<SpectralWorkspace> ws_;
};

// --- full path run ----------------------------------------------------------

namespace detail {

struct StepScalars {
  double hess2 = 0.0;      // int |D2u|^2
  double area_diss = 0.0;  // (1/2) int Q |div v|^2 + (1/(2Q)) tangential part
};

inline StepScalars step_scalars(const GeometryBundle& b) {
  StepScalars s;
  s.hess2 = l2_norm_sq(b.hess);
  const DissipationTerms d = dissipation_terms(b, 0.0, EnergyFunctional::area());
  s.area_diss = d.mcf + d.tangential;
  return s;
}

}  // namespace detail

// Drives the trace bookkeeping for any stepping loop: sampled rows at the
// configured stride, trapezoid accumulators at every step, the running
// gradient sup, and the end-of-path h1_dev column.
class PathRecorder {
 public:
  PathRecorder(const GridSpec& grid, double dt, int stride)
      : grid_(grid), dt_(dt), stride_(stride) {}

  void start(const GeometryBundle& b, const ScalarField& u, PathResult& out) {
    out_ = &out;
    out.initial_grad_linf = linf_norm(b.grad);
    out.max_grad_linf = out.initial_grad_linf;
    excess_ = EnergyFunctional::max_excess(
        std::sqrt(1.0 + out.initial_grad_linf * out.initial_grad_linf));
    prev_ = detail::step_scalars(b);
    record(b, u, 0);
  }

  // Call after each completed step k -> k+1 with the new state's bundle.
  void after_step(const GeometryBundle& b, const ScalarField& u, long long k1,
                  double dw, long long total_steps) {
    w_ += dw;
    const detail::StepScalars cur = detail::step_scalars(b);
    hess_cum_ += 0.5 * dt_ * (prev_.hess2 + cur.hess2);
    area_cum_ += 0.5 * dt_ * (prev_.area_diss + cur.area_diss);
    prev_ = cur;
    out_->max_grad_linf = std::max(out_->max_grad_linf, linf_norm(b.grad));
    if (k1 % stride_ == 0 || k1 == total_steps) record(b, u, k1);
  }

  void abort_diverged(long long step) {
    out_->diverged = true;
    out_->diverged_step = step;
  }

  void finalize(const ScalarField& final_state) {
    out_->final_state = final_state;
    EnergyTrace& tr = out_->trace;
    out_->alpha_hat = tr.mean_u.back() - tr.w.back();
    tr.h1_dev.resize(tr.samples());
    for (std::size_t i = 0; i < tr.samples(); ++i) {
      const double c = tr.mean_u[i] - tr.w[i] - out_->alpha_hat;
      tr.h1_dev[i] =
          std::sqrt(tr.dev_l2[i] * tr.dev_l2[i] + c * c + tr.dirichlet[i]);
    }
  }

 private:
  void record(const GeometryBundle& b, const ScalarField& u, long long k) {
    EnergyTrace& tr = out_->trace;
    tr.t.push_back(static_cast<double>(k) * dt_);
    tr.w.push_back(w_);
    tr.dirichlet.push_back(l2_norm_sq(b.grad));
    tr.area.push_back(evaluate(b, EnergyFunctional::area()));
    tr.maxexcess.push_back(evaluate(b, excess_));
    tr.hess_cum.push_back(hess_cum_);
    tr.grad_linf.push_back(linf_norm(b.grad));
    const double m = mean(u);
    tr.mean_u.push_back(m);
    double dev = 0.0;
    for (double x : u.values) dev += (x - m) * (x - m);
    tr.dev_l2.push_back(std::sqrt(dev * grid_.cell_measure()));
    tr.area_diss_cum.push_back(area_cum_);
  }

  GridSpec grid_;
  double dt_;
  int stride_;
  PathResult* out_ = nullptr;
  EnergyFunctional excess_ = EnergyFunctional::max_excess(1.0);
  detail::StepScalars prev_;
  double w_ = 0.0, hess_cum_ = 0.0, area_cum_ = 0.0;
};

inline PathResult simulate_path(const SimConfig& cfg, std::uint64_t path_id) {
  const GridSpec grid = cfg.grid();
  const long long steps = cfg.steps();

  StepOptions opt;
  opt.scheme = cfg.scheme;
  opt.epsilon = cfg.epsilon;
  PathSimulator sim(grid, cfg.dt, opt);
  sim.reset(initial_datum(cfg, path_id));

  NoisePath noise;
  if (cfg.noise && steps > 0)
    noise = sample_increments(cfg.base_seed, path_id,
                              static_cast<std::size_t>(steps), cfg.dt,
                              cfg.finest_subdivision());

  PathResult out;
  out.path_id = path_id;
  PathRecorder rec(grid, cfg.dt, cfg.stride());
  rec.start(sim.bundle(), sim.state(), out);

  for (long long k = 0; k < steps; ++k) {
    const double dw = cfg.noise ? noise.increments[static_cast<std::size_t>(k)] : 0.0;
    sim.step(dw);
    if (sim.diverged()) {
      rec.abort_diverged(k + 1);
      break;
    }
    rec.after_step(sim.bundle(), sim.state(), k + 1, dw, steps);
  }
  rec.finalize(sim.state());
  return out;
}

}  // namespace smcflab
