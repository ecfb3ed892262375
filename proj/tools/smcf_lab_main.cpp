// smcf-lab: command line front end.
//
// Every subcommand loads a JSON config, runs a simulation or check, prints
// one PASS/FAIL line per verdict, and writes out/report.json. Exit codes:
// 0 all verdicts pass, 1 at least one fails, 2 invalid config or usage,
// 3 too many diverged paths.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "smcflab/ensemble.hpp"
#include "smcflab/galerkin.hpp"
#include "smcflab/io.hpp"

namespace fs = std::filesystem;
using namespace smcflab;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int workers = 0;  // 0: honor the config / hardware
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "path to a JSON config")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--workers", args.workers,
                  "worker threads for this run (overrides the config)");
  cmd->add_flag("--force", args.force, "skip the explicit-scheme step size gate");
}

void print_verdicts(const std::vector<Verdict>& vs) {
  for (const auto& v : vs)
    std::printf("%s: %s statistic=%.10g threshold=%.10g%s%s\n", v.name.c_str(),
                v.pass ? "PASS" : "FAIL", v.statistic, v.threshold,
                v.detail.empty() ? "" : " ", v.detail.c_str());
}

int finish(const CommonArgs& args, ReportInputs& report, bool diverged_abort) {
  fs::create_directories(args.out_dir);
  write_report_json(fs::path(args.out_dir) / "report.json", report);
  print_verdicts(report.verdicts);
  if (diverged_abort) {
    std::fprintf(stderr, "error: more than 5%% of paths diverged\n");
    return 3;
  }
  for (const auto& v : report.verdicts)
    if (!v.pass) return 1;
  return 0;
}

void fill_ensemble_outputs(const CommonArgs& args, const EnsembleResult& r,
                           ReportInputs& report, bool write_traces) {
  fs::create_directories(args.out_dir);
  if (write_traces) {
    for (const auto& p : r.paths) {
      char name[32];
      std::snprintf(name, sizeof(name), "trace_%04llu.csv",
                    static_cast<unsigned long long>(p.path_id));
      const std::uint64_t h =
          write_trace_csv(fs::path(args.out_dir) / name, p.trace);
      report.traces[name] = "fnv1a64:" + hex64(h);
    }
  }
  const std::uint64_t sh =
      write_stats_csv(fs::path(args.out_dir) / "stats.csv", r);
  report.traces["stats.csv"] = "fnv1a64:" + hex64(sh);
  report.diverged_paths = r.diverged_count;
  report.valid_paths = static_cast<int>(r.valid_paths().size());
}

int cmd_simulate(const CommonArgs& args, const SimConfig& cfg) {
  EnsembleResult r = run_ensemble(cfg, args.workers);
  ReportInputs report;
  report.config = &cfg;
  fill_ensemble_outputs(args, r, report, /*write_traces=*/true);
  Verdict v;
  v.name = "divergence_budget";
  v.statistic = static_cast<double>(r.diverged_count);
  v.threshold = 0.05 * cfg.ensemble_size;
  v.pass = r.valid;
  v.detail = "diverged paths out of " + std::to_string(cfg.ensemble_size);
  report.verdicts.push_back(v);
  return finish(args, report, !r.valid);
}

int cmd_energy_report(const CommonArgs& args, const SimConfig& cfg) {
  EnsembleResult r = run_ensemble(cfg, args.workers);
  ReportInputs report;
  report.config = &cfg;
  fill_ensemble_outputs(args, r, report, /*write_traces=*/false);
  if (r.valid) {
    report.verdicts.push_back(supermartingale_test(r, "dirichlet"));
    report.verdicts.push_back(supermartingale_test(r, "area"));
    report.verdicts.push_back(supermartingale_test(r, "gsquare"));
    report.verdicts.push_back(supermartingale_test(r, "maxexcess"));
    report.verdicts.push_back(
        supermartingale_test(r, "gsquare", cfg.tolerances.moment_q));
    report.verdicts.push_back(quantified_decay_test(r));
    report.verdicts.push_back(area_inequality_test(r));
    report.verdicts.push_back(moment_bound_test(r, cfg.tolerances.moment_q,
                                                cfg.tolerances.moment_k));
    DriftCheck drift = drift_prediction_check(cfg, std::max(args.workers, 1));
    report.verdicts.push_back(drift.verdict);
    report.verdicts.push_back(drift.forward_verdict);
    nlohmann::json dj;
    dj["realized"] = drift.realized;
    dj["predicted"] = drift.predicted;
    dj["se"] = drift.se;
    report.extra["drift"] = dj;
  }
  return finish(args, report, !r.valid);
}

int cmd_max_principle(const CommonArgs& args, const SimConfig& cfg) {
  EnsembleResult r = run_ensemble(cfg, args.workers);
  ReportInputs report;
  report.config = &cfg;
  fill_ensemble_outputs(args, r, report, /*write_traces=*/false);
  if (r.valid) {
    report.verdicts.push_back(max_principle_test(r, cfg.tolerances.tol_mp));
    report.verdicts.push_back(max_excess_floor_test(r));
  }
  return finish(args, report, !r.valid);
}

int cmd_large_time(const CommonArgs& args, const SimConfig& cfg) {
  EnsembleResult r = run_ensemble(cfg, args.workers);
  ReportInputs report;
  report.config = &cfg;
  fill_ensemble_outputs(args, r, report, /*write_traces=*/false);
  if (r.valid) {
    LargeTimeReport lt = large_time_analysis(r, cfg.large_time_grid());
    report.verdicts.push_back(lt.verdict);
    nlohmann::json curve = nlohmann::json::array();
    for (std::size_t g = 0; g < lt.t_grid.size(); ++g) {
      nlohmann::json e;
      e["T"] = lt.t_grid[g];
      e["supDeviation"] = lt.decay_curve[g];
      e["se"] = lt.se[g];
      curve.push_back(e);
    }
    report.extra["decayCurve"] = curve;
    report.extra["alphaPerPath"] = lt.alpha_per_path;
  }
  return finish(args, report, !r.valid);
}

int cmd_viscosity_sweep(const CommonArgs& args, const SimConfig& cfg) {
  ViscositySweep sweep =
      viscosity_sweep(cfg, cfg.epsilons, std::max(args.workers, 1));
  ReportInputs report;
  report.config = &cfg;
  report.valid_paths = cfg.ensemble_size;
  report.verdicts.push_back(sweep.verdict);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : sweep.entries) {
    nlohmann::json row;
    row["epsilon"] = e.epsilon;
    row["meanMaxDistance"] = e.mean_dist;
    row["se"] = e.se;
    rows.push_back(row);
  }
  report.extra["sweep"] = rows;
  report.extra["sweepSlope"] = sweep.slope;
  return finish(args, report, false);
}

int cmd_verify_identities(const CommonArgs& args, const SimConfig& cfg) {
  ReportInputs report;
  report.config = &cfg;
  // Refinement order of the two discrete geometric identities on a smooth
  // random field: residuals should shrink by about 4x when res doubles.
  SimConfig coarse = cfg;
  SimConfig fine = cfg;
  fine.res = cfg.res * 2;
  coarse.initial.family = InitialData::Family::RandomLipschitz;
  fine.initial = coarse.initial;
  const ScalarField uc = initial_datum(coarse, 1);
  const ScalarField uf = initial_datum(fine, 1);
  const IdentityResiduals rc = identity_residuals(uc);
  const IdentityResiduals rf = identity_residuals(uf);
  const double ratio_mcf = rc.mcf_identity / std::max(rf.mcf_identity, 1e-300);
  const double ratio_a = rc.second_fundamental_form /
                         std::max(rf.second_fundamental_form, 1e-300);
  // Band checks report the distance outside [3, 5.5] so that pass is always
  // "statistic <= threshold".
  {
    char d[160];
    std::snprintf(d, sizeof(d),
                  "ratio=%.3f coarse=%.3e fine=%.3e (expect ratio in [3, 5.5])",
                  ratio_mcf, rc.mcf_identity, rf.mcf_identity);
    report.verdicts.push_back(
        make_verdict("mcf_identity_refinement",
                     std::max(3.0 - ratio_mcf, ratio_mcf - 5.5), 0.0, d));
  }
  {
    char d[160];
    std::snprintf(d, sizeof(d),
                  "ratio=%.3f coarse=%.3e fine=%.3e (expect ratio in [3, 5.5])",
                  ratio_a, rc.second_fundamental_form,
                  rf.second_fundamental_form);
    report.verdicts.push_back(
        make_verdict("second_fundamental_identity_refinement",
                     std::max(3.0 - ratio_a, ratio_a - 5.5), 0.0, d));
  }
  // Exact cancellation: predicted energy drift equals minus the grouped
  // dissipation for every functional, on random fields.
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const ScalarField u = initial_datum(coarse, static_cast<std::uint64_t>(10 + i));
    const GeometryBundle b = make_geometry_bundle(u, cfg.epsilon);
    for (const EnergyFunctional& f :
         {EnergyFunctional::dirichlet(), EnergyFunctional::area(),
          EnergyFunctional::gsquare(), EnergyFunctional::max_excess(1.0)}) {
      const double pred = ito_drift_prediction(b, cfg.epsilon, f);
      const double diss = dissipation_terms(b, cfg.epsilon, f).total();
      const double err =
          std::abs(pred + diss) / std::max({1.0, std::abs(pred), diss});
      worst = std::max(worst, err);
    }
  }
  report.verdicts.push_back(
      make_verdict("drift_matches_dissipation", worst, 1e-9));
  // Frame invariance of the symmetric product: nonnegative whenever both
  // outer factors are positive semidefinite.
  double min_val = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + (t % 4);
    const std::uint64_t key = rng::key(cfg.base_seed, 77, static_cast<std::uint64_t>(t));
    auto rnd = [&](int i) { return rng::normal(key, static_cast<std::uint64_t>(i)); };
    SmallMatrix A(n), G1(n), G2(n);
    int c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        const double a = rnd(c++);
        A.at(i, j) = a;
        A.at(j, i) = a;
      }
    auto fill_psd = [&](SmallMatrix& m) {
      std::vector<double> g(static_cast<std::size_t>(n) * n);
      for (auto& x : g) x = rnd(c++);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k)
            s += g[static_cast<std::size_t>(i) * n + k] *
                 g[static_cast<std::size_t>(j) * n + k];
          m.at(i, j) = s;
        }
    };
    fill_psd(G1);
    fill_psd(G2);
    min_val = std::min(min_val, symmetric_product_check(A, G1, G2));
  }
  {
    char d[96];
    std::snprintf(d, sizeof(d), "most negative product over 200 draws: %.3e",
                  min_val);
    report.verdicts.push_back(
        make_verdict("symmetric_product_nonnegative", -min_val, 1e-10, d));
  }
  return finish(args, report, false);
}

int cmd_coercivity_check(const CommonArgs& args, const SimConfig& cfg) {
  ReportInputs report;
  report.config = &cfg;
  SimConfig field_cfg = cfg;
  field_cfg.initial.family = InitialData::Family::RandomLipschitz;
  double worst_gap = -1e300;
  double worst_ratio = 0.0;
  const std::vector<double> eps_list = {0.0, 0.5, 1.0};
  for (int i = 0; i < 50; ++i) {
    const ScalarField u = initial_datum(field_cfg, static_cast<std::uint64_t>(i));
    for (double eps : eps_list) {
      const CoercivityGap g = coercivity_gap(u, eps);
      worst_gap = std::max(worst_gap, g.gap - g.tol);
      const GrowthBound gb = growth_bound_check(u, eps);
      worst_ratio = std::max(
          worst_ratio, std::max(gb.drift_ratio / gb.admissible, gb.diffusion_ratio));
    }
  }
  report.verdicts.push_back(make_verdict("coercivity_gap", worst_gap, 0.0,
                                         "max gap minus tolerance over fields"));
  report.verdicts.push_back(make_verdict("growth_bounds", worst_ratio, 1.0,
                                         "max normalized drift/diffusion ratio"));
  return finish(args, report, false);
}

int cmd_galerkin_compare(const CommonArgs& args, const SimConfig& cfg,
                         std::vector<int> k_list) {
  ReportInputs report;
  report.config = &cfg;
  const GridSpec grid = cfg.grid();
  SpectralBasis basis = make_spectral_basis(grid);
  SimConfig nodal_cfg = cfg;
  nodal_cfg.scheme = SchemeKind::ExplicitEM;
  // Full basis: the projected update must reproduce the nodal scheme.
  PathResult full = galerkin_simulate(nodal_cfg, 0, basis.size());
  PathResult nodal = simulate_path(nodal_cfg, 0);
  double d2 = 0.0;
  for (std::size_t i = 0; i < grid.volume(); ++i) {
    const double x = full.final_state.values[i] - nodal.final_state.values[i];
    d2 += x * x;
  }
  const double full_dist = std::sqrt(d2 * grid.cell_measure());
  report.verdicts.push_back(
      make_verdict("full_basis_matches_nodal", full_dist, 1e-8));
  if (k_list.empty()) k_list = {3, 9, 17};
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> dists;
  for (int K : k_list) {
    PathResult trunc =
        galerkin_simulate(nodal_cfg, 0, static_cast<std::size_t>(K));
    double t2 = 0.0;
    for (std::size_t i = 0; i < grid.volume(); ++i) {
      const double x = trunc.final_state.values[i] - full.final_state.values[i];
      t2 += x * x;
    }
    dists.push_back(std::sqrt(t2 * grid.cell_measure()));
    nlohmann::json row;
    row["K"] = K;
    row["distance"] = dists.back();
    rows.push_back(row);
  }
  report.extra["truncation"] = rows;
  double worst_increase = -1e300;
  for (std::size_t i = 0; i + 1 < dists.size(); ++i)
    worst_increase = std::max(worst_increase, dists[i + 1] - dists[i]);
  report.verdicts.push_back(make_verdict("truncation_error_monotone",
                                         worst_increase, 1e-12,
                                         "larger bases must track closer"));
  return finish(args, report, false);
}

int cmd_ito_strat_check(const CommonArgs& args, const SimConfig& cfg, int levels) {
  ReportInputs report;
  report.config = &cfg;
  const ItoStratReport conv = ito_strat_convergence(
      cfg.grid(), cfg.initial, cfg.dt, cfg.T, levels, cfg.ensemble_size,
      cfg.base_seed, cfg.epsilon, /*include_correction=*/true,
      std::max(args.workers, 1));
  const ItoStratReport ctrl = ito_strat_convergence(
      cfg.grid(), cfg.initial, cfg.dt, cfg.T, levels, cfg.ensemble_size,
      cfg.base_seed, cfg.epsilon, /*include_correction=*/false,
      std::max(args.workers, 1));
  auto rows = [](const ItoStratReport& r) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& l : r.levels) {
      nlohmann::json e;
      e["dt"] = l.dt;
      e["meanDistance"] = l.mean_dist;
      a.push_back(e);
    }
    return a;
  };
  report.extra["corrected"] = rows(conv);
  report.extra["uncorrected"] = rows(ctrl);
  {
    char d[96];
    std::snprintf(d, sizeof(d), "fitted order=%.3f (wanted >= 0.4)", conv.slope);
    report.verdicts.push_back(
        make_verdict("ito_strat_convergence_order", 0.4 - conv.slope, 0.0, d));
  }
  {
    const double gap = ctrl.levels.back().mean_dist /
                       std::max(conv.levels.back().mean_dist, 1e-300);
    char d[96];
    std::snprintf(d, sizeof(d), "uncorrected/corrected distance ratio=%.3g",
                  gap);
    report.verdicts.push_back(
        make_verdict("correction_gap", 5.0 - gap, 0.0, d));
    char d2[96];
    std::snprintf(d2, sizeof(d2), "uncorrected fitted order=%.3f", ctrl.slope);
    report.verdicts.push_back(
        make_verdict("uncorrected_plateau", ctrl.slope, 0.15, d2));
  }
  return finish(args, report, false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smcf-lab: stochastic mean curvature flow laboratory"};
  app.require_subcommand(1);

  struct Sub {
    CommonArgs args;
    CLI::App* cmd = nullptr;
  };
  Sub simulate, energy, maxp, large, visc, verify, coerc, galerkin, itostrat;
  std::vector<int> k_list;
  int levels = 4;

  simulate.cmd = app.add_subcommand("simulate", "run an ensemble and write traces");
  energy.cmd = app.add_subcommand("energy-report",
                                  "energy inequality and drift statistics");
  maxp.cmd = app.add_subcommand("max-principle", "pathwise gradient bound check");
  large.cmd = app.add_subcommand("large-time", "long-horizon flattening check");
  visc.cmd = app.add_subcommand("viscosity-sweep",
                                "coupled runs across viscosities");
  verify.cmd = app.add_subcommand("verify-identities",
                                  "discrete geometric identity checks");
  coerc.cmd = app.add_subcommand("coercivity-check",
                                 "operator coercivity and growth bounds");
  galerkin.cmd = app.add_subcommand("galerkin-compare",
                                    "projected dynamics against the nodal scheme");
  itostrat.cmd = app.add_subcommand("ito-strat-check",
                                    "chain rule consistency across step sizes");
  galerkin.cmd->add_option("--K", k_list, "basis sizes for the truncation sweep");
  itostrat.cmd->add_option("--levels", levels, "number of dyadic step levels");

  for (Sub* s : {&simulate, &energy, &maxp, &large, &visc, &verify, &coerc,
                 &galerkin, &itostrat})
    add_common(s->cmd, s->args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  Sub* active = nullptr;
  for (Sub* s : {&simulate, &energy, &maxp, &large, &visc, &verify, &coerc,
                 &galerkin, &itostrat})
    if (s->cmd->parsed()) active = s;
  if (active == nullptr) return 2;

  try {
    const SimConfig cfg = load_config(active->args.config_path, active->args.force);
    if (active == &simulate) return cmd_simulate(active->args, cfg);
    if (active == &energy) return cmd_energy_report(active->args, cfg);
    if (active == &maxp) return cmd_max_principle(active->args, cfg);
    if (active == &large) return cmd_large_time(active->args, cfg);
    if (active == &visc) return cmd_viscosity_sweep(active->args, cfg);
    if (active == &verify) return cmd_verify_identities(active->args, cfg);
    if (active == &coerc) return cmd_coercivity_check(active->args, cfg);
    if (active == &galerkin)
      return cmd_galerkin_compare(active->args, cfg, k_list);
    if (active == &itostrat)
      return cmd_ito_strat_check(active->args, cfg, levels);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
