#pragma once

#include "hsmrf/calibration.hpp"
#include "hsmrf/coalescent.hpp"
#include "hsmrf/config.hpp"
#include "hsmrf/error.hpp"
#include "hsmrf/evaluate.hpp"
#include "hsmrf/field_prior.hpp"
#include "hsmrf/grid.hpp"
#include "hsmrf/sampler.hpp"
#include "hsmrf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace hsmrf {

/// Grid for a fixed tree. H defaults to the cell-count rule. T comes from the
/// config, else from the TMRCA quantile rule, else the tree height. When
/// T < t_1 the last cell reaches to t_1.
inline Grid resolve_grid(const RunConfig &cfg, const Genealogy &g) {
  int H = 0;
  if (cfg.H) H = *cfg.H;
  else if (g.sample_size() >= 4) H = choose_cell_count(g.sample_size());
  else throw ConfigError("fewer than 4 samples: set H in the config");
  double T = g.tmrca();
  if (cfg.T) T = *cfg.T;
  else if (cfg.tmrca_median) T = choose_boundary(*cfg.tmrca_median, *cfg.tmrca_lo, *cfg.tmrca_hi, cfg.alpha_T);
  if (T < g.tmrca()) return build_grid(H, T, g.tmrca());
  return build_grid(H, T);
}

/// Fills mu, sigma and zeta: explicit config values win, the rest come from
/// the skyline of `g`.
inline FieldModel resolve_model(const std::string &code, const RunConfig &cfg, const Genealogy &g, int H,
                                std::optional<Calibration> *calibration_out = nullptr) {
  FieldModel m = FieldModel::from_code(code);
  const bool need_skyline = !cfg.mu || !cfg.sigma || !cfg.zeta;
  if (need_skyline && g.sample_size() < 3)
    throw ConfigError("fewer than 3 samples: set mu, sigma and zeta in the config");
  if (!cfg.mu || !cfg.sigma) set_default_hyperparameters(m, g);
  if (cfg.mu) m.mu = *cfg.mu;
  if (cfg.sigma) m.sigma = *cfg.sigma;
  if (cfg.zeta) {
    m.zeta = *cfg.zeta;
  } else {
    const Calibration cal = calibrate(g, m, H, cfg.zeta_alpha);
    m.zeta = cal.zeta;
    if (calibration_out) *calibration_out = cal;
  }
  m.validate();
  return m;
}

struct FitResult {
  FieldModel model;
  Grid grid;
  std::optional<Calibration> calibration;
  std::vector<PosteriorChain> chains;
  FitSummary summary;
};

inline FitResult fit_model(const Genealogy &g, const Grid &grid, const std::string &code, const RunConfig &cfg,
                           const ChainConfig &chain_cfg, const std::optional<Eigen::VectorXd> &truth = {}) {
  FitResult out;
  out.grid = grid;
  out.model = resolve_model(code, cfg, g, grid.cells(), &out.calibration);
  const SubintervalPartition part = partition(g, grid);
  const CoalescentLikelihood lik(part);
  LatentState start = initial_state(out.model, grid.cells());
  start.theta = pooled_log_ne(part);
  out.chains = run_chain(out.model, lik, chain_cfg, 1.0, start);
  out.summary = metrics(merge_chains(out.chains), truth);
  return out;
}

inline FitResult fit(const Genealogy &g, const RunConfig &cfg, const std::optional<Eigen::VectorXd> &truth = {}) {
  return fit_model(g, resolve_grid(cfg, g), cfg.model, cfg, cfg.chain, truth);
}

/// Simulation design; a tabulated trajectory is loaded by the caller.
struct StudyDesign {
  Trajectory trajectory;
  int n = 0, n0 = 0, H = 0;
  double S = 0.0, T = 0.0;
};

inline StudyDesign study_design(const RunConfig &cfg, std::optional<Trajectory> table = std::nullopt) {
  StudyDesign d{table ? *table : Trajectory::scenario(parse_scenario(cfg.scenario))};
  std::optional<ScenarioSettings> defaults;
  if (!table) defaults = scenario_settings(parse_scenario(cfg.scenario));
  auto pick = [&](auto given, auto fallback, const char *name) {
    if (given) return *given;
    if (!defaults) throw ConfigError(std::string("study with a tabulated trajectory: set ") + name);
    return fallback;
  };
  d.n = pick(cfg.n, defaults ? defaults->n : 0, "n");
  d.n0 = pick(cfg.n0, defaults ? defaults->n0 : 0, "n0");
  d.S = pick(cfg.S, defaults ? defaults->S : 0.0, "S");
  d.T = pick(cfg.T, defaults ? defaults->T : 0.0, "T");
  if (d.n0 < 1 || d.n0 > d.n || d.n < 2)
    throw ConfigError("study: need 1 <= n0 <= n and n >= 2");
  d.H = cfg.H ? *cfg.H : choose_cell_count(d.n);
  return d;
}

/// Study grid: H-1 equal cells on [0, T] and a last cell of the same width,
/// stretched to reach t_1 when the tree is taller.
inline Grid study_grid(const StudyDesign &d, const Genealogy &g) {
  return build_grid(d.H, d.T, std::max(g.tmrca(), d.T + d.T / (d.H - 1)));
}

struct SimulatedReplicate {
  SimulatedTree data;
  Grid grid;
  Eigen::VectorXd truth;
};

inline std::uint64_t model_stream(const std::string &code) {
  const FieldModel m = FieldModel::from_code(code);
  return static_cast<std::uint64_t>((m.horseshoe() ? 2 : 0) + m.order);
}

inline SimulatedReplicate simulate_replicate(const StudyDesign &d, std::uint64_t seed, int rep) {
  Engine rng = make_engine(seed, {1, static_cast<std::uint64_t>(rep)});
  const SamplingSchedule schedule = sample_schedule(d.n0, d.n - d.n0, d.S, rng);
  SimulatedReplicate r{simulate_coalescent(schedule, d.trajectory, rng), {}, {}};
  r.grid = study_grid(d, r.data.genealogy);
  r.truth = true_field(d.trajectory, r.grid);
  return r;
}

struct ReplicateResult {
  int rep = 0;
  std::string model;
  bool ok = false;
  std::string error;
  Metrics metrics;
  double waic_delta = 0.0, waic_weight = 0.0;
};

struct StudyRow {
  std::string model;
  int n_ok = 0;
  double MAD = 0.0, MCIW = 0.0, Env = 0.0, MASV = 0.0, TMASV = 0.0, p_eff = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> summary;          // one row per model
  std::vector<ReplicateResult> replicates; // rep-major, models in config order
};

/// Simulate, calibrate, fit every model and score against the truth, for
/// cfg.reps replicates. Replicates run on cfg.chain.jobs workers; chains
/// within a replicate run serially. A failing replicate is recorded and
/// the study continues.
inline StudyResult run_study(const RunConfig &cfg, const StudyDesign &d) {
  cfg.validate();
  const std::size_t M = cfg.models.size();
  StudyResult out;
  out.replicates.resize(static_cast<std::size_t>(cfg.reps) * M);

  parallel_for(cfg.reps, cfg.chain.jobs, [&](int rep) {
    std::vector<Eigen::MatrixXd> pointwise(M);
    bool all_ok = true;
    std::optional<SimulatedReplicate> sim;
    std::string sim_error;
    try {
      sim = simulate_replicate(d, cfg.chain.seed, rep);
    } catch (const std::exception &e) {
      sim_error = e.what();
    }
    for (std::size_t m = 0; m < M; ++m) {
      ReplicateResult &res = out.replicates[static_cast<std::size_t>(rep) * M + m];
      res.rep = rep;
      res.model = FieldModel::from_code(cfg.models[m]).code();
      if (!sim) {
        res.error = sim_error;
        all_ok = false;
        continue;
      }
      try {
        ChainConfig cc = cfg.chain;
        cc.jobs = 1;
        cc.seed = derive_seed(cfg.chain.seed, {2, static_cast<std::uint64_t>(rep), model_stream(cfg.models[m])});
        FitResult fr = fit_model(sim->data.genealogy, sim->grid, cfg.models[m], cfg, cc, sim->truth);
        res.metrics = fr.summary.metrics;
        pointwise[m] = merge_chains(fr.chains).pointwise;
        res.ok = true;
      } catch (const std::exception &e) {
        res.error = e.what();
        all_ok = false;
      }
    }
    if (all_ok) {
      const auto w = waic_weights(pointwise);
      for (std::size_t m = 0; m < M; ++m) {
        out.replicates[static_cast<std::size_t>(rep) * M + m].waic_delta = w[m].delta;
        out.replicates[static_cast<std::size_t>(rep) * M + m].waic_weight = w[m].weight;
      }
    }
  });

  for (std::size_t m = 0; m < M; ++m) {
    StudyRow row;
    row.model = FieldModel::from_code(cfg.models[m]).code();
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const auto &r = out.replicates[static_cast<std::size_t>(rep) * M + m];
      if (!r.ok) continue;
      ++row.n_ok;
      row.MAD += *r.metrics.MAD;
      row.MCIW += r.metrics.MCIW;
      row.Env += *r.metrics.Envelope;
      row.MASV += r.metrics.MASV;
      row.TMASV += *r.metrics.TMASV;
      row.p_eff += r.metrics.p_eff;
    }
    if (row.n_ok > 0) {
      const double k = row.n_ok;
      row.MAD /= k;
      row.MCIW /= k;
      row.Env /= k;
      row.MASV /= k;
      row.TMASV /= k;
      row.p_eff /= k;
    } else {
      row.MAD = row.MCIW = row.Env = row.MASV = row.TMASV = row.p_eff = std::nan("");
    }
    out.summary.push_back(row);
  }
  return out;
}

} // namespace hsmrf
