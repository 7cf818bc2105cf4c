#pragma once

#include "hsmrf/coalescent.hpp"
#include "hsmrf/error.hpp"
#include "hsmrf/field_prior.hpp"
#include "hsmrf/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace hsmrf {

inline constexpr int kDefaultStones = 50;
inline constexpr double kDefaultBetaShape = 0.2;

/// beta_k = k/K quantile of Beta(shape, 1), i.e. (k/K)^(1/shape), k = 0..K.
inline std::vector<double> stone_powers(int K, double shape = kDefaultBetaShape) {
  if (K < 2)
    throw InputError("steppingstone: need at least 2 stones");
  if (!(shape > 0.0))
    throw InputError("steppingstone: beta shape must be positive");
  std::vector<double> b(K + 1);
  for (int k = 0; k <= K; ++k) b[k] = std::pow(static_cast<double>(k) / K, 1.0 / shape);
  b[K] = 1.0;
  return b;
}

struct SteppingstoneResult {
  double log_ml = 0.0;
  std::vector<double> powers;     // beta_0 .. beta_K
  std::vector<double> log_ratios; // one per stone
};

/// Log marginal likelihood by steppingstone sampling. Stone k samples the
/// posterior with likelihood power beta_k and estimates
/// log r_k = log mean exp((beta_{k+1} - beta_k) loglik). Each chain walks the
/// stones in order, warm-started from its state at the previous stone.
/// cfg.n_burnin and cfg.n_samples are totals, split equally across stones.
template <FieldLikelihood L>
SteppingstoneResult steppingstone(const FieldModel &model, const L &lik, const ChainConfig &cfg,
                                  int K = kDefaultStones, double beta_shape = kDefaultBetaShape) {
  model.validate();
  cfg.validate();
  SteppingstoneResult out;
  out.powers = stone_powers(K, beta_shape);

  ChainConfig stone_cfg = cfg;
  stone_cfg.n_burnin = (cfg.n_burnin + K - 1) / K;
  stone_cfg.n_samples = std::max(1, (cfg.n_samples + K - 1) / K);

  // draws[c][k]: untempered log-likelihoods from chain c at stone k.
  std::vector<std::vector<Eigen::VectorXd>> draws(cfg.n_chains, std::vector<Eigen::VectorXd>(K));
  parallel_for(cfg.n_chains, cfg.jobs, [&](int c) {
    LatentState state = initial_state(model, lik.units());
    for (int k = 0; k < K; ++k) {
      ChainConfig sc = stone_cfg;
      sc.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(k)});
      PosteriorChain pc = sample_chain(model, lik, sc, c, std::move(state), out.powers[k]);
      draws[c][k] = std::move(pc.loglik);
      state = std::move(pc.final_state);
    }
  });

  out.log_ratios.resize(K);
  for (int k = 0; k < K; ++k) {
    const double step = out.powers[k + 1] - out.powers[k];
    std::vector<double> terms;
    for (int c = 0; c < cfg.n_chains; ++c)
      for (Eigen::Index r = 0; r < draws[c][k].size(); ++r) terms.push_back(step * draws[c][k][r]);
    const double top = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - top);
    out.log_ratios[k] = top + std::log(acc / static_cast<double>(terms.size()));
    if (!std::isfinite(out.log_ratios[k]))
      throw RuntimeError("steppingstone: non-finite estimate at stone " + std::to_string(k));
    out.log_ml += out.log_ratios[k];
  }
  return out;
}

} // namespace hsmrf
