#pragma once

#include "hsmrf/coalescent.hpp"
#include "hsmrf/error.hpp"
#include "hsmrf/field_prior.hpp"
#include "hsmrf/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <thread>
#include <vector>

namespace hsmrf {

struct ChainConfig {
  int n_burnin = 1000;
  int n_samples = 500;
  int thin = 1;
  int n_chains = 4;
  std::uint64_t seed = 1;
  int jobs = 1; // worker threads for independent chains

  void validate() const {
    if (n_burnin < 0 || n_samples < 1 || thin < 1 || n_chains < 1 || jobs < 1)
      throw InputError("chain config: burn-in >= 0, samples >= 1, thin >= 1, chains >= 1, jobs >= 1");
  }
};

struct ChainDiagnostics {
  long iterations = 0;
  long shrinks = 0;    // total bracket shrinks over all slice updates
  int max_shrinks = 0; // worst single update
};

/// Retained draws of one chain. Row r of `pointwise` sums to loglik[r].
struct PosteriorChain {
  int chain = 0;
  Eigen::MatrixXd theta;     // n_samples x H
  Eigen::VectorXd eta2;      // n_samples
  Eigen::VectorXd loglik;    // n_samples, untempered
  Eigen::MatrixXd pointwise; // n_samples x units
  ChainDiagnostics diagnostics;
  LatentState final_state;
};

inline constexpr int kMaxShrinks = 1000;

struct SliceResult {
  Eigen::VectorXd theta;
  double loglik = 0.0; // untempered log-likelihood of the returned field
  int shrinks = 0;
};

/// One elliptical slice update of the whole field given the scales. The
/// auxiliary draw uses the state-space prior (no matrix factorization). The
/// log-likelihood is raised to `power` (steppingstone rungs); power 0 accepts
/// the first proposal.
template <FieldLikelihood L>
SliceResult ess_update(const Eigen::VectorXd &theta, double current_loglik, const LatentState &state,
                       const FieldModel &model, const L &lik, Engine &rng, double power = 1.0) {
  if (!std::isfinite(current_loglik))
    throw RuntimeError("ess_update: non-finite log-likelihood at the current state");
  auto tempered = [power](double ll) { return power == 0.0 ? 0.0 : power * ll; };

  const Eigen::VectorXd f = theta.array() - model.mu;
  const Eigen::VectorXd nu = sample_field(model, state, rng, /*centred=*/true);
  const double level = std::log(uniform_open(rng)) + tempered(current_loglik);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  double angle = std::uniform_real_distribution<double>(0.0, two_pi)(rng);
  double lo = angle - two_pi, hi = angle;

  SliceResult out;
  for (int shrinks = 0;; ++shrinks) {
    Eigen::VectorXd proposal = (f * std::cos(angle) + nu * std::sin(angle)).array() + model.mu;
    const double ll = lik(proposal);
    if (tempered(ll) > level) {
      out.theta = std::move(proposal);
      out.loglik = ll;
      out.shrinks = shrinks;
      return out;
    }
    if (shrinks >= kMaxShrinks)
      throw RuntimeError("ess_update: slice bracket failed to close after 1000 shrinks");
    if (angle < 0.0) lo = angle;
    else hi = angle;
    angle = std::uniform_real_distribution<double>(lo, hi)(rng);
  }
}

template <FieldLikelihood L>
Eigen::VectorXd ess_update(const Eigen::VectorXd &theta, const LatentState &state, const FieldModel &model,
                           const L &lik, Engine &rng, double power = 1.0) {
  return ess_update(theta, lik(theta), state, model, lik, rng, power).theta;
}

/// Gibbs sweep over the scales given the field, in the order
/// lambda^2 -> eta^2 -> psi -> xi. Updates `s` in place (theta untouched).
inline void gibbs_update_scales_inplace(LatentState &s, const FieldModel &model, Engine &rng) {
  const int H = s.H();
  const Eigen::VectorXd inc = increments(s.theta, model.order);
  const double zeta2 = model.zeta * model.zeta;

  if (model.horseshoe()) {
    for (Eigen::Index j = 0; j < inc.size(); ++j) {
      const double w = increment_weight(j, model.order);
      const double rate = 1.0 / s.psi[j] + inc[j] * inc[j] / (2.0 * w * s.eta2 * zeta2);
      s.lambda2[j] = clamp_scale(inv_gamma(rng, 1.0, rate));
    }
  }

  double ss = 0.0;
  for (Eigen::Index j = 0; j < inc.size(); ++j) {
    const double local = model.horseshoe() ? s.lambda2[j] : 1.0;
    ss += inc[j] * inc[j] / (increment_weight(j, model.order) * local);
  }
  s.eta2 = clamp_scale(inv_gamma(rng, 0.5 * H, 1.0 / s.xi + ss / (2.0 * zeta2)));

  if (model.horseshoe())
    for (Eigen::Index j = 0; j < s.psi.size(); ++j)
      s.psi[j] = clamp_scale(inv_gamma(rng, 1.0, 1.0 + 1.0 / s.lambda2[j]));
  s.xi = clamp_scale(inv_gamma(rng, 1.0, 1.0 + 1.0 / s.eta2));
}

inline LatentState gibbs_update_scales(const Eigen::VectorXd &theta, LatentState state,
                                       const FieldModel &model, Engine &rng) {
  state.theta = theta;
  gibbs_update_scales_inplace(state, model, rng);
  return state;
}

/// Runs chain `index` of `cfg` starting from `init`. Each iteration is one
/// slice update of theta followed by one Gibbs sweep of the scales.
template <FieldLikelihood L>
PosteriorChain sample_chain(const FieldModel &model, const L &lik, const ChainConfig &cfg, int index,
                            LatentState init, double power = 1.0) {
  model.validate();
  cfg.validate();
  LatentState s = std::move(init);

  Engine rng = make_engine(cfg.seed, {static_cast<std::uint64_t>(index)});
  PosteriorChain out;
  out.chain = index;
  const int dim = s.H();
  out.theta.resize(cfg.n_samples, dim);
  out.eta2.resize(cfg.n_samples);
  out.loglik.resize(cfg.n_samples);
  out.pointwise.resize(cfg.n_samples, lik.units());

  double ll = lik(s.theta);
  Eigen::VectorXd pw;
  const long total = static_cast<long>(cfg.n_burnin) + static_cast<long>(cfg.n_samples) * cfg.thin;
  int kept = 0;
  for (long it = 1; it <= total; ++it) {
    SliceResult r = ess_update(s.theta, ll, s, model, lik, rng, power);
    s.theta = std::move(r.theta);
    ll = r.loglik;
    out.diagnostics.shrinks += r.shrinks;
    out.diagnostics.max_shrinks = std::max(out.diagnostics.max_shrinks, r.shrinks);
    gibbs_update_scales_inplace(s, model, rng);

    if (it > cfg.n_burnin && (it - cfg.n_burnin) % cfg.thin == 0) {
      out.theta.row(kept) = s.theta.transpose();
      out.eta2[kept] = s.eta2;
      out.loglik[kept] = ll;
      lik.pointwise(s.theta, pw);
      out.pointwise.row(kept) = pw.transpose();
      ++kept;
    }
  }
  out.diagnostics.iterations = total;
  out.final_state = std::move(s);
  return out;
}

/// Runs `f(i)` for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any task is rethrown after all workers finish.
template <class F>
void parallel_for(int n, int jobs, F &&f) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto &t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

/// Runs cfg.n_chains independent chains; chain i draws from stream
/// (cfg.seed, i), so results do not depend on cfg.jobs. Chains start from
/// `init` when given, else from initial_state().
template <FieldLikelihood L>
std::vector<PosteriorChain> run_chain(const FieldModel &model, const L &lik, const ChainConfig &cfg,
                                      double power = 1.0, const std::optional<LatentState> &init = {}) {
  model.validate();
  cfg.validate();
  if (init && init->H() != lik.units())
    throw InputError("run_chain: initial state has the wrong length");
  std::vector<PosteriorChain> chains(cfg.n_chains);
  parallel_for(cfg.n_chains, cfg.jobs, [&](int i) {
    chains[i] = sample_chain(model, lik, cfg, i, init ? *init : initial_state(model, lik.units()), power);
  });
  return chains;
}

/// Effective sample size from the autocorrelation sum, truncated with
/// Geyer's initial positive sequence. A constant sequence has ESS 1.
inline double mcmc_ess(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 10)
    throw InputError("mcmc_ess: need at least 10 draws");
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += (draws[i] - mean) * (draws[i + lag] - mean);
    return acc / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 1.0;

  double tau = -1.0; // tau = -1 + 2 sum_k Gamma_k, Gamma_k = rho_{2k} + rho_{2k+1}
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double gamma = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (gamma <= 0.0) break;
    tau += 2.0 * gamma;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

} // namespace hsmrf
