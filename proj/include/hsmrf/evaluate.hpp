#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/sampler.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hsmrf {

/// Stacks the retained draws of several chains in chain order.
inline PosteriorChain merge_chains(const std::vector<PosteriorChain> &chains) {
  if (chains.empty())
    throw InputError("merge_chains: no chains");
  Eigen::Index rows = 0;
  for (const auto &c : chains) rows += c.theta.rows();
  const Eigen::Index H = chains.front().theta.cols();
  const Eigen::Index U = chains.front().pointwise.cols();
  PosteriorChain out;
  out.chain = -1;
  out.theta.resize(rows, H);
  out.eta2.resize(rows);
  out.loglik.resize(rows);
  out.pointwise.resize(rows, U);
  Eigen::Index r = 0;
  for (const auto &c : chains) {
    if (c.theta.cols() != H || c.pointwise.cols() != U)
      throw InputError("merge_chains: chains have different dimensions");
    const Eigen::Index n = c.theta.rows();
    out.theta.middleRows(r, n) = c.theta;
    out.eta2.segment(r, n) = c.eta2;
    out.loglik.segment(r, n) = c.loglik;
    out.pointwise.middleRows(r, n) = c.pointwise;
    out.diagnostics.iterations += c.diagnostics.iterations;
    out.diagnostics.shrinks += c.diagnostics.shrinks;
    out.diagnostics.max_shrinks = std::max(out.diagnostics.max_shrinks, c.diagnostics.max_shrinks);
    r += n;
  }
  return out;
}

/// Sample quantile with linear interpolation between order statistics
/// (R type 7).
inline double quantile(std::vector<double> x, double p) {
  if (x.empty())
    throw InputError("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0))
    throw InputError("quantile: p must lie in [0, 1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

/// Effective number of parameters: 2/(R-1) sum_r (L_r - mean L)^2.
inline double p_eff(std::span<const double> loglik) {
  const std::size_t R = loglik.size();
  if (R < 2)
    throw InputError("p_eff: need at least 2 draws");
  double mean = 0.0;
  for (double v : loglik) mean += v;
  mean /= static_cast<double>(R);
  double ss = 0.0;
  for (double v : loglik) ss += (v - mean) * (v - mean);
  return 2.0 * ss / static_cast<double>(R - 1);
}

inline double p_eff(const Eigen::VectorXd &loglik) {
  return p_eff(std::span<const double>(loglik.data(), static_cast<std::size_t>(loglik.size())));
}

struct Waic {
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
};

/// WAIC from an R x units matrix of pointwise log-likelihoods.
/// p_waic uses the sample variance (R-1 denominator); R = 1 gives p_waic = 0.
inline Waic waic(const Eigen::MatrixXd &pointwise) {
  const Eigen::Index R = pointwise.rows();
  if (R < 1 || pointwise.cols() < 1)
    throw InputError("waic: empty pointwise matrix");
  Waic out;
  for (Eigen::Index h = 0; h < pointwise.cols(); ++h) {
    const Eigen::VectorXd col = pointwise.col(h);
    const double m = col.maxCoeff();
    out.lppd += m + std::log((col.array() - m).exp().mean());
    if (R > 1) {
      const double mean = col.mean();
      out.p_waic += (col.array() - mean).square().sum() / static_cast<double>(R - 1);
    }
  }
  out.waic = -2.0 * (out.lppd - out.p_waic);
  return out;
}

struct WaicWeight {
  Waic waic;
  double delta = 0.0;
  double weight = 0.0;
};

/// Akaike-style weights w_m = exp(-dW_m / 2) / sum_r exp(-dW_r / 2), where
/// dW_m is WAIC_m minus the smallest WAIC.
inline std::vector<WaicWeight> waic_weights(const std::vector<Eigen::MatrixXd> &pointwise) {
  if (pointwise.empty())
    throw InputError("waic_weights: no models");
  std::vector<WaicWeight> out(pointwise.size());
  for (std::size_t m = 0; m < pointwise.size(); ++m) {
    if (pointwise[m].cols() != pointwise.front().cols())
      throw InputError("waic_weights: models have different numbers of cells");
    out[m].waic = waic(pointwise[m]);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto &w : out) best = std::min(best, w.waic.waic);
  double norm = 0.0;
  for (auto &w : out) {
    w.delta = w.waic.waic - best;
    w.weight = std::exp(-0.5 * w.delta);
    norm += w.weight;
  }
  for (auto &w : out) w.weight /= norm;
  return out;
}

/// Posterior model probabilities from log marginal likelihoods and prior
/// odds (relative prior weights), normalised after subtracting the maximum.
inline std::vector<double> model_probabilities(const std::vector<double> &log_ml,
                                               std::vector<double> prior_odds = {}) {
  if (log_ml.empty())
    throw InputError("model_probabilities: empty input");
  if (prior_odds.empty()) prior_odds.assign(log_ml.size(), 1.0);
  if (prior_odds.size() != log_ml.size())
    throw InputError("model_probabilities: prior odds and log marginal likelihoods differ in length");
  std::vector<double> score(log_ml.size());
  for (std::size_t k = 0; k < log_ml.size(); ++k) {
    if (!(prior_odds[k] > 0.0))
      throw InputError("model_probabilities: prior odds must be positive");
    if (!std::isfinite(log_ml[k]))
      throw InputError("model_probabilities: non-finite log marginal likelihood");
    score[k] = log_ml[k] + std::log(prior_odds[k]);
  }
  const double top = *std::max_element(score.begin(), score.end());
  double norm = 0.0;
  for (double &s : score) norm += (s = std::exp(s - top));
  for (double &s : score) s /= norm;
  return score;
}

struct Metrics {
  double MCIW = 0.0;
  double MASV = 0.0;
  double p_eff = 0.0;
  double WAIC = 0.0;
  std::optional<double> MAD, Envelope, TMASV;
};

struct FitSummary {
  Eigen::VectorXd median, lower, upper; // per cell; 2.5% and 97.5% bounds
  Metrics metrics;
};

inline double mean_abs_sequential_variation(const Eigen::VectorXd &x) {
  if (x.size() < 2) return 0.0;
  return (x.tail(x.size() - 1) - x.head(x.size() - 1)).cwiseAbs().mean();
}

/// Posterior bands, metrics against `truth` when supplied, p_eff from the
/// total log-likelihoods and WAIC from the pointwise values.
inline FitSummary metrics(const PosteriorChain &post, const std::optional<Eigen::VectorXd> &truth = {}) {
  const Eigen::Index R = post.theta.rows(), H = post.theta.cols();
  if (R < 1 || H < 1)
    throw InputError("metrics: empty posterior");
  if (truth && truth->size() != H)
    throw InputError("metrics: truth has length " + std::to_string(truth->size()) + ", posterior has " +
                     std::to_string(H) + " cells");
  FitSummary s;
  s.median.resize(H);
  s.lower.resize(H);
  s.upper.resize(H);
  std::vector<double> col(static_cast<std::size_t>(R));
  for (Eigen::Index h = 0; h < H; ++h) {
    for (Eigen::Index r = 0; r < R; ++r) col[static_cast<std::size_t>(r)] = post.theta(r, h);
    s.median[h] = quantile(col, 0.5);
    s.lower[h] = quantile(col, 0.025);
    s.upper[h] = quantile(col, 0.975);
  }
  auto &m = s.metrics;
  m.MCIW = (s.upper - s.lower).mean();
  m.MASV = mean_abs_sequential_variation(s.median);
  m.p_eff = R >= 2 ? p_eff(post.loglik) : 0.0;
  m.WAIC = waic(post.pointwise).waic;
  if (truth) {
    m.MAD = (s.median - *truth).cwiseAbs().mean();
    int inside = 0;
    for (Eigen::Index h = 0; h < H; ++h)
      inside += ((*truth)[h] >= s.lower[h] && (*truth)[h] <= s.upper[h]) ? 1 : 0;
    m.Envelope = static_cast<double>(inside) / static_cast<double>(H);
    m.TMASV = mean_abs_sequential_variation(*truth);
  }
  return s;
}

} // namespace hsmrf
