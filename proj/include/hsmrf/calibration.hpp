#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/field_prior.hpp"
#include "hsmrf/genealogy.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace hsmrf {

/// Classic skyline: one estimate per coalescent interval, ordered from the
/// present (k = n-1) to the root (k = 1).
struct SkylineEstimate {
  std::vector<double> start;    // t_{k+1} (0 for the first interval)
  std::vector<double> end;      // t_k
  std::vector<double> estimate; // N-hat_k

  std::size_t size() const { return estimate.size(); }
};

/// N-hat_k is the coalescent-factor-weighted time between consecutive
/// coalescent events, sum_i C_{i,k} |I_{i,k}|. Without intervening sampling
/// events this is the classic (t_k - t_{k+1}) C(n_k, 2).
inline SkylineEstimate classic_skyline(const Genealogy &g) {
  SkylineEstimate out;
  double acc = 0.0, start = 0.0;
  for (const auto &iv : lineage_intervals(g)) {
    acc += iv.coal_factor * iv.length();
    if (iv.ends_in == IntervalEnd::Coalescent) {
      out.start.push_back(start);
      out.end.push_back(iv.end);
      out.estimate.push_back(acc);
      acc = 0.0;
      start = iv.end;
    }
  }
  return out;
}

struct LogSkylineMoments {
  double mean;
  double sd; // sample standard deviation (n-1 denominator)
};

inline LogSkylineMoments log_skyline_moments(const SkylineEstimate &sky) {
  const std::size_t k = sky.size();
  if (k < 2)
    throw InputError("skyline: need at least 2 coalescent intervals (n >= 3)");
  double mean = 0.0;
  for (double v : sky.estimate) mean += std::log(v);
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double v : sky.estimate) ss += (std::log(v) - mean) * (std::log(v) - mean);
  return {mean, std::sqrt(ss / static_cast<double>(k - 1))};
}

/// Geometric mean of the marginal standard deviations of theta when every
/// local scale is 1 and eta zeta = 1, with theta_1 anchored at the model's sigma.
inline double sigma_ref(const FieldModel &model, int H) {
  if (H < model.order + 1)
    throw InputError("sigma_ref: need H >= order + 1");
  FieldModel unit = model;
  unit.zeta = 1.0;
  LatentState s = initial_state(unit, H);
  const Eigen::MatrixXd Q = Eigen::MatrixXd(precision_matrix(unit, s));
  const Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success)
    throw RuntimeError("sigma_ref: precision matrix is not positive definite");
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(H, H));
  double log_sum = 0.0;
  for (int i = 0; i < H; ++i) log_sum += 0.5 * std::log(cov(i, i));
  return std::exp(log_sum / H);
}

inline constexpr double kDefaultZetaAlpha = 0.05;

/// Half-Cauchy scale for the global smoothing parameter such that the
/// average marginal standard deviation exceeds U with probability alpha.
inline double zeta(double U, double sigma_ref_value, double alpha = kDefaultZetaAlpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("zeta: alpha must lie in (0, 1)");
  if (!(U > 0.0) || !(sigma_ref_value > 0.0))
    throw InputError("zeta: U and sigma_ref must be positive");
  return U / (sigma_ref_value * std::tan(0.5 * std::numbers::pi * (1.0 - alpha)));
}

struct Calibration {
  double U;
  double sigma_ref;
  double zeta;
};

/// U is the standard deviation of the log skyline estimates.
inline Calibration calibrate(const Genealogy &g, const FieldModel &model, int H,
                             double alpha = kDefaultZetaAlpha) {
  if (g.sample_size() < 3)
    throw InputError("calibrate: need n >= 3 samples");
  const auto moments = log_skyline_moments(classic_skyline(g));
  if (!(moments.sd > 0.0))
    throw InputError("calibrate: degenerate skyline (all estimates equal, U = 0)");
  const double ref = sigma_ref(model, H);
  return {moments.sd, ref, zeta(moments.sd, ref, alpha)};
}

/// Default theta_1 prior: mean of the log skyline estimates and a variance
/// four times theirs.
inline void set_default_hyperparameters(FieldModel &model, const Genealogy &g) {
  const auto moments = log_skyline_moments(classic_skyline(g));
  if (!(moments.sd > 0.0))
    throw InputError("default hyperparameters: degenerate skyline (zero variance)");
  model.mu = moments.mean;
  model.sigma = 2.0 * moments.sd;
}

} // namespace hsmrf
