#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/rng.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace hsmrf {

enum class Family { GMRF, HSMRF };

/// Markov random field prior on the log effective population sizes.
/// theta_1 ~ N(mu, sigma^2); order-p increments are normal with variance
/// lambda_j^2 eta^2 zeta^2 (lambda_j^2 = 1 for GMRF).
struct FieldModel {
  Family family = Family::HSMRF;
  int order = 1;
  double mu = 0.0;
  double sigma = 1.0;
  double zeta = 1.0;

  void validate() const {
    if (order != 1 && order != 2)
      throw InputError("field model: order must be 1 or 2");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw InputError("field model: sigma must be positive");
    if (!(zeta > 0.0) || !std::isfinite(zeta))
      throw InputError("field model: zeta must be positive");
    if (!std::isfinite(mu))
      throw InputError("field model: mu must be finite");
  }

  bool horseshoe() const { return family == Family::HSMRF; }

  /// Short code used in tables: G1, G2, H1, H2.
  std::string code() const { return std::string(horseshoe() ? "H" : "G") + std::to_string(order); }
  std::string name() const { return std::string(horseshoe() ? "HSMRF-" : "GMRF-") + std::to_string(order); }

  /// Accepts "H1", "G2", "HSMRF-1", "gmrf-2", ...
  static FieldModel from_code(std::string s) {
    for (auto &c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    FieldModel m;
    if (s == "H1" || s == "HSMRF-1" || s == "HSMRF1") m = {Family::HSMRF, 1};
    else if (s == "H2" || s == "HSMRF-2" || s == "HSMRF2") m = {Family::HSMRF, 2};
    else if (s == "G1" || s == "GMRF-1" || s == "GMRF1") m = {Family::GMRF, 1};
    else if (s == "G2" || s == "GMRF-2" || s == "GMRF2") m = {Family::GMRF, 2};
    else throw InputError("unknown model '" + s + "' (expected H1, H2, G1 or G2)");
    return m;
  }
};

/// Field plus squared scales and the inverse-gamma auxiliaries of the
/// half-Cauchy mixture. lambda2 and psi have one entry per increment.
struct LatentState {
  Eigen::VectorXd theta;
  Eigen::VectorXd lambda2;
  double eta2 = 1.0;
  Eigen::VectorXd psi;
  double xi = 1.0;

  int H() const { return static_cast<int>(theta.size()); }
};

inline constexpr double kScaleFloor = 1e-300;
inline constexpr double kScaleCeiling = 1e300;

inline double clamp_scale(double v) { return std::clamp(v, kScaleFloor, kScaleCeiling); }

/// Order-p differences, length H-p. Order 2 uses the centred form
/// theta_{l+1} - 2 theta_l + theta_{l-1}.
inline Eigen::VectorXd difference(const Eigen::VectorXd &theta, int p) {
  const Eigen::Index H = theta.size();
  if (p != 1 && p != 2)
    throw InputError("difference: order must be 1 or 2");
  if (H <= p)
    throw InputError("difference: need more than " + std::to_string(p) + " values");
  if (p == 1)
    return theta.tail(H - 1) - theta.head(H - 1);
  return theta.tail(H - 2) - 2.0 * theta.segment(1, H - 2) + theta.head(H - 2);
}

/// State-space increments, length H-1: all first differences for order 1;
/// (theta_2 - theta_1, second differences...) for order 2.
inline Eigen::VectorXd increments(const Eigen::VectorXd &theta, int order) {
  const Eigen::Index H = theta.size();
  if (H < 2) return Eigen::VectorXd(0);
  if (order == 1) return difference(theta, 1);
  Eigen::VectorXd d(H - 1);
  d[0] = theta[1] - theta[0];
  if (H > 2) d.tail(H - 2) = difference(theta, 2);
  return d;
}

/// Inverse of increments(): rebuilds theta from theta_1 and the increments.
inline Eigen::VectorXd integrate_increments(double theta1, const Eigen::VectorXd &inc, int order) {
  const Eigen::Index H = inc.size() + 1;
  Eigen::VectorXd theta(H);
  theta[0] = theta1;
  if (H == 1) return theta;
  theta[1] = theta1 + inc[0];
  for (Eigen::Index j = 2; j < H; ++j)
    theta[j] = order == 1 ? theta[j - 1] + inc[j - 1]
                          : inc[j - 1] + 2.0 * theta[j - 1] - theta[j - 2];
  return theta;
}

/// Relative variance of increment j: 1/2 for the first increment of an
/// order-2 field, 1 otherwise.
inline double increment_weight(Eigen::Index j, int order) { return order == 2 && j == 0 ? 0.5 : 1.0; }

inline Eigen::VectorXd increment_variances(const FieldModel &model, const LatentState &s) {
  const Eigen::Index J = std::max<Eigen::Index>(s.H() - 1, 0);
  Eigen::VectorXd v(J);
  const double global = s.eta2 * model.zeta * model.zeta;
  for (Eigen::Index j = 0; j < J; ++j) {
    const double local = model.horseshoe() ? s.lambda2[j] : 1.0;
    v[j] = increment_weight(j, model.order) * local * global;
  }
  return v;
}

/// Deterministic starting point: theta = mu, all scales and auxiliaries 1.
inline LatentState initial_state(const FieldModel &model, int H) {
  LatentState s;
  s.theta = Eigen::VectorXd::Constant(H, model.mu);
  s.lambda2 = Eigen::VectorXd::Ones(std::max(H - 1, 0));
  s.psi = Eigen::VectorXd::Ones(std::max(H - 1, 0));
  s.eta2 = 1.0;
  s.xi = 1.0;
  return s;
}

/// Draws a field from the state-space prior given the scales in `s`. With
/// `centred` the theta_1 mean is 0 instead of mu.
inline Eigen::VectorXd sample_field(const FieldModel &model, const LatentState &s, Engine &rng,
                                    bool centred = false) {
  const Eigen::VectorXd var = increment_variances(model, s);
  Eigen::VectorXd inc(var.size());
  const double first = (centred ? 0.0 : model.mu) + model.sigma * std_normal(rng);
  for (Eigen::Index j = 0; j < var.size(); ++j) inc[j] = std::sqrt(var[j]) * std_normal(rng);
  return integrate_increments(first, inc, model.order);
}

/// Full generative draw: xi, psi -> eta^2, lambda^2 -> increments -> theta.
inline LatentState sample_prior(const FieldModel &model, int H, Engine &rng) {
  model.validate();
  if (H < model.order + 1)
    throw InputError("sample_prior: need H >= order + 1");
  LatentState s = initial_state(model, H);
  s.xi = clamp_scale(inv_gamma(rng, 0.5, 1.0));
  s.eta2 = clamp_scale(inv_gamma(rng, 0.5, 1.0 / s.xi));
  if (model.horseshoe()) {
    for (Eigen::Index j = 0; j < s.psi.size(); ++j) {
      s.psi[j] = clamp_scale(inv_gamma(rng, 0.5, 1.0));
      s.lambda2[j] = clamp_scale(inv_gamma(rng, 0.5, 1.0 / s.psi[j]));
    }
  }
  s.theta = sample_field(model, s, rng);
  return s;
}

inline double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

/// log p(theta | scales) in the factorized state-space form.
inline double log_prior_theta(const Eigen::VectorXd &theta, const LatentState &s,
                              const FieldModel &model) {
  if (theta.size() < 1)
    throw InputError("log_prior_theta: empty field");
  if (!(s.eta2 > 0.0) || (model.horseshoe() && theta.size() > 1 && !(s.lambda2.minCoeff() > 0.0)))
    throw InputError("log_prior_theta: scales must be positive");
  if (theta.size() > 1 && model.horseshoe() && s.lambda2.size() != theta.size() - 1)
    throw InputError("log_prior_theta: lambda2 has the wrong length");
  double lp = log_normal_pdf(theta[0], model.mu, model.sigma * model.sigma);
  if (theta.size() == 1) return lp;
  LatentState scales = s;
  scales.theta = theta;
  const Eigen::VectorXd var = increment_variances(model, scales);
  const Eigen::VectorXd inc = increments(theta, model.order);
  for (Eigen::Index j = 0; j < inc.size(); ++j) lp += log_normal_pdf(inc[j], 0.0, var[j]);
  return lp;
}

/// (H-1) x H matrix mapping theta to its state-space increments.
inline Eigen::SparseMatrix<double> increment_matrix(int H, int order) {
  Eigen::SparseMatrix<double> D(std::max(H - 1, 0), H);
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < H - 1; ++j) {
    if (order == 1 || j == 0) {
      trip.emplace_back(j, j, -1.0);
      trip.emplace_back(j, j + 1, 1.0);
    } else {
      trip.emplace_back(j, j - 1, 1.0);
      trip.emplace_back(j, j, -2.0);
      trip.emplace_back(j, j + 1, 1.0);
    }
  }
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

/// Precision of theta given the scales: Q = D' V^{-1} D + e1 e1' / sigma^2,
/// banded with bandwidth equal to the order.
inline Eigen::SparseMatrix<double> precision_matrix(const FieldModel &model, const LatentState &s) {
  const int H = s.H();
  const Eigen::SparseMatrix<double> D = increment_matrix(H, model.order);
  const Eigen::VectorXd var = increment_variances(model, s);
  Eigen::SparseMatrix<double> Vinv(var.size(), var.size());
  Vinv.reserve(Eigen::VectorXi::Constant(var.size(), 1));
  for (Eigen::Index j = 0; j < var.size(); ++j) Vinv.insert(j, j) = 1.0 / var[j];
  Eigen::SparseMatrix<double> Q = Eigen::SparseMatrix<double>(D.transpose()) * Vinv * D;
  if (H > 0) Q.coeffRef(0, 0) += 1.0 / (model.sigma * model.sigma);
  Q.makeCompressed();
  return Q;
}

} // namespace hsmrf
