#pragma once

// Conjugate test problem for the marginal-likelihood estimator: a field prior
// with a Gaussian observation y_h ~ N(theta_h, s^2) per cell in place of the
// coalescent term.

#include "hsmrf/field_prior.hpp"
#include "oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace oracle {

struct GaussianLikelihood {
  Eigen::VectorXd y;
  double s = 1.0;

  int units() const { return static_cast<int>(y.size()); }
  double operator()(const Eigen::VectorXd &theta) const {
    Eigen::VectorXd pw;
    pointwise(theta, pw);
    return pw.sum();
  }
  void pointwise(const Eigen::VectorXd &theta, Eigen::VectorXd &out) const {
    out = -0.5 * std::log(2.0 * std::numbers::pi * s * s) - (y - theta).array().square() / (2.0 * s * s);
  }
};

/// log p(y) for a GMRF prior whose global scale eta ~ half-Cauchy(0, 1):
/// a 1-D integral over eta of N(y; mu, Sigma(eta) + s^2 I), with eta = tan(u).
inline double gmrf_gaussian_log_evidence(const hsmrf::FieldModel &m, const GaussianLikelihood &lik) {
  const int H = lik.units();
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(H, m.mu);
  auto log_marginal = [&](double eta) {
    const Eigen::MatrixXd Q =
        random_walk_precision(H, m.order, m.sigma, eta * eta * m.zeta * m.zeta, Eigen::VectorXd::Ones(H - 1));
    const Eigen::MatrixXd S = Q.inverse() + lik.s * lik.s * Eigen::MatrixXd::Identity(H, H);
    return mvn_logpdf_covariance(lik.y, mean, S);
  };
  // Scale by the value at eta = 1 to keep the integrand near 1.
  const double ref = log_marginal(1.0);
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double u) {
        if (u <= 0.0 || u >= 0.5 * std::numbers::pi) return 0.0;
        return std::exp(log_marginal(std::tan(u)) - ref);
      },
      0.0, 0.5 * std::numbers::pi, 20, 1e-12);
  return ref + std::log(2.0 / std::numbers::pi * integral);
}

} // namespace oracle
