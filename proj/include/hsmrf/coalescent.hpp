#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/grid.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <vector>

namespace hsmrf {

struct LogLik {
  double total = 0.0;
  Eigen::VectorXd per_cell;
};

/// Discretized coalescent log-density, evaluated subinterval by subinterval:
/// per_cell[h] = sum_d z_d (log C_d - theta_h) - C_d Delta_d exp(-theta_h).
inline LogLik log_likelihood(const SubintervalPartition &part, const Eigen::VectorXd &theta) {
  const int H = part.H();
  if (theta.size() != H)
    throw InputError("log_likelihood: theta has length " + std::to_string(theta.size()) +
                     ", grid has " + std::to_string(H) + " cells");
  LogLik out;
  out.per_cell = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd inv_ne = (-theta.array()).exp();
  for (const auto &s : part.subintervals) {
    if (s.coal_factor == 0.0) continue; // a single lineage cannot coalesce
    double v = -s.coal_factor * s.length() * inv_ne[s.cell];
    if (s.coalescent_end) v += std::log(s.coal_factor) - theta[s.cell];
    out.per_cell[s.cell] += v;
  }
  out.total = out.per_cell.sum();
  return out;
}

/// Rough per-cell log N_e: exposure over events, pooled over a window of
/// neighbouring cells that grows until it holds `min_events` coalescences.
/// Used as a data-informed chain start.
inline Eigen::VectorXd pooled_log_ne(const SubintervalPartition &part, int min_events = 5) {
  const int H = part.H();
  int total_events = 0;
  for (const auto &c : part.cells) total_events += c.events;
  if (total_events == 0)
    throw InputError("pooled_log_ne: no coalescent events");
  min_events = std::min(min_events, total_events);
  Eigen::VectorXd out(H);
  for (int h = 0; h < H; ++h) {
    double exposure = part.cells[h].exposure;
    int events = part.cells[h].events;
    for (int w = 1; events < min_events; ++w) {
      if (h - w >= 0) {
        exposure += part.cells[h - w].exposure;
        events += part.cells[h - w].events;
      }
      if (h + w < H) {
        exposure += part.cells[h + w].exposure;
        events += part.cells[h + w].events;
      }
    }
    out[h] = std::log(exposure / events);
  }
  return out;
}

/// Anything the field sampler can condition on: a log-likelihood of the
/// field plus its decomposition into pointwise units (for WAIC).
template <class L>
concept FieldLikelihood = requires(const L &lik, const Eigen::VectorXd &theta, Eigen::VectorXd &out) {
  { lik.units() } -> std::convertible_to<int>;
  { lik(theta) } -> std::convertible_to<double>;
  lik.pointwise(theta, out);
};

/// Fast evaluator built from the per-cell sufficient statistics of a
/// partition. Cells with no exposure contribute exactly 0.
class CoalescentLikelihood {
public:
  explicit CoalescentLikelihood(const SubintervalPartition &part) : cells_(part.cells) {}

  int units() const { return static_cast<int>(cells_.size()); }

  double operator()(const Eigen::VectorXd &theta) const {
    double total = 0.0;
    for (int h = 0; h < units(); ++h) total += cell(h, theta[h]);
    return total;
  }

  void pointwise(const Eigen::VectorXd &theta, Eigen::VectorXd &out) const {
    out.resize(units());
    for (int h = 0; h < units(); ++h) out[h] = cell(h, theta[h]);
  }

private:
  double cell(int h, double th) const {
    const auto &c = cells_[h];
    if (c.exposure == 0.0 && c.events == 0) return 0.0;
    return c.sum_log_coal - c.events * th - c.exposure * std::exp(-th);
  }

  std::vector<CellStats> cells_;
};

/// Constant zero log-likelihood; sampling under it targets the prior.
struct FlatLikelihood {
  int n_units = 1;
  int units() const { return n_units; }
  double operator()(const Eigen::VectorXd &) const { return 0.0; }
  void pointwise(const Eigen::VectorXd &, Eigen::VectorXd &out) const {
    out = Eigen::VectorXd::Zero(n_units);
  }
};

} // namespace hsmrf
