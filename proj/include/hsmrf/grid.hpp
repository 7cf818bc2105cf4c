#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/genealogy.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace hsmrf {

/// Grid cell boundaries x_1 = 0 < ... < x_{H+1}. Cell h (0-based) is the
/// half-open interval (x_h, x_{h+1}].
struct Grid {
  std::vector<double> boundaries;
  bool final_cell_open = false; // last cell extends beyond the regular spacing

  int cells() const { return static_cast<int>(boundaries.size()) - 1; }
  double end() const { return boundaries.back(); }
  double midpoint(int h) const { return 0.5 * (boundaries[h] + boundaries[h + 1]); }
};

/// Number of grid cells for n sequences: floor(min(0.8 (n-1), 500)), at least 2.
inline int choose_cell_count(int n) {
  if (n < 4)
    throw InputError("choose_cell_count: need n >= 4, got " + std::to_string(n));
  const int rule = (4 * (n - 1)) / 5; // exact floor(0.8 (n-1))
  return std::max(2, std::min(rule, 500));
}

/// Position of the last regular boundary T. The TMRCA is taken to be
/// log-normal with median `median` and lower 95% limit `lo`; returns T with
/// Pr(TMRCA > T) = 1 - alpha_T.
inline double choose_boundary(double median, double lo, double hi, double alpha_T) {
  if (!(lo > 0.0 && lo < median && median < hi))
    throw InputError("choose_boundary: need 0 < lo < median < hi");
  if (!(alpha_T > 0.0 && alpha_T <= 0.5))
    throw InputError("choose_boundary: alpha_T must lie in (0, 0.5]");
  const double log_mu = std::log(median);
  const double log_sd = (log_mu - std::log(lo)) / 1.96;
  const double z = boost::math::quantile(boost::math::normal(), alpha_T);
  return std::exp(log_mu + log_sd * z);
}

/// Regular grid of H cells ending at T. With t_max > T the first H-1 cells
/// split [0, T] evenly and the last cell is (T, t_max].
inline Grid build_grid(int H, double T, std::optional<double> t_max = std::nullopt) {
  if (H < 2)
    throw InputError("build_grid: need H >= 2");
  if (!(T > 0.0) || !std::isfinite(T))
    throw InputError("build_grid: T must be positive");
  if (t_max && !(*t_max > 0.0))
    throw InputError("build_grid: t_max must be positive");
  Grid g;
  g.boundaries.resize(H + 1);
  if (t_max && *t_max > T) {
    for (int i = 0; i < H; ++i) g.boundaries[i] = T * i / (H - 1);
    g.boundaries[H - 1] = T;
    g.boundaries[H] = *t_max;
    g.final_cell_open = true;
  } else {
    for (int i = 0; i <= H; ++i) g.boundaries[i] = T * i / H;
    g.boundaries[H] = T;
  }
  return g;
}

/// Intersection of a lineage interval with a grid cell.
struct Subinterval {
  double start;
  double end;
  int cell;
  double coal_factor;
  bool coalescent_end; // z_d

  double length() const { return end - start; }
};

/// Per-cell sufficient statistics of the discrete likelihood.
struct CellStats {
  double sum_log_coal = 0.0; // sum of z_d log C_d
  int events = 0;            // sum of z_d
  double exposure = 0.0;     // sum of C_d Delta_d
};

struct SubintervalPartition {
  std::vector<Subinterval> subintervals;
  std::vector<CellStats> cells;
  Grid grid; // as used, after any boundary shifts
  int n = 0;
  int m = 0;
  int boundary_shifts = 0;

  int H() const { return static_cast<int>(cells.size()); }
};

/// Splits (0, TMRCA] at every sampling, coalescent and grid time. Interior grid
/// boundaries that coincide with an event are moved 1e-12 T into the past.
inline SubintervalPartition partition(const Genealogy &g, const Grid &grid_in) {
  const double t1 = g.tmrca();
  if (grid_in.end() < t1 && !times_coincide(grid_in.end(), t1))
    throw InputError("partition: grid ends at " + std::to_string(grid_in.end()) +
                     " before the TMRCA " + std::to_string(t1));

  SubintervalPartition p;
  p.grid = grid_in;
  p.n = g.sample_size();
  p.m = g.sampling_events();
  auto &x = p.grid.boundaries;
  const int H = p.grid.cells();
  const double scale = x[H - 1] > 0.0 ? x[H - 1] : x[H];
  const double shift = kTimeTieTolerance * scale;

  std::vector<double> events(g.coal_times());
  events.insert(events.end(), g.schedule().times.begin() + 1, g.schedule().times.end());
  std::sort(events.begin(), events.end());
  for (int h = 1; h < H; ++h) {
    for (double e : events) {
      if (std::abs(x[h] - e) <= shift) {
        x[h] = e + shift;
        ++p.boundary_shifts;
      }
    }
  }
  if (times_coincide(x[H], t1) || x[H] < t1) x[H] = std::max(x[H], t1);
  for (int h = 1; h <= H; ++h)
    if (!(x[h] > x[h - 1]))
      throw InputError("partition: grid boundaries not increasing after collision shifts");

  p.cells.assign(H, {});
  const auto intervals = lineage_intervals(g);
  int h = 0;
  for (const auto &iv : intervals) {
    double start = iv.start;
    while (true) {
      while (h < H - 1 && x[h + 1] <= start) ++h;
      const double cell_end = x[h + 1];
      const bool last_piece = iv.end <= cell_end || h == H - 1;
      const double end = last_piece ? iv.end : cell_end;
      const bool z = last_piece && iv.ends_in == IntervalEnd::Coalescent;
      p.subintervals.push_back({start, end, h, iv.coal_factor, z});
      auto &c = p.cells[h];
      c.exposure += iv.coal_factor * (end - start);
      if (z) {
        c.sum_log_coal += std::log(iv.coal_factor);
        ++c.events;
      }
      if (last_piece) break;
      start = end;
    }
  }
  return p;
}

} // namespace hsmrf
