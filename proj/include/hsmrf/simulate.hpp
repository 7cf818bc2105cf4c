#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/genealogy.hpp"
#include "hsmrf/grid.hpp"
#include "hsmrf/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hsmrf {

enum class Scenario { BN, BB, BE };

inline Scenario parse_scenario(std::string name) {
  for (auto &c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (name == "BN") return Scenario::BN;
  if (name == "BB") return Scenario::BB;
  if (name == "BE") return Scenario::BE;
  throw InputError("unknown scenario '" + name + "' (expected BN, BB or BE; supply NGP as a table)");
}

inline const char *scenario_name(Scenario s) {
  switch (s) {
  case Scenario::BN: return "BN";
  case Scenario::BB: return "BB";
  case Scenario::BE: return "BE";
  }
  return "?";
}

/// Bottleneck, boom-bust and broken-exponential trajectories.
inline double scenario_value(Scenario s, double t) {
  if (t < 0.0)
    throw InputError("scenario: time must be non-negative");
  switch (s) {
  case Scenario::BN:
    return (t >= 4.0 && t <= 6.0) ? 0.1 : 1.0;
  case Scenario::BB:
    return 0.4 + 0.25 * (std::sin((5.5 - t) / 3.0) + 0.75 * std::exp(-2.5 * (t - 5.0) * (t - 5.0)));
  case Scenario::BE:
    if (t < 4.5) return std::exp(-1.20 + 0.09 * t);
    if (t < 5.0) return std::exp(9.09 - 2.20 * t);
    return std::exp(-3.57 + 0.33 * t);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double scenario_value(const std::string &name, double t) {
  return scenario_value(parse_scenario(name), t);
}

/// Simulation settings used for each scenario: total sample size, samples at
/// time 0, sampling horizon S and the last regular grid boundary T.
struct ScenarioSettings {
  int n;
  int n0;
  double S;
  double T;
};

inline ScenarioSettings scenario_settings(Scenario s) {
  switch (s) {
  case Scenario::BN: return {500, 50, 8.0, 8.37};
  case Scenario::BB: return {2000, 50, 11.8, 11.73};
  case Scenario::BE: return {1000, 100, 7.8, 7.86};
  }
  return {};
}

/// Effective population size as a function of backward time.
class Trajectory {
public:
  static Trajectory scenario(Scenario s) {
    Trajectory tr;
    tr.name_ = scenario_name(s);
    tr.fn_ = [s](double t) { return scenario_value(s, t); };
    switch (s) {
    case Scenario::BN: tr.known_min_ = 0.1; break;
    case Scenario::BE: tr.known_min_ = std::exp(-3.57 + 0.33 * 5.0); break;
    case Scenario::BB: break;
    }
    return tr;
  }

  static Trajectory constant(double N) {
    if (!(N > 0.0))
      throw InputError("trajectory: population size must be positive");
    Trajectory tr;
    tr.name_ = "constant";
    tr.fn_ = [N](double) { return N; };
    tr.known_min_ = N;
    return tr;
  }

  /// Piecewise-constant table: values[i] holds on [times[i], times[i+1]),
  /// the last value holds beyond the table. times[0] must be 0.
  static Trajectory tabulated(std::vector<double> times, std::vector<double> values) {
    if (times.empty() || times.size() != values.size())
      throw InputError("trajectory table: need equal-length, non-empty time and value columns");
    if (times.front() != 0.0)
      throw InputError("trajectory table: first time must be 0");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw InputError("trajectory table: population sizes must be positive");
      if (i > 0 && !(times[i] > times[i - 1]))
        throw InputError("trajectory table: times must be strictly increasing");
    }
    Trajectory tr;
    tr.name_ = "table";
    auto t_ptr = std::make_shared<const std::vector<double>>(std::move(times));
    auto v_ptr = std::make_shared<const std::vector<double>>(std::move(values));
    tr.fn_ = [t_ptr, v_ptr](double t) {
      const auto it = std::upper_bound(t_ptr->begin(), t_ptr->end(), t);
      return (*v_ptr)[static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - t_ptr->begin() - 1, 0))];
    };
    tr.table_times_ = t_ptr;
    tr.table_values_ = v_ptr;
    return tr;
  }

  /// Arbitrary positive function; `known_min` is used as a lower-bound hint.
  static Trajectory function(std::function<double(double)> f, std::string name = "function",
                             std::optional<double> known_min = std::nullopt) {
    Trajectory tr;
    tr.name_ = std::move(name);
    tr.fn_ = std::move(f);
    tr.known_min_ = known_min;
    return tr;
  }

  double operator()(double t) const { return fn_(t); }
  const std::string &name() const { return name_; }

  /// Lower bound of N_e on [0, horizon]: minimum over a 10^4-point lattice,
  /// table values and any known minimum.
  double lower_bound(double horizon) const {
    double lo = std::numeric_limits<double>::infinity();
    constexpr int kLattice = 10000;
    for (int i = 0; i <= kLattice; ++i) lo = std::min(lo, fn_(horizon * i / kLattice));
    if (known_min_) lo = std::min(lo, *known_min_);
    if (table_values_)
      for (std::size_t i = 0; i < table_values_->size(); ++i)
        if ((*table_times_)[i] <= horizon) lo = std::min(lo, (*table_values_)[i]);
    if (!(lo > 0.0) || !std::isfinite(lo))
      throw InputError("trajectory '" + name_ + "' is not bounded below by a positive value");
    return lo;
  }

private:
  std::string name_;
  std::function<double(double)> fn_;
  std::optional<double> known_min_;
  std::shared_ptr<const std::vector<double>> table_times_, table_values_;
};

/// n0 samples at time 0 plus n_rest sampling times uniform on [0, S].
inline SamplingSchedule sample_schedule(int n0, int n_rest, double S, Engine &rng) {
  if (n0 < 1 || n_rest < 0 || n0 + n_rest < 2)
    throw InputError("sample_schedule: need n0 >= 1 and n0 + n_rest >= 2");
  if (n_rest > 0 && !(S > 0.0))
    throw InputError("sample_schedule: S must be positive");
  std::vector<double> times(n0, 0.0);
  std::uniform_real_distribution<double> unif(0.0, S);
  for (int i = 0; i < n_rest; ++i) times.push_back(unif(rng));
  return SamplingSchedule::from_sample_times(std::move(times));
}

struct SimulationOptions {
  double horizon_cap = 1000.0; // give up if the process runs past this time
};

/// Simulated data set: the tree (random topology, tips labelled s1..sn in
/// sampling-time order) and its genealogy.
struct SimulatedTree {
  Tree tree;
  Genealogy genealogy;
};

/// Coalescent with time-varying N_e by thinning: with k lineages, candidate
/// events arrive at rate C(k,2) / N_min and are accepted with probability
/// N_min / N_e(t). Sampling events add lineages.
inline SimulatedTree simulate_coalescent(const SamplingSchedule &schedule, const Trajectory &traj,
                                         Engine &rng, const SimulationOptions &opt = {}) {
  schedule.validate();
  const double n_min = traj.lower_bound(opt.horizon_cap);

  Tree tree;
  std::vector<int> active;
  int tip_counter = 0;
  auto add_tips = [&](std::size_t idx) {
    for (int c = 0; c < schedule.counts[idx]; ++c) {
      Tree::Node nd;
      nd.age = schedule.times[idx];
      nd.label = "s" + std::to_string(++tip_counter);
      tree.nodes.push_back(nd);
      active.push_back(static_cast<int>(tree.nodes.size()) - 1);
    }
  };

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  add_tips(0);
  std::size_t next = 1;
  double t = 0.0;
  while (true) {
    const std::size_t k = active.size();
    const double next_sample =
        next < schedule.times.size() ? schedule.times[next] : std::numeric_limits<double>::infinity();
    if (k < 2) {
      if (next >= schedule.times.size()) break;
      t = next_sample;
      add_tips(next++);
      continue;
    }
    const double rate = choose2(static_cast<int>(k)) / n_min;
    const double proposal = t + std::exponential_distribution<double>(rate)(rng);
    if (proposal >= next_sample) {
      t = next_sample;
      add_tips(next++);
      continue;
    }
    if (proposal > opt.horizon_cap)
      throw RuntimeError("simulate_coalescent: exceeded horizon cap " + std::to_string(opt.horizon_cap));
    const double ne = traj(proposal);
    if (!(ne >= n_min * (1.0 - 1e-12)))
      throw RuntimeError("simulate_coalescent: N_e(" + std::to_string(proposal) +
                         ") is below the thinning bound");
    t = proposal;
    if (unif(rng) * ne < n_min) {
      const std::size_t a = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
      std::size_t b = std::uniform_int_distribution<std::size_t>(0, k - 2)(rng);
      if (b >= a) ++b;
      Tree::Node parent;
      parent.age = t;
      parent.children = {active[a], active[b]};
      tree.nodes.push_back(parent);
      const int pid = static_cast<int>(tree.nodes.size()) - 1;
      tree.nodes[active[a]].parent = pid;
      tree.nodes[active[b]].parent = pid;
      active[std::max(a, b)] = active.back();
      active.pop_back();
      active[std::min(a, b)] = pid;
    }
  }
  tree.root = active.front();
  Genealogy g = tree.genealogy();
  return {std::move(tree), std::move(g)};
}

/// True log N_e evaluated at each cell midpoint.
inline Eigen::VectorXd true_field(const Trajectory &traj, const Grid &grid) {
  Eigen::VectorXd theta(grid.cells());
  for (int h = 0; h < grid.cells(); ++h) theta[h] = std::log(traj(grid.midpoint(h)));
  return theta;
}

} // namespace hsmrf
