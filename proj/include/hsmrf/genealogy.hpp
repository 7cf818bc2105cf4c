#pragma once

#include "hsmrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace hsmrf {

/// Relative tolerance used to decide that two event times coincide.
inline constexpr double kTimeTieTolerance = 1e-12;

inline bool times_coincide(double a, double b) {
  return std::abs(a - b) <= kTimeTieTolerance * std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Unique sampling times measured backward from the most recent sample,
/// ascending from 0, with the number of samples taken at each.
struct SamplingSchedule {
  std::vector<double> times;
  std::vector<int> counts;

  int total() const { return std::accumulate(counts.begin(), counts.end(), 0); }
  int unique_times() const { return static_cast<int>(times.size()); }

  void validate() const {
    if (times.empty() || times.size() != counts.size())
      throw InputError("sampling schedule: times and counts must be non-empty and equal length");
    if (times.front() != 0.0)
      throw InputError("sampling schedule: first sampling time must be 0");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw InputError("sampling schedule: times must be strictly increasing");
    for (int c : counts)
      if (c < 1)
        throw InputError("sampling schedule: counts must be >= 1");
    if (total() < 2)
      throw InputError("sampling schedule: need at least 2 samples");
  }

  /// Groups raw per-sample times (any order) into a schedule. Times are shifted
  /// so the most recent sample is at 0; near-equal times are merged.
  static SamplingSchedule from_sample_times(std::vector<double> raw) {
    if (raw.empty())
      throw InputError("sampling schedule: no samples");
    std::sort(raw.begin(), raw.end());
    const double origin = raw.front();
    SamplingSchedule s;
    for (double t : raw) {
      const double shifted = t - origin;
      if (!s.times.empty() && times_coincide(s.times.back(), shifted)) {
        ++s.counts.back();
      } else {
        s.times.push_back(s.times.empty() ? 0.0 : shifted);
        s.counts.push_back(1);
      }
    }
    s.validate();
    return s;
  }
};

enum class IntervalEnd { Coalescent, Sampling };

/// One maximal interval with a constant number of lineages.
struct LineageInterval {
  double start;
  double end;
  int lineages;
  double coal_factor; // lineages choose 2
  IntervalEnd ends_in;

  double length() const { return end - start; }
};

using LineageIntervals = std::vector<LineageInterval>;

inline double choose2(int k) { return 0.5 * static_cast<double>(k) * static_cast<double>(k - 1); }

namespace detail {

/// Replays sampling/coalescent events from the present into the past and
/// emits the lineage intervals. Throws if the lineage count would become
/// invalid. Shared by Genealogy validation and lineage_intervals().
inline LineageIntervals replay(const SamplingSchedule &s, const std::vector<double> &coal) {
  LineageIntervals out;
  out.reserve(coal.size() + s.times.size());
  int k = s.counts.front();
  double t = 0.0;
  std::size_t si = 1, ci = 0;
  while (ci < coal.size()) {
    const bool next_is_sample = si < s.times.size() && s.times[si] < coal[ci];
    const double next = next_is_sample ? s.times[si] : coal[ci];
    out.push_back({t, next, k, choose2(k),
                   next_is_sample ? IntervalEnd::Sampling : IntervalEnd::Coalescent});
    if (next_is_sample) {
      k += s.counts[si++];
    } else {
      if (k < 2)
        throw InputError("genealogy: coalescent event at time " + std::to_string(next) +
                         " with fewer than 2 lineages");
      --k;
      ++ci;
    }
    t = next;
  }
  if (si != s.times.size())
    throw InputError("genealogy: sampling time after the root (TMRCA)");
  if (k != 1)
    throw InputError("genealogy: " + std::to_string(k) + " lineages remain after the last coalescence");
  return out;
}

} // namespace detail

/// A dated genealogy reduced to what the coalescent density needs: the
/// sampling schedule and the n-1 coalescent times (ascending, so the TMRCA
/// is the last element).
class Genealogy {
public:
  Genealogy(SamplingSchedule schedule, std::vector<double> coal_times)
      : schedule_(std::move(schedule)), coal_times_(std::move(coal_times)) {
    validate();
  }

  const SamplingSchedule &schedule() const { return schedule_; }
  const std::vector<double> &coal_times() const { return coal_times_; }
  int sample_size() const { return schedule_.total(); }
  int sampling_events() const { return schedule_.unique_times(); }
  double tmrca() const { return coal_times_.back(); }

  /// Copy with every time multiplied by `factor`.
  Genealogy scaled(double factor) const {
    SamplingSchedule s = schedule_;
    for (auto &t : s.times) t *= factor;
    std::vector<double> c = coal_times_;
    for (auto &t : c) t *= factor;
    return Genealogy(std::move(s), std::move(c));
  }

private:
  void validate() const {
    schedule_.validate();
    const int n = schedule_.total();
    if (static_cast<int>(coal_times_.size()) != n - 1)
      throw InputError("genealogy: expected " + std::to_string(n - 1) + " coalescent times, got " +
                       std::to_string(coal_times_.size()));
    for (std::size_t i = 0; i < coal_times_.size(); ++i) {
      if (!std::isfinite(coal_times_[i]) || coal_times_[i] <= 0.0)
        throw InputError("genealogy: coalescent times must be finite and positive");
      if (i > 0 && !(coal_times_[i] > coal_times_[i - 1]))
        throw InputError("genealogy: coalescent times must be strictly increasing");
    }
    std::size_t si = 0;
    for (double c : coal_times_) {
      while (si < schedule_.times.size() && schedule_.times[si] < c) ++si;
      for (std::size_t j : {si == 0 ? si : si - 1, si})
        if (j < schedule_.times.size() && times_coincide(schedule_.times[j], c))
          throw InputError("genealogy: coalescent time " + std::to_string(c) +
                           " coincides with a sampling time");
    }
    if (!(tmrca() > schedule_.times.back()))
      throw InputError("genealogy: TMRCA must be older than the oldest sample");
    detail::replay(schedule_, coal_times_);
  }

  SamplingSchedule schedule_;
  std::vector<double> coal_times_;
};

/// Interval/lineage-count decomposition ordered from the present into the
/// past. Intervals tile (0, TMRCA].
inline LineageIntervals lineage_intervals(const Genealogy &g) {
  return detail::replay(g.schedule(), g.coal_times());
}

/// Rooted binary tree with node ages (backward time). Nodes are stored in a
/// flat vector; the root has parent -1. Used for Newick input and output.
struct Tree {
  struct Node {
    int parent = -1;
    std::vector<int> children;
    std::string label;
    double age = 0.0;
  };

  std::vector<Node> nodes;
  int root = -1;

  bool is_tip(int i) const { return nodes[i].children.empty(); }

  std::vector<int> tips() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
      if (is_tip(i)) out.push_back(i);
    return out;
  }

  /// Genealogy implied by the node ages. Tip ages become sampling times.
  Genealogy genealogy() const {
    std::vector<double> tip_ages, internal_ages;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
      (is_tip(i) ? tip_ages : internal_ages).push_back(nodes[i].age);
    const double origin = *std::min_element(tip_ages.begin(), tip_ages.end());
    for (auto &a : internal_ages) a -= origin;
    std::sort(internal_ages.begin(), internal_ages.end());
    return Genealogy(SamplingSchedule::from_sample_times(tip_ages), internal_ages);
  }
};

} // namespace hsmrf
