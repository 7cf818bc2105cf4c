#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/field_prior.hpp"
#include "hsmrf/sampler.hpp"
#include "hsmrf/steppingstone.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hsmrf {

inline constexpr double kDefaultAlphaT = 0.001;

/// Everything a run needs, as one JSON document. Optional fields left unset
/// are resolved from the data (grid size, boundary, mu, sigma, zeta).
struct RunConfig {
  // model
  std::string model = "H1";
  std::vector<std::string> models = {"G1", "G2", "H1", "H2"};
  std::optional<double> mu, sigma, zeta;
  double zeta_alpha = 0.05;

  // grid
  std::optional<int> H;
  std::optional<double> T;
  std::optional<double> tmrca_median, tmrca_lo, tmrca_hi;
  double alpha_T = kDefaultAlphaT;

  ChainConfig chain;

  // data
  std::string tree, dates;
  bool dates_forward = false;

  // simulation and study
  std::string scenario = "BN";
  std::string trajectory; // CSV time,Ne; overrides scenario when set
  int reps = 100;
  std::optional<int> n, n0;
  std::optional<double> S;

  // model comparison
  int stones = kDefaultStones;
  double beta_shape = kDefaultBetaShape;

  std::string out;

  void validate() const {
    FieldModel::from_code(model);
    for (const auto &m : models) FieldModel::from_code(m);
    if (models.empty()) throw ConfigError("config: models must not be empty");
    if (H && *H < 2) throw ConfigError("config: H must be at least 2");
    if (T && !(*T > 0.0)) throw ConfigError("config: T must be positive");
    if (!(alpha_T > 0.0 && alpha_T <= 0.5)) throw ConfigError("config: alpha_T must lie in (0, 0.5]");
    if (!(zeta_alpha > 0.0 && zeta_alpha < 1.0)) throw ConfigError("config: zeta_alpha must lie in (0, 1)");
    if (sigma && !(*sigma > 0.0)) throw ConfigError("config: sigma must be positive");
    if (zeta && !(*zeta > 0.0)) throw ConfigError("config: zeta must be positive");
    if (reps < 1) throw ConfigError("config: reps must be positive");
    if (stones < 2) throw ConfigError("config: stones must be at least 2");
    if (!(beta_shape > 0.0)) throw ConfigError("config: beta_shape must be positive");
    const bool any_tmrca = tmrca_median || tmrca_lo || tmrca_hi;
    const bool all_tmrca = tmrca_median && tmrca_lo && tmrca_hi;
    if (any_tmrca && !all_tmrca)
      throw ConfigError("config: tmrca_median and tmrca_ci must be given together");
    try {
      chain.validate();
    } catch (const InputError &e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

template <class T>
void read_field(const nlohmann::json &j, const char *key, T &dst) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

template <class T>
void read_field(const nlohmann::json &j, const char *key, std::optional<T> &dst) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read_field(j, key, v);
  dst = v;
}

inline void reject_unknown(const nlohmann::json &j, const std::set<std::string> &known, const std::string &where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be a JSON object");
  for (const auto &item : j.items())
    if (!known.count(item.key())) throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
}

template <class T>
void write_optional(nlohmann::json &j, const char *key, const std::optional<T> &v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

} // namespace detail

inline nlohmann::json to_json(const ChainConfig &c) {
  return {{"n_burnin", c.n_burnin}, {"n_samples", c.n_samples}, {"thin", c.thin},
          {"n_chains", c.n_chains}, {"seed", c.seed},           {"jobs", c.jobs}};
}

inline ChainConfig chain_config_from_json(const nlohmann::json &j) {
  detail::reject_unknown(j, {"n_burnin", "n_samples", "thin", "n_chains", "seed", "jobs"}, "chain");
  ChainConfig c;
  detail::read_field(j, "n_burnin", c.n_burnin);
  detail::read_field(j, "n_samples", c.n_samples);
  detail::read_field(j, "thin", c.thin);
  detail::read_field(j, "n_chains", c.n_chains);
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "jobs", c.jobs);
  return c;
}

inline nlohmann::json to_json(const RunConfig &c) {
  nlohmann::json j;
  j["model"] = c.model;
  j["models"] = c.models;
  detail::write_optional(j, "mu", c.mu);
  detail::write_optional(j, "sigma", c.sigma);
  detail::write_optional(j, "zeta", c.zeta);
  j["zeta_alpha"] = c.zeta_alpha;
  detail::write_optional(j, "H", c.H);
  detail::write_optional(j, "T", c.T);
  detail::write_optional(j, "tmrca_median", c.tmrca_median);
  j["tmrca_ci"] = c.tmrca_lo && c.tmrca_hi ? nlohmann::json::array({*c.tmrca_lo, *c.tmrca_hi}) : nlohmann::json(nullptr);
  j["alpha_T"] = c.alpha_T;
  j["chain"] = to_json(c.chain);
  j["tree"] = c.tree;
  j["dates"] = c.dates;
  j["dates_forward"] = c.dates_forward;
  j["scenario"] = c.scenario;
  j["trajectory"] = c.trajectory;
  j["reps"] = c.reps;
  detail::write_optional(j, "n", c.n);
  detail::write_optional(j, "n0", c.n0);
  detail::write_optional(j, "S", c.S);
  j["stones"] = c.stones;
  j["beta_shape"] = c.beta_shape;
  j["out"] = c.out;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json &j) {
  detail::reject_unknown(j,
                         {"model", "models", "mu", "sigma", "zeta", "zeta_alpha", "H", "T", "tmrca_median",
                          "tmrca_ci", "alpha_T", "chain", "tree", "dates", "dates_forward",
                          "scenario", "trajectory", "reps", "n", "n0", "S", "stones", "beta_shape", "out"},
                         "config");
  RunConfig c;
  detail::read_field(j, "model", c.model);
  detail::read_field(j, "models", c.models);
  detail::read_field(j, "mu", c.mu);
  detail::read_field(j, "sigma", c.sigma);
  detail::read_field(j, "zeta", c.zeta);
  detail::read_field(j, "zeta_alpha", c.zeta_alpha);
  detail::read_field(j, "H", c.H);
  detail::read_field(j, "T", c.T);
  detail::read_field(j, "tmrca_median", c.tmrca_median);
  std::optional<std::vector<double>> ci;
  detail::read_field(j, "tmrca_ci", ci);
  if (ci) {
    if (ci->size() != 2) throw ConfigError("config: tmrca_ci must be [lo, hi]");
    c.tmrca_lo = (*ci)[0];
    c.tmrca_hi = (*ci)[1];
  }
  detail::read_field(j, "alpha_T", c.alpha_T);
  if (j.contains("chain")) c.chain = chain_config_from_json(j.at("chain"));
  detail::read_field(j, "tree", c.tree);
  detail::read_field(j, "dates", c.dates);
  detail::read_field(j, "dates_forward", c.dates_forward);
  detail::read_field(j, "scenario", c.scenario);
  detail::read_field(j, "trajectory", c.trajectory);
  detail::read_field(j, "reps", c.reps);
  detail::read_field(j, "n", c.n);
  detail::read_field(j, "n0", c.n0);
  detail::read_field(j, "S", c.S);
  detail::read_field(j, "stones", c.stones);
  detail::read_field(j, "beta_shape", c.beta_shape);
  detail::read_field(j, "out", c.out);
  c.validate();
  return c;
}

inline RunConfig parse_config(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

} // namespace hsmrf
