// hsmrf command-line front end.
#include "hsmrf/calibration.hpp"
#include "hsmrf/coalescent.hpp"
#include "hsmrf/config.hpp"
#include "hsmrf/error.hpp"
#include "hsmrf/evaluate.hpp"
#include "hsmrf/grid.hpp"
#include "hsmrf/io.hpp"
#include "hsmrf/newick.hpp"
#include "hsmrf/simulate.hpp"
#include "hsmrf/steppingstone.hpp"
#include "hsmrf/study.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using hsmrf::json;

namespace {

#ifndef HSMRF_VERSION
#define HSMRF_VERSION "unknown"
#endif

/// Flags that override fields of the JSON config.
struct Overrides {
  std::string config_path;
  std::optional<std::string> model, tree, dates, scenario, trajectory, out;
  std::optional<std::vector<std::string>> models;
  std::optional<double> mu, sigma, zeta, zeta_alpha, T, alpha_T, tmrca_median, S, beta_shape;
  std::optional<std::vector<double>> tmrca_ci;
  std::optional<int> H, reps, n, n0, stones;
  std::optional<int> burnin, samples, thin, chains, jobs;
  std::optional<std::uint64_t> seed;
  bool dates_forward = false;

  void add_data(CLI::App *app) {
    app->add_option("--tree", tree, "Newick file");
    app->add_option("--dates", dates, "tip dates CSV (label,time)");
    app->add_flag("--dates-forward", dates_forward, "dates are forward (calendar) times");
  }
  void add_model(CLI::App *app) {
    app->add_option("--model", model, "G1, G2, H1 or H2");
    app->add_option("--mu", mu, "prior mean of theta_1");
    app->add_option("--sigma", sigma, "prior sd of theta_1");
    app->add_option("--zeta", zeta, "global scale hyperparameter");
    app->add_option("--zeta-alpha", zeta_alpha, "calibration tail probability");
  }
  void add_grid(CLI::App *app) {
    app->add_option("--H", H, "number of grid cells");
    app->add_option("--T", T, "last regular grid boundary");
    app->add_option("--alpha-T", alpha_T, "TMRCA quantile for the boundary rule");
    app->add_option("--tmrca-median", tmrca_median, "TMRCA median for the boundary rule");
    app->add_option("--tmrca-ci", tmrca_ci, "TMRCA 95% interval (lo hi)")->expected(2);
  }
  void add_chain(CLI::App *app) {
    app->add_option("--burnin", burnin, "burn-in iterations per chain");
    app->add_option("--samples", samples, "retained draws per chain");
    app->add_option("--thin", thin, "iterations per retained draw");
    app->add_option("--chains", chains, "number of chains");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--jobs", jobs, "worker threads");
  }
  void add_sim(CLI::App *app) {
    app->add_option("--scenario", scenario, "BN, BB or BE");
    app->add_option("--trajectory", trajectory, "tabulated N_e CSV (time,Ne)");
    app->add_option("--reps", reps, "replicates");
    app->add_option("--n", n, "total samples");
    app->add_option("--n0", n0, "samples at time 0");
    app->add_option("--S", S, "sampling horizon");
  }
  void add_common(CLI::App *app) {
    app->add_option("--config", config_path, "JSON run config (or a run manifest)");
    app->add_option("--out", out, "output directory");
  }

  hsmrf::RunConfig resolve() const {
    hsmrf::RunConfig c;
    if (!config_path.empty()) {
      json j;
      try {
        j = json::parse(hsmrf::read_text_file(config_path));
      } catch (const json::parse_error &e) {
        throw hsmrf::ConfigError(std::string("config: invalid JSON: ") + e.what());
      }
      if (j.is_object() && j.contains("config") && j.contains("version")) j = j.at("config");
      c = hsmrf::config_from_json(j);
    }
    if (model) c.model = *model;
    if (models) c.models = *models;
    if (tree) c.tree = *tree;
    if (dates) c.dates = *dates;
    if (dates_forward) c.dates_forward = true;
    if (scenario) c.scenario = *scenario;
    if (trajectory) c.trajectory = *trajectory;
    if (out) c.out = *out;
    if (mu) c.mu = mu;
    if (sigma) c.sigma = sigma;
    if (zeta) c.zeta = zeta;
    if (zeta_alpha) c.zeta_alpha = *zeta_alpha;
    if (H) c.H = H;
    if (T) c.T = T;
    if (alpha_T) c.alpha_T = *alpha_T;
    if (tmrca_median) c.tmrca_median = tmrca_median;
    if (tmrca_ci) {
      c.tmrca_lo = (*tmrca_ci)[0];
      c.tmrca_hi = (*tmrca_ci)[1];
    }
    if (S) c.S = S;
    if (beta_shape) c.beta_shape = *beta_shape;
    if (reps) c.reps = *reps;
    if (n) c.n = n;
    if (n0) c.n0 = n0;
    if (stones) c.stones = *stones;
    if (burnin) c.chain.n_burnin = *burnin;
    if (samples) c.chain.n_samples = *samples;
    if (thin) c.chain.thin = *thin;
    if (chains) c.chain.n_chains = *chains;
    if (jobs) c.chain.jobs = *jobs;
    if (seed) c.chain.seed = *seed;
    if (c.out.empty()) {
      const char *env = std::getenv("HSMRF_OUT_DIR");
      c.out = env && *env ? env : ".";
    }
    c.validate();
    return c;
  }
};

hsmrf::Genealogy load_genealogy(const hsmrf::RunConfig &c) {
  if (c.tree.empty()) throw hsmrf::ConfigError("missing --tree");
  if (c.dates.empty()) throw hsmrf::ConfigError("missing --dates");
  std::ifstream din(c.dates);
  if (!din) throw hsmrf::InputError("cannot open " + c.dates);
  return hsmrf::parse_newick(hsmrf::read_text_file(c.tree), hsmrf::read_dates_csv(din, c.dates_forward));
}

std::optional<hsmrf::Trajectory> load_table(const hsmrf::RunConfig &c) {
  if (c.trajectory.empty()) return std::nullopt;
  const auto t = hsmrf::read_csv_file(c.trajectory);
  return hsmrf::Trajectory::tabulated(t.numeric_column("time"), t.numeric_column("Ne"));
}

std::string absolute(const std::string &p) { return p.empty() ? p : fs::absolute(p).string(); }

json model_json(const hsmrf::FieldModel &m) {
  return {{"code", m.code()}, {"name", m.name()}, {"mu", m.mu}, {"sigma", m.sigma}, {"zeta", m.zeta}};
}

std::string fmt(double v) { return hsmrf::format_double(v); }

std::string fmt_opt(const std::optional<double> &v) { return v ? fmt(*v) : std::string("NA"); }

// simulate ----------------------------------------------------------------

int cmd_simulate(const Overrides &o) {
  const hsmrf::RunConfig c = o.resolve();
  const hsmrf::StudyDesign d = hsmrf::study_design(c, load_table(c));
  const fs::path out = c.out;
  fs::create_directories(out);
  for (int r = 0; r < c.reps; ++r) {
    const auto rep = hsmrf::simulate_replicate(d, c.chain.seed, r);
    std::ostringstream stem;
    stem << "rep_" << std::setw(3) << std::setfill('0') << r;
    hsmrf::write_text_file(out / (stem.str() + ".nwk"), hsmrf::to_newick(rep.data.tree) + "\n");
    auto dates = hsmrf::open_output(out / (stem.str() + "_dates.csv"));
    hsmrf::write_dates_csv(dates, rep.data.tree);
    auto truth = hsmrf::open_output(out / (stem.str() + "_truth.csv"));
    hsmrf::write_truth_csv(truth, rep.grid, rep.truth);
  }
  json manifest = {{"version", HSMRF_VERSION},
                   {"seed", c.chain.seed},
                   {"config", hsmrf::to_json(c)},
                   {"design", {{"n", d.n}, {"n0", d.n0}, {"S", d.S}, {"T", d.T}, {"H", d.H},
                               {"trajectory", d.trajectory.name()}}}};
  hsmrf::write_text_file(out / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

// calibrate / skyline -------------------------------------------------------

int cmd_calibrate(const Overrides &o) {
  const hsmrf::RunConfig c = o.resolve();
  const hsmrf::Genealogy g = load_genealogy(c);
  const hsmrf::Grid grid = hsmrf::resolve_grid(c, g);
  hsmrf::RunConfig no_zeta = c;
  no_zeta.zeta.reset();
  std::optional<hsmrf::Calibration> cal;
  const hsmrf::FieldModel m = hsmrf::resolve_model(c.model, no_zeta, g, grid.cells(), &cal);
  const json j = {{"U", cal->U},      {"sigma_ref", cal->sigma_ref}, {"zeta", cal->zeta},
                  {"model", m.code()}, {"H", grid.cells()},           {"alpha", c.zeta_alpha}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_skyline(const Overrides &o, const std::optional<std::string> &file) {
  const hsmrf::RunConfig c = o.resolve();
  const auto sky = hsmrf::classic_skyline(load_genealogy(c));
  std::ostringstream os;
  os << "k,start,end,estimate\n";
  const std::size_t K = sky.size();
  for (std::size_t i = 0; i < K; ++i)
    os << K - i << ',' << fmt(sky.start[i]) << ',' << fmt(sky.end[i]) << ',' << fmt(sky.estimate[i]) << '\n';
  if (file) hsmrf::write_text_file(*file, os.str());
  else std::cout << os.str();
  return 0;
}

// fit ------------------------------------------------------------------------

int cmd_fit(const Overrides &o) {
  hsmrf::RunConfig c = o.resolve();
  c.tree = absolute(c.tree);
  c.dates = absolute(c.dates);
  const hsmrf::Genealogy g = load_genealogy(c);
  const hsmrf::Grid grid = hsmrf::resolve_grid(c, g);
  const hsmrf::FitResult fr = hsmrf::fit_model(g, grid, c.model, c, c.chain);

  // The manifest records resolved values so the run reproduces from it alone.
  hsmrf::RunConfig resolved = c;
  resolved.H = grid.cells();
  resolved.T = grid.final_cell_open ? grid.boundaries[grid.cells() - 1] : grid.end();
  resolved.tmrca_median.reset();
  resolved.tmrca_lo.reset();
  resolved.tmrca_hi.reset();
  resolved.mu = fr.model.mu;
  resolved.sigma = fr.model.sigma;
  resolved.zeta = fr.model.zeta;

  const fs::path out = c.out;
  fs::create_directories(out);
  {
    auto os = hsmrf::open_output(out / "posterior.csv");
    hsmrf::write_posterior_csv(os, fr.chains);
  }
  json summary = hsmrf::summary_json(fr.summary);
  summary["model"] = model_json(fr.model);
  json diag = json::array();
  for (const auto &ch : fr.chains) {
    json eta = json::array();
    std::vector<double> ess;
    for (int h = 0; h < ch.theta.cols() && ch.theta.rows() >= 10; ++h) {
      const Eigen::VectorXd col = ch.theta.col(h);
      ess.push_back(hsmrf::mcmc_ess(std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))));
    }
    double mean_ess = 0.0;
    for (double e : ess) mean_ess += e;
    diag.push_back({{"chain", ch.chain},
                    {"iterations", ch.diagnostics.iterations},
                    {"shrinks", ch.diagnostics.shrinks},
                    {"max_shrinks", ch.diagnostics.max_shrinks},
                    {"mean_ess_theta", ess.empty() ? json(nullptr) : json(mean_ess / ess.size())}});
  }
  summary["diagnostics"] = diag;
  hsmrf::write_text_file(out / "summary.json", summary.dump(2) + "\n");

  json manifest = {{"version", HSMRF_VERSION},
                   {"seed", c.chain.seed},
                   {"config", hsmrf::to_json(resolved)},
                   {"grid", hsmrf::grid_json(grid)},
                   {"model", model_json(fr.model)}};
  if (fr.calibration)
    manifest["calibration"] = {{"U", fr.calibration->U},
                               {"sigma_ref", fr.calibration->sigma_ref},
                               {"zeta", fr.calibration->zeta}};
  hsmrf::write_text_file(out / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

// evaluate ---------------------------------------------------------------------

hsmrf::PosteriorChain load_posterior(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw hsmrf::InputError("cannot open " + path);
  return hsmrf::merge_chains(hsmrf::read_posterior_csv(in));
}

int cmd_evaluate(const Overrides &o, const std::vector<std::string> &posteriors,
                 const std::vector<std::string> &truths) {
  const hsmrf::RunConfig c = o.resolve();
  if (posteriors.empty()) throw hsmrf::ConfigError("evaluate: give at least one --posterior");
  if (!truths.empty() && truths.size() != 1 && truths.size() != posteriors.size())
    throw hsmrf::ConfigError("evaluate: give one --truth, or one per --posterior");

  std::ostringstream rows;
  rows << "posterior,MAD,MCIW,Env,MASV,TMASV,p_eff,WAIC\n";
  std::vector<hsmrf::Metrics> all;
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    std::optional<Eigen::VectorXd> truth;
    if (!truths.empty()) {
      std::ifstream tin(truths.size() == 1 ? truths[0] : truths[i]);
      if (!tin) throw hsmrf::InputError("cannot open " + (truths.size() == 1 ? truths[0] : truths[i]));
      truth = hsmrf::read_truth_csv(tin);
    }
    const auto m = hsmrf::metrics(load_posterior(posteriors[i]), truth).metrics;
    all.push_back(m);
    rows << posteriors[i] << ',' << fmt_opt(m.MAD) << ',' << fmt(m.MCIW) << ',' << fmt_opt(m.Envelope) << ','
         << fmt(m.MASV) << ',' << fmt_opt(m.TMASV) << ',' << fmt(m.p_eff) << ',' << fmt(m.WAIC) << '\n';
  }
  const fs::path out = c.out;
  hsmrf::write_text_file(out / "metrics.csv", rows.str());

  auto mean_of = [&](auto get) {
    double s = 0.0;
    int k = 0;
    for (const auto &m : all)
      if (auto v = get(m)) {
        s += *v;
        ++k;
      }
    return k ? std::optional<double>(s / k) : std::nullopt;
  };
  std::ostringstream summary;
  summary << "n,MAD,MCIW,Env,MASV,TMASV,p_eff,WAIC\n"
          << all.size() << ',' << fmt_opt(mean_of([](const auto &m) { return m.MAD; })) << ','
          << fmt_opt(mean_of([](const auto &m) { return std::optional<double>(m.MCIW); })) << ','
          << fmt_opt(mean_of([](const auto &m) { return m.Envelope; })) << ','
          << fmt_opt(mean_of([](const auto &m) { return std::optional<double>(m.MASV); })) << ','
          << fmt_opt(mean_of([](const auto &m) { return m.TMASV; })) << ','
          << fmt_opt(mean_of([](const auto &m) { return std::optional<double>(m.p_eff); })) << ','
          << fmt_opt(mean_of([](const auto &m) { return std::optional<double>(m.WAIC); })) << '\n';
  hsmrf::write_text_file(out / "summary.csv", summary.str());
  return 0;
}

// compare ------------------------------------------------------------------------

int cmd_compare(const Overrides &o, const std::vector<std::string> &posteriors,
                const std::vector<std::string> &names, const std::vector<double> &prior_odds) {
  const hsmrf::RunConfig c = o.resolve();
  const fs::path out = c.out;
  fs::create_directories(out);
  json j;
  std::ostringstream csv;

  if (!posteriors.empty()) {
    if (!names.empty() && names.size() != posteriors.size())
      throw hsmrf::ConfigError("compare: --names must match --posterior count");
    std::vector<Eigen::MatrixXd> pw;
    for (const auto &p : posteriors) pw.push_back(load_posterior(p).pointwise);
    const auto w = hsmrf::waic_weights(pw);
    csv << "model,WAIC,lppd,p_waic,dWAIC,weight\n";
    j["method"] = "waic";
    j["models"] = json::array();
    for (std::size_t m = 0; m < w.size(); ++m) {
      const std::string name = names.empty() ? posteriors[m] : names[m];
      csv << name << ',' << fmt(w[m].waic.waic) << ',' << fmt(w[m].waic.lppd) << ',' << fmt(w[m].waic.p_waic)
          << ',' << fmt(w[m].delta) << ',' << fmt(w[m].weight) << '\n';
      j["models"].push_back({{"model", name},
                             {"WAIC", w[m].waic.waic},
                             {"lppd", w[m].waic.lppd},
                             {"p_waic", w[m].waic.p_waic},
                             {"dWAIC", w[m].delta},
                             {"weight", w[m].weight}});
    }
  } else {
    const hsmrf::Genealogy g = load_genealogy(c);
    const hsmrf::Grid grid = hsmrf::resolve_grid(c, g);
    const hsmrf::SubintervalPartition part = hsmrf::partition(g, grid);
    const hsmrf::CoalescentLikelihood lik(part);
    std::vector<double> log_ml;
    std::vector<std::string> codes;
    for (std::size_t m = 0; m < c.models.size(); ++m) {
      const hsmrf::FieldModel fm = hsmrf::resolve_model(c.models[m], c, g, grid.cells());
      hsmrf::ChainConfig cc = c.chain;
      cc.seed = hsmrf::derive_seed(c.chain.seed, {3, hsmrf::model_stream(c.models[m])});
      log_ml.push_back(hsmrf::steppingstone(fm, lik, cc, c.stones, c.beta_shape).log_ml);
      codes.push_back(fm.code());
    }
    const auto prob = hsmrf::model_probabilities(log_ml, prior_odds);
    csv << "model,logML,logBF,probability\n";
    j["method"] = "steppingstone";
    j["stones"] = c.stones;
    j["beta_shape"] = c.beta_shape;
    j["models"] = json::array();
    for (std::size_t m = 0; m < log_ml.size(); ++m) {
      csv << codes[m] << ',' << fmt(log_ml[m]) << ',' << fmt(log_ml[m] - log_ml[0]) << ',' << fmt(prob[m]) << '\n';
      j["models"].push_back({{"model", codes[m]},
                             {"logML", log_ml[m]},
                             {"logBF", log_ml[m] - log_ml[0]},
                             {"probability", prob[m]}});
    }
  }
  hsmrf::write_text_file(out / "compare.csv", csv.str());
  hsmrf::write_text_file(out / "compare.json", j.dump(2) + "\n");
  return 0;
}

// study ------------------------------------------------------------------------

int cmd_study(const Overrides &o) {
  const hsmrf::RunConfig c = o.resolve();
  const hsmrf::StudyDesign d = hsmrf::study_design(c, load_table(c));
  const hsmrf::StudyResult res = hsmrf::run_study(c, d);
  const fs::path out = c.out;
  fs::create_directories(out);

  std::ostringstream summary;
  summary << "model,n_ok,MAD,MCIW,Env,MASV,TMASV,p_eff\n";
  for (const auto &r : res.summary)
    summary << r.model << ',' << r.n_ok << ',' << fmt(r.MAD) << ',' << fmt(r.MCIW) << ',' << fmt(r.Env) << ','
            << fmt(r.MASV) << ',' << fmt(r.TMASV) << ',' << fmt(r.p_eff) << '\n';
  hsmrf::write_text_file(out / "summary.csv", summary.str());

  std::ostringstream reps;
  reps << "rep,model,ok,MAD,MCIW,Env,MASV,TMASV,p_eff,WAIC,dWAIC,weight,error\n";
  for (const auto &r : res.replicates) {
    reps << r.rep << ',' << r.model << ',' << (r.ok ? 1 : 0) << ',';
    if (r.ok)
      reps << fmt(*r.metrics.MAD) << ',' << fmt(r.metrics.MCIW) << ',' << fmt(*r.metrics.Envelope) << ','
           << fmt(r.metrics.MASV) << ',' << fmt(*r.metrics.TMASV) << ',' << fmt(r.metrics.p_eff) << ','
           << fmt(r.metrics.WAIC) << ',' << fmt(r.waic_delta) << ',' << fmt(r.waic_weight) << ',';
    else
      reps << "NA,NA,NA,NA,NA,NA,NA,NA,NA,";
    std::string err = r.error;
    for (char &ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    reps << err << '\n';
  }
  hsmrf::write_text_file(out / "replicates.csv", reps.str());

  json manifest = {{"version", HSMRF_VERSION},
                   {"seed", c.chain.seed},
                   {"config", hsmrf::to_json(c)},
                   {"design", {{"n", d.n}, {"n0", d.n0}, {"S", d.S}, {"T", d.T}, {"H", d.H},
                               {"trajectory", d.trajectory.name()}}}};
  hsmrf::write_text_file(out / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

int report(const char *kind, const std::exception &e, int code, const std::optional<std::string> &label = {}) {
  json j = {{"error", kind}, {"message", e.what()}, {"exit_code", code}};
  if (label) j["label"] = *label;
  std::cerr << j.dump() << std::endl;
  return code;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Effective population size estimation with horseshoe and Gaussian Markov random field priors"};
  app.set_version_flag("--version", HSMRF_VERSION);
  app.require_subcommand(1);

  Overrides o;
  std::optional<std::string> skyline_file;
  std::vector<std::string> posteriors, truths, names;
  std::vector<double> prior_odds;

  auto *sim = app.add_subcommand("simulate", "simulate replicate genealogies");
  o.add_common(sim);
  o.add_sim(sim);
  o.add_grid(sim);
  sim->add_option("--seed", o.seed, "master seed");

  auto *cal = app.add_subcommand("calibrate", "calibrate the global scale hyperparameter");
  o.add_common(cal);
  o.add_data(cal);
  o.add_model(cal);
  o.add_grid(cal);

  auto *sky = app.add_subcommand("skyline", "classic skyline estimates");
  o.add_common(sky);
  o.add_data(sky);
  sky->add_option("--file", skyline_file, "write CSV here instead of stdout");

  auto *fit = app.add_subcommand("fit", "fit one model to a fixed dated tree");
  o.add_common(fit);
  o.add_data(fit);
  o.add_model(fit);
  o.add_grid(fit);
  o.add_chain(fit);

  auto *ev = app.add_subcommand("evaluate", "posterior metrics, optionally against a truth");
  o.add_common(ev);
  ev->add_option("--posterior", posteriors, "posterior.csv (repeatable)");
  ev->add_option("--truth", truths, "truth CSV (one, or one per posterior)");

  auto *cmp = app.add_subcommand("compare", "WAIC weights or steppingstone model probabilities");
  o.add_common(cmp);
  o.add_data(cmp);
  o.add_grid(cmp);
  o.add_chain(cmp);
  cmp->add_option("--posterior", posteriors, "posterior.csv per model (WAIC mode)");
  cmp->add_option("--names", names, "model names for --posterior");
  cmp->add_option("--models", o.models, "models for steppingstone mode");
  cmp->add_option("--mu", o.mu, "prior mean of theta_1");
  cmp->add_option("--sigma", o.sigma, "prior sd of theta_1");
  cmp->add_option("--zeta", o.zeta, "global scale hyperparameter");
  cmp->add_option("--stones", o.stones, "number of stones");
  cmp->add_option("--beta-shape", o.beta_shape, "shape of the Beta(a, 1) power schedule");
  cmp->add_option("--prior-odds", prior_odds, "prior weight per model");

  auto *st = app.add_subcommand("study", "simulate, fit and score replicates");
  o.add_common(st);
  o.add_sim(st);
  o.add_grid(st);
  o.add_chain(st);
  st->add_option("--models", o.models, "models to fit");
  st->add_option("--zeta-alpha", o.zeta_alpha, "calibration tail probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    return report("usage", e, 2);
  }

  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (cal->parsed()) return cmd_calibrate(o);
    if (sky->parsed()) return cmd_skyline(o, skyline_file);
    if (fit->parsed()) return cmd_fit(o);
    if (ev->parsed()) return cmd_evaluate(o, posteriors, truths);
    if (cmp->parsed()) return cmd_compare(o, posteriors, names, prior_odds);
    if (st->parsed()) return cmd_study(o);
  } catch (const hsmrf::MissingLabelError &e) {
    return report("input", e, 2, e.label);
  } catch (const hsmrf::InputError &e) {
    return report("input", e, 2);
  } catch (const std::exception &e) {
    return report("runtime", e, 1);
  }
  return 2;
}
