// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "hsmrf/calibration.hpp"
#include "hsmrf/coalescent.hpp"
#include "hsmrf/evaluate.hpp"
#include "hsmrf/field_prior.hpp"
#include "hsmrf/grid.hpp"
#include "hsmrf/sampler.hpp"
#include "hsmrf/simulate.hpp"
#include "hsmrf/steppingstone.hpp"
#include "hsmrf/study.hpp"
#include "gaussian_hook.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace hsmrf;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::vector<double> tip_times(const Genealogy &g) {
  std::vector<double> out;
  for (std::size_t i = 0; i < g.schedule().times.size(); ++i)
    out.insert(out.end(), g.schedule().counts[i], g.schedule().times[i]);
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// 1 ---------------------------------------------------------------------------

void likelihood(Outcome &o) {
  Engine rng = make_engine(2024, {1});
  double worst_aligned = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n0 = 1 + static_cast<int>(rng() % 10);
    const int rest = 1 + static_cast<int>(rng() % 80);
    const auto sim = simulate_coalescent(sample_schedule(n0, rest, 3.0, rng), Trajectory::constant(1.0), rng);
    const Genealogy &g = sim.genealogy;
    const int H = 2 + static_cast<int>(rng() % 60);
    const Grid grid = build_grid(H, g.tmrca());
    const auto part = partition(g, grid);
    Eigen::VectorXd theta(H);
    for (int h = 0; h < H; ++h) theta[h] = 1.5 * std_normal(rng);
    std::vector<double> breaks(part.grid.boundaries.begin(), part.grid.boundaries.end() - 1), values(H);
    for (int h = 0; h < H; ++h) values[h] = std::exp(theta[h]);
    auto N = [&](double t) {
      // Cells are (x_h, x_{h+1}]: a coalescence on a boundary belongs to the cell below.
      const auto it = std::lower_bound(breaks.begin(), breaks.end(), t);
      return values[std::max<std::ptrdiff_t>(it - breaks.begin() - 1, 0)];
    };
    const double exact =
        oracle::coalescent_loglik(tip_times(g), g.coal_times(), N, oracle::piecewise_inverse_integral(breaks, values));
    worst_aligned = std::max(worst_aligned, rel(log_likelihood(part, theta).total, exact));
  }
  o.check(worst_aligned < 1e-10, "aligned piecewise-constant");

  auto Ns = [](double t) { return std::exp(std::sin(t)); };
  double worst_smooth = 0.0, coarse = INFINITY;
  for (int rep = 0; rep < 3; ++rep) {
    const auto sim = simulate_coalescent(sample_schedule(10, 40, 3.0, rng),
                                         Trajectory::function(Ns, "exp-sin", std::exp(-1.0)), rng);
    const Genealogy &g = sim.genealogy;
    const double exact =
        oracle::coalescent_loglik(tip_times(g), g.coal_times(), Ns, oracle::quadrature_inverse_integral(Ns));
    auto discrete = [&](int H) {
      const Grid grid = build_grid(H, g.tmrca());
      Eigen::VectorXd theta(H);
      for (int h = 0; h < H; ++h) theta[h] = std::sin(grid.midpoint(h));
      return log_likelihood(partition(g, grid), theta).total;
    };
    worst_smooth = std::max(worst_smooth, rel(discrete(2000), exact));
    coarse = std::min(coarse, rel(discrete(20), exact));
  }
  o.check(worst_smooth < 1e-4, "smooth H=2000");
  o.check(coarse > worst_smooth, "H=20 coarser than H=2000");
  o.detail << "aligned max rel err " << worst_aligned << "; smooth H=2000 max rel err " << worst_smooth
           << "; H=20 min rel err " << coarse;
}

// 2 ---------------------------------------------------------------------------

struct PriorStats {
  std::vector<double> inc, eta;
};

void prior_reproduction(Outcome &o) {
  const int H = 20, n_direct = 100000, n_iter = 200000;
  const int mid = (H - 1) / 2;
  const double probs[] = {0.01, 0.5, 0.99};
  double worst_z = 0.0;
  for (const char *code : {"G1", "G2", "H1", "H2"}) {
    FieldModel m = FieldModel::from_code(code);
    m.mu = 0.0;
    m.sigma = 1.0;
    m.zeta = 1.0;

    Engine rng = make_engine(2024, {2, model_stream(code)});
    PriorStats direct;
    for (int r = 0; r < n_direct; ++r) {
      const LatentState s = sample_prior(m, H, rng);
      direct.inc.push_back(increments(s.theta, m.order)[mid]);
      direct.eta.push_back(std::sqrt(s.eta2));
    }

    ChainConfig cfg{1000, n_iter, 1, 1, derive_seed(2024, {3, model_stream(code)}), 1};
    const PosteriorChain chain = run_chain(m, FlatLikelihood{H}, cfg).front();
    PriorStats mc;
    for (Eigen::Index r = 0; r < chain.theta.rows(); ++r) {
      mc.inc.push_back(increments(chain.theta.row(r).transpose(), m.order)[mid]);
      mc.eta.push_back(std::sqrt(chain.eta2[r]));
    }

    auto compare = [&](const std::vector<double> &ref, const std::vector<double> &draws, const char *what) {
      for (double p : probs) {
        const double q = quantile(ref, p);
        std::vector<double> ind(draws.size());
        for (std::size_t i = 0; i < draws.size(); ++i) ind[i] = draws[i] <= q ? 1.0 : 0.0;
        double phat = 0.0;
        for (double v : ind) phat += v;
        phat /= static_cast<double>(ind.size());
        const double ess = mcmc_ess(ind);
        const double se = std::sqrt(p * (1.0 - p) * (1.0 / n_direct + 1.0 / ess));
        const double z = std::abs(phat - p) / se;
        worst_z = std::max(worst_z, z);
        std::ostringstream tag;
        tag << code << " " << what << " q" << p << " phat=" << phat << " z=" << z;
        o.check(z <= 3.0, tag.str());
      }
    };
    compare(direct.inc, mc.inc, "increment");
    compare(direct.eta, mc.eta, "eta");
  }
  o.detail << "G1/G2/H1/H2 at H=20, quantiles 1/50/99% of middle increment and eta; worst |z| = " << worst_z
           << " (limit 3)";
}

// 3 ---------------------------------------------------------------------------

void grid_rule(Outcome &o) {
  const double hcv = choose_boundary(283, 246, 320, kDefaultAlphaT);
  const double bison = choose_boundary(136, 111, 164, kDefaultAlphaT);
  const int cells = choose_cell_count(152);
  o.check(rel(hcv, 227.0) < 0.01, "HCV boundary");
  o.check(rel(bison, 98.7) < 0.01, "bison boundary");
  o.check(cells == 120, "cell count");
  o.detail << "T(HCV) = " << hcv << ", T(bison) = " << bison << ", H(152) = " << cells;
}

// 4 ---------------------------------------------------------------------------

void calibration(Outcome &o) {
  const double z = zeta(1.0, 1.0, 0.05);
  o.check(std::abs(z - 0.07870) <= 1e-5, "zeta(1,1,0.05)");
  bool linear = true, increasing = true;
  for (double sref : {0.5, 1.0, 3.0})
    for (double a = 0.01; a < 0.99; a += 0.01) {
      for (double U : {0.1, 0.7, 2.0, 10.0})
        linear = linear && std::abs(zeta(U, sref, a) - U * zeta(1.0, sref, a)) <= 1e-14 * U * zeta(1.0, sref, a);
      increasing = increasing && zeta(1.0, sref, a + 0.01) > zeta(1.0, sref, a);
    }
  o.check(linear, "linear in U");
  o.check(increasing, "monotone in alpha");
  o.detail << "zeta(1,1,0.05) = " << z << "; linear in U; increasing in alpha as tan(pi(1-alpha)/2) falls";
}

// 5 ---------------------------------------------------------------------------

void study(Outcome &o) {
  RunConfig cfg;
  cfg.scenario = "BN";
  cfg.models = {"G1", "H1"};
  cfg.reps = 20;
  cfg.n = 100;
  cfg.n0 = 10;
  cfg.H = 40;
  cfg.chain = ChainConfig{500, 250, 10, 4, 11, 1};
  const StudyResult r = run_study(cfg, study_design(cfg));
  const StudyRow &g = r.summary[0], &h = r.summary[1];
  o.check(g.n_ok == cfg.reps && h.n_ok == cfg.reps, "all replicates fitted");
  o.check(h.MAD < g.MAD, "MAD(H1) < MAD(G1)");
  o.check(h.MCIW < g.MCIW, "MCIW(H1) < MCIW(G1)");
  o.check(g.Env >= 0.85, "Env(G1) >= 0.85");
  o.check(h.Env >= 0.85, "Env(H1) >= 0.85");
  o.detail << "BN n=100 H=40 x20: G1 MAD " << g.MAD << " MCIW " << g.MCIW << " Env " << g.Env << "; H1 MAD "
           << h.MAD << " MCIW " << h.MCIW << " Env " << h.Env;
}

// 6 ---------------------------------------------------------------------------

void simulator(Outcome &o) {
  Engine rng = make_engine(2024, {6});
  const int R = 10000;
  std::vector<double> waits;
  for (int r = 0; r < R; ++r)
    waits.push_back(simulate_coalescent({{0.0}, {2}}, Trajectory::constant(1.0), rng).genealogy.tmrca());
  const double p_const = oracle::ks_pvalue(waits, [](double t) { return 1.0 - std::exp(-t); });
  o.check(p_const > 0.01, "constant-N KS");

  // Heterochronous constant N = 2: the first wait (before the second sample
  // at 0.5) is Exp with rate 1/2 censored at 0.5; check through the
  // conditional law of coalescences that happen before 0.5.
  std::vector<double> early;
  int n_early = 0;
  for (int r = 0; r < R; ++r) {
    const double t = simulate_coalescent({{0.0, 0.5}, {2, 1}}, Trajectory::constant(2.0), rng).genealogy.coal_times()[0];
    if (t < 0.5) {
      early.push_back(t);
      ++n_early;
    }
  }
  const double p_early = 1.0 - std::exp(-0.25);
  const double p_het = oracle::ks_pvalue(early, [&](double t) { return (1.0 - std::exp(-t / 2.0)) / p_early; });
  o.check(p_het > 0.01, "heterochronous KS");
  o.check(std::abs(n_early - R * p_early) <= 4.0 * std::sqrt(R * p_early * (1 - p_early)), "early fraction");

  SimulationOptions opt;
  opt.horizon_cap = 30.0;
  const auto growth = Trajectory::function([](double t) { return std::exp(t); }, "exp", 1.0);
  std::vector<double> done;
  int censored = 0;
  for (int r = 0; r < R; ++r) {
    try {
      done.push_back(simulate_coalescent({{0.0}, {2}}, growth, rng, opt).genealogy.tmrca());
    } catch (const RuntimeError &) {
      ++censored;
    }
  }
  const double p_done = 1.0 - std::exp(std::exp(-opt.horizon_cap) - 1.0);
  const double p_exp =
      oracle::ks_pvalue(done, [&](double t) { return (1.0 - std::exp(std::exp(-t) - 1.0)) / p_done; });
  o.check(p_exp > 0.01, "N=e^t KS");
  o.check(std::abs(censored - R * (1 - p_done)) <= 4.0 * std::sqrt(R * p_done * (1 - p_done)), "censored fraction");
  o.detail << "KS p: constant " << p_const << ", heterochronous " << p_het << ", e^t " << p_exp
           << "; never coalesced " << censored << "/" << R << " (expected " << R * (1 - p_done) << ")";
}

// 7 ---------------------------------------------------------------------------

void steppingstone_oracle(Outcome &o) {
  FieldModel m = FieldModel::from_code("G1");
  m.mu = 0.0;
  m.sigma = 1.0;
  m.zeta = 1.0;
  Eigen::VectorXd y(5);
  y << 0.4, -0.3, 0.9, 1.6, 1.2;
  const oracle::GaussianLikelihood lik{y, 0.7};
  const double truth = oracle::gmrf_gaussian_log_evidence(m, lik);
  const auto r = steppingstone(m, lik, ChainConfig{50 * 200, 50 * 2000, 1, 4, 2024, 1}, 50, 0.2);
  const double err = std::abs(r.log_ml - truth);
  o.check(err < 0.1, "|logML - analytic| < 0.1");
  o.detail << "logML " << r.log_ml << " vs analytic " << truth << " (|diff| " << err << ")";
}

// 8 ---------------------------------------------------------------------------

void metric_examples(Outcome &o) {
  constexpr double tol = 1e-12;
  auto degenerate = [](const Eigen::VectorXd &theta) {
    PosteriorChain c;
    c.theta = theta.transpose().replicate(3, 1);
    c.eta2 = Eigen::VectorXd::Ones(3);
    c.loglik = Eigen::VectorXd::Constant(3, -1.0);
    c.pointwise = Eigen::MatrixXd::Constant(3, theta.size(), -1.0 / theta.size());
    return c;
  };
  const Eigen::Vector3d truth(0.2, -0.5, 1.0);
  const auto at_truth = metrics(degenerate(truth), Eigen::VectorXd(truth)).metrics;
  o.check(*at_truth.MAD == 0.0 && *at_truth.Envelope == 1.0, "degenerate posterior at truth");

  const auto hand = metrics(degenerate(Eigen::Vector3d(0, 1, 0)), Eigen::VectorXd(Eigen::Vector3d::Zero())).metrics;
  o.check(std::abs(*hand.MAD - 1.0 / 3.0) <= tol, "MAD 1/3");
  o.check(std::abs(hand.MASV - 1.0) <= tol, "MASV 1");
  o.check(std::abs(*hand.TMASV) <= tol, "TMASV 0");
  o.check(metrics(degenerate(Eigen::VectorXd::Constant(4, 2.0))).metrics.MASV == 0.0, "constant MASV 0");

  o.check(p_eff(std::vector<double>{3.0, 3.0, 3.0}) == 0.0, "p_eff constant");
  o.check(std::abs(p_eff(std::vector<double>{0.0, 2.0}) - 4.0) <= tol, "p_eff (0,2)");
  Engine rng = make_engine(2024, {8});
  std::vector<double> iid(100000);
  for (auto &v : iid) v = std_normal(rng);
  o.check(std::abs(p_eff(iid) - 2.0) <= 0.1, "p_eff iid ~ 2");

  Eigen::MatrixXd same(4, 3);
  same << -1, -2, -3, -1, -2, -3, -1, -2, -3, -1, -2, -3;
  const Waic w0 = waic(same);
  o.check(w0.p_waic == 0.0 && std::abs(w0.waic - 12.0) <= tol, "degenerate WAIC");

  const auto eq = waic_weights({same, same, same});
  bool uniform = true;
  for (const auto &w : eq) uniform = uniform && std::abs(w.weight - 1.0 / 3.0) <= tol;
  o.check(uniform, "equal WAIC weights");

  const auto dw = waic_weights({Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Constant(2, 1, -1.0)});
  const double w1 = 1.0 / (1.0 + std::exp(-1.0));
  o.check(std::abs(dw[0].weight - w1) <= tol && std::abs(dw[1].weight - (1.0 - w1)) <= tol, "dW (0,2) weights");
  o.check(std::abs(dw[0].weight - 0.7311) < 5e-5 && std::abs(dw[1].weight - 0.2689) < 5e-5, "0.7311/0.2689");

  const auto mp = model_probabilities({-3714.14, -3717.53});
  const double p1 = 1.0 / (1.0 + std::exp(-3.39));
  o.check(std::abs(mp[0] - p1) <= tol && std::abs(mp[0] + mp[1] - 1.0) <= tol, "bison probabilities");
  o.check(std::abs(mp[0] - 0.967) < 5e-4 && std::abs(mp[1] - 0.033) < 5e-4, "0.967/0.033");
  const auto uni = model_probabilities({-7.0, -7.0});
  o.check(std::abs(uni[0] - 0.5) <= tol, "equal logML uniform");
  const auto far = model_probabilities({0.0, -700.0});
  o.check(far[0] == 1.0 && far[1] < 1e-300 && std::isfinite(far[1]), "700 difference");
  o.check(model_probabilities({-4.0})[0] == 1.0, "single model");
  const auto b = stone_powers(50, 0.2);
  o.check(b[0] == 0.0 && b[50] == 1.0 && std::abs(b[1] - 3.2e-9) <= 1e-12 * 3.2e-9 + 1e-24, "stone powers");
  o.detail << "MAD " << *hand.MAD << ", MASV " << hand.MASV << ", p_eff(0,2) " << p_eff(std::vector<double>{0, 2})
           << ", weights (" << dw[0].weight << ", " << dw[1].weight << "), bison (" << mp[0] << ", " << mp[1]
           << ")";
}

} // namespace

int main() {
  struct Criterion {
    const char *name;
    std::function<void(Outcome &)> run;
  };
  const std::vector<Criterion> criteria = {
      {"likelihood correctness", likelihood},
      {"prior reproduction", prior_reproduction},
      {"grid rule numerics", grid_rule},
      {"calibration numerics", calibration},
      {"scaled simulation study", study},
      {"simulator laws", simulator},
      {"steppingstone oracle", steppingstone_oracle},
      {"metric examples", metric_examples},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].run(o);
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.str().c_str(),
                secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed;
}
