// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Optional arguments select criteria by number.
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "primitives.hpp"
#include "support.hpp"
#include "vihmc/config.hpp"
#include "vihmc/diagnostics.hpp"
#include "vihmc/errors.hpp"
#include "vihmc/io.hpp"
#include "vihmc/pipeline.hpp"

using namespace vihmc;
using namespace vihmc::testing;

namespace {

const fs::path kConfigs = VIHMC_CONFIG_DIR;
const fs::path kTool = VIHMC_TOOL_PATH;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

/// Trained VI posterior and sensitivity partition for one config.
struct Stage {
  ExperimentConfig config;
  ExperimentData data;
  VariationalPosterior q;
  SensitivityResult sens;
  double vi_seconds = 0.0;
};

Stage prepare(ExperimentConfig cfg) {
  Stage s;
  s.config = std::move(cfg);
  s.data = load_data(s.config);
  const auto t0 = Clock::now();
  const TrainResult r = run_train_vi(s.config, s.data.train, s.data.val);
  s.vi_seconds = since(t0);
  if (r.diverged) throw NumericalError("VI diverged: " + r.message);
  s.q = r.posterior;
  s.sens = run_sensitivity(s.config, s.q, s.data.train);
  return s;
}

Stage& burgers() {
  static std::optional<Stage> stage;
  if (!stage) {
    std::cout << "  (training desk-scale Burgers VI)" << std::endl;
    stage = prepare(load_config(kConfigs / "burgers.json"));
  }
  return *stage;
}

Stage& case2() {
  static std::optional<Stage> stage;
  if (!stage) stage = prepare(load_config(kConfigs / "case2.json"));
  return *stage;
}

/// Sample moments of pooled draws.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> moments(const Eigen::MatrixXd& d) {
  const Eigen::VectorXd m = d.colwise().mean().transpose();
  const Eigen::MatrixXd c = d.rowwise() - m.transpose();
  return {m, c.transpose() * c / static_cast<double>(d.rows() - 1)};
}

/// Mean within 2% (relative norm) and every covariance entry within 10% of
/// sqrt(S_ii S_jj).
bool gaussian_match(const Eigen::MatrixXd& draws, const Eigen::VectorXd& mean,
                    const Eigen::MatrixXd& cov, std::string& detail) {
  const auto [m, c] = moments(draws);
  const double mean_err = (m - mean).norm() / mean.norm();
  double cov_err = 0.0;
  for (Index i = 0; i < cov.rows(); ++i) {
    for (Index j = 0; j < cov.cols(); ++j) {
      cov_err = std::max(cov_err, std::abs(c(i, j) - cov(i, j)) / std::sqrt(cov(i, i) * cov(j, j)));
    }
  }
  detail += "mean " + fmt(100 * mean_err, 2) + "%, cov " + fmt(100 * cov_err, 2) + "%";
  return mean_err < 0.02 && cov_err < 0.10;
}

HmcConfig gaussian_hmc(const Eigen::MatrixXd& cov, int kept, std::uint64_t seed) {
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  HmcConfig c;
  c.step_size = 0.25 * sd.minCoeff();
  c.trajectory.steps = static_cast<int>(std::ceil(1.5 * sd.maxCoeff() / c.step_size));
  c.chains = 2;
  c.samples = kept / 2 + 1000;
  c.burn_in = 1000;
  c.seed = seed;
  return c;
}

// 1 --------------------------------------------------------------------------
Outcome case1_recovery() {
  const auto t0 = Clock::now();
  const Stage s = prepare(load_config(kConfigs / "case1.json"));
  const ParameterPartition& part = s.sens.partition;
  const SamplingPlan full = plan_sampling(s.config, s.q, s.data.train, SampleMode::Full, nullptr);
  const ChainArchive fa = run_sample(s.config, full);
  const SamplingPlan red = plan_sampling(s.config, s.q, s.data.train, SampleMode::Reduced, &part);
  const ChainArchive ra = run_sample(s.config, red);
  const double seconds = since(t0);

  const Eigen::VectorXd hmc_mean = summarize_archive(fa, 6, "HMC").mean;
  const Eigen::VectorXd vihmc_mean = summarize_archive(ra, 6, "VI-HMC").mean;
  Eigen::VectorXd ref = Eigen::VectorXd::Zero(6);
  ref << -4.00, 0.0, 0.0, -1.57, -0.40, -0.48;
  const std::vector<Index> coords{0, 3, 4, 5};
  const double dist = case1_distance(vihmc_mean, ref, coords);
  const double dist_hmc = case1_distance(hmc_mean, ref, coords);

  bool frozen_exact = !part.frozen.empty();
  std::string frozen_names;
  const ParamLayout layout = s.config.network.layout();
  for (std::size_t k = 0; k < part.frozen.size(); ++k) {
    const Index i = part.frozen[k];
    frozen_exact = frozen_exact && vihmc_mean(i) == s.q.mu(i) && part.frozen_values(static_cast<Index>(k)) == s.q.mu(i);
    frozen_names += (k ? " " : "") + layout.name_of(i);
  }
  std::ostringstream d;
  d << "VI-HMC (w1,p2,a,b) = (" << fmt(vihmc_mean(0)) << ", " << fmt(vihmc_mean(3)) << ", "
    << fmt(vihmc_mean(4)) << ", " << fmt(vihmc_mean(5)) << "), max deviation mod symmetry "
    << fmt(dist, 3) << " (HMC " << fmt(dist_hmc, 3) << "); frozen {" << frozen_names
    << "} equal VI means: " << (frozen_exact ? "yes" : "no") << "; acceptance HMC "
    << fmt(fa.chains[0].acceptance(fa.burn_in), 3) << ", VI-HMC "
    << fmt(ra.chains[0].acceptance(ra.burn_in), 3) << "; " << fmt(seconds, 3) << " s";
  return {dist <= 0.1 && frozen_exact && seconds < 600.0, d.str()};
}

// 2 --------------------------------------------------------------------------
Outcome case1_count() {
  const ExperimentConfig base = load_config(kConfigs / "case1.json");
  const ExperimentData data = load_data(base);
  auto count = [&](std::uint64_t seed) {
    ExperimentConfig c = base;
    c.vi.seed = seed;
    const TrainResult r = run_train_vi(c, data.train, data.val);
    return run_sensitivity(c, r.posterior, data.train).partition.selected();
  };
  const Index shipped = count(base.vi.seed);
  bool ok = shipped == 4;
  std::string d = "shipped seed " + std::to_string(shipped) + " of 6; reseeds";
  for (std::uint64_t k = 1; k <= 5; ++k) {
    const Index n = count(base.vi.seed + k);
    ok = ok && n >= 3 && n <= 5;
    d += " " + std::to_string(n);
  }
  return {ok, d};
}

// 3 --------------------------------------------------------------------------
Outcome case2_count() {
  const ExperimentConfig base = load_config(kConfigs / "case2.json");
  const Index shipped = case2().sens.partition.selected();
  bool ok = std::abs(shipped - 79) <= 10;
  std::string d = "shipped seed " + std::to_string(shipped) + " of 141; reseeds";
  const ExperimentData& data = case2().data;
  for (std::uint64_t k = 1; k <= 4; ++k) {
    ExperimentConfig c = base;
    c.vi.seed = base.vi.seed + k;
    const TrainResult r = run_train_vi(c, data.train, data.val);
    const Index n = run_sensitivity(c, r.posterior, data.train).partition.selected();
    ok = ok && std::abs(n - 79) <= 10;
    d += " " + std::to_string(n);
  }
  return {ok, d};
}

// 4 --------------------------------------------------------------------------
Outcome conjugate_oracle() {
  bool ok = true;
  std::string d;
  for (Index dim : {2, 3, 5}) {
    const ConjugateRegression r = make_regression(dim, 50, 100 + static_cast<std::uint64_t>(dim));
    const TargetPosterior t = r.target();
    const HmcConfig c = gaussian_hmc(r.post_cov, 10000, 7);
    const ChainArchive a = sample_chains(t, c, {r.post_mean, r.post_mean});
    d += "D=" + std::to_string(dim) + ": ";
    ok = gaussian_match(a.pooled_draws(), r.post_mean, r.post_cov, d) && ok;
    d += "; ";
  }
  // Reduced target: freeze two of five coordinates, compare with the conditional.
  const ConjugateRegression r = make_regression(5, 50, 205);
  const std::vector<Index> frozen{1, 3};
  const std::vector<Index> free{0, 2, 4};
  ParameterPartition p;
  p.total = 5;
  p.sensitive = free;
  p.frozen = frozen;
  p.frozen_values = Eigen::Vector2d(r.post_mean(1) + 0.05, r.post_mean(3) - 0.05);
  const TargetPosterior red = reduced_target(r.target(), p);
  const Eigen::MatrixXd lambda = r.post_cov.inverse();
  Eigen::MatrixXd lff(3, 3), lfc(3, 2);
  Eigen::VectorXd mf(3), mc(2);
  for (Index i = 0; i < 3; ++i) {
    mf(i) = r.post_mean(free[i]);
    for (Index j = 0; j < 3; ++j) lff(i, j) = lambda(free[i], free[j]);
    for (Index j = 0; j < 2; ++j) lfc(i, j) = lambda(free[i], frozen[j]);
  }
  for (Index j = 0; j < 2; ++j) mc(j) = r.post_mean(frozen[j]);
  const Eigen::MatrixXd cond_cov = lff.inverse();
  const Eigen::VectorXd cond_mean = mf - cond_cov * lfc * (p.frozen_values - mc);
  const HmcConfig c = gaussian_hmc(cond_cov, 10000, 8);
  const ChainArchive a = sample_chains(red, c, {cond_mean, cond_mean});
  d += "reduced D=3 of 5: ";
  ok = gaussian_match(a.pooled_draws(), cond_mean, cond_cov, d) && ok;
  return {ok, d};
}

// 5 --------------------------------------------------------------------------
double max_delta_h(const Target& t, double eps, double time, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int steps = static_cast<int>(std::lround(time / eps));
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const HmcState s = make_state(t, randn(t.dim(), 1, rng));
    const Eigen::VectorXd p = randn(t.dim(), 1, rng);
    const LeapfrogResult lf = leapfrog(t, s, p, eps, steps);
    const double dh = (-lf.end.log_density + kinetic_energy(lf.momentum, {})) -
                      (-s.log_density + kinetic_energy(p, {}));
    worst = std::max(worst, std::abs(dh));
  }
  return worst;
}

Outcome integrator_order() {
  bool ok = true;
  std::string d = "ratios";
  const GaussianTarget g1(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  Eigen::Matrix3d cov;
  cov << 1.0, 0.3, 0.0, 0.3, 0.5, 0.1, 0.0, 0.1, 2.0;
  const GaussianTarget g3(Eigen::VectorXd::Zero(3), cov);
  for (const Target* t : {static_cast<const Target*>(&g1), static_cast<const Target*>(&g3)}) {
    const double ratio = max_delta_h(*t, 0.1, 1.0, 1) / max_delta_h(*t, 0.05, 1.0, 1);
    ok = ok && ratio >= 3.5 && ratio <= 4.5;
    d += " " + fmt(ratio);
  }
  std::mt19937_64 rng(3);
  auto data = std::make_shared<const Dataset>(
      function_data(uniform(20, 1, rng, -1, 1), randn(20, 1, rng, 0.5)));
  const TargetPosterior t(case2_net(), data, {1.0}, {0.0025});
  double resid = 0.0;
  for (int k = 0; k < 10; ++k) {
    const HmcState s = make_state(t, randn(t.dim(), 1, rng, 0.5));
    const Eigen::VectorXd p = randn(t.dim(), 1, rng);
    const LeapfrogResult fwd = leapfrog(t, s, p, 1e-4, 100);
    const LeapfrogResult back = leapfrog(t, fwd.end, -fwd.momentum, 1e-4, 100);
    resid = std::max({resid, (back.end.position - s.position).cwiseAbs().maxCoeff(),
                      (back.momentum + p).cwiseAbs().maxCoeff()});
  }
  ok = ok && resid < 1e-10;
  d += "; reversibility residual " + fmt(resid, 3);
  return {ok, d};
}

// 6 --------------------------------------------------------------------------
Outcome gradient_fidelity() {
  std::mt19937_64 rng(6);
  double worst_prim = 0.0;
  std::string worst_name;
  for (const auto& p : all_primitives()) {
    for (int trial = 0; trial < 100; ++trial) {
      const double e = check_primitive(p, rng);
      if (e > worst_prim) {
        worst_prim = e;
        worst_name = p.name;
      }
    }
  }
  auto fdata = std::make_shared<const Dataset>(
      function_data(uniform(20, 1, rng, -1, 1), randn(20, 1, rng)));
  auto odata = std::make_shared<Dataset>();
  odata->kind = DatasetKind::Operator;
  odata->inputs = randn(4, 6, rng);
  odata->queries = randn(7, 2, rng);
  odata->targets = randn(4, 7, rng);
  const TargetPosterior targets[] = {
      TargetPosterior(case1_net(), fdata, {1.0}, {0.01}),
      TargetPosterior(case2_net(), fdata, {1.0}, {0.0025}),
      TargetPosterior(small_deeponet(6, 2, 8, 4), odata, {0.01}, {1.0}),
  };
  double worst_post = 0.0;
  for (const auto& t : targets) {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::VectorXd x = randn(t.dim(), 1, rng, 0.5);
      Eigen::VectorXd g;
      t.log_density_grad(x, g);
      const auto f = [&](const Eigen::VectorXd& z) { return t.log_density(z); };
      worst_post = std::max(worst_post, rel_err(g, fd_gradient(f, x)));
    }
  }
  return {worst_prim < 1e-5 && worst_post < 1e-5,
          std::to_string(all_primitives().size()) + " primitives, worst " + fmt(worst_prim, 3) +
              " (" + worst_name + "); log posterior worst " + fmt(worst_post, 3)};
}

// 7 --------------------------------------------------------------------------
Outcome adaptation() {
  bool ok = true;
  std::string d = "Gaussian probes";
  Eigen::VectorXd var(5);
  var << 1.0, 0.5, 2.0, 0.25, 1.5;
  const GaussianTarget iso(Eigen::VectorXd::Zero(10), Eigen::MatrixXd::Identity(10, 10));
  const GaussianTarget aniso(Eigen::VectorXd::Ones(5), var.asDiagonal().toDenseMatrix());
  for (const GaussianTarget* t : {&iso, &aniso}) {
    HmcConfig c;
    c.step_size = 1.0;
    c.trajectory.steps = 10;
    c.adapt.enabled = true;
    std::mt19937_64 rng(11);
    const AdaptResult r = adapt_step_size(*t, c, 0.8, make_state(*t, t->mean()), rng);
    ok = ok && r.probe_acceptance >= 0.73 && r.probe_acceptance <= 0.87;
    d += " " + fmt(r.probe_acceptance, 3);
  }
  Stage& b = burgers();
  ExperimentConfig cfg = b.config;
  cfg.hmc.adapt.enabled = true;
  cfg.hmc.adapt.target_acceptance = 0.8;
  const SamplingPlan plan =
      plan_sampling(cfg, b.q, b.data.train, SampleMode::Reduced, &b.sens.partition);
  std::mt19937_64 rng = chain_rng(cfg.hmc.seed, 0);
  const auto t0 = Clock::now();
  const AdaptResult r =
      adapt_step_size(*plan.target, plan.hmc, 0.8, make_state(*plan.target, plan.inits[0]), rng);
  ok = ok && r.probe_acceptance >= 0.73 && r.probe_acceptance <= 0.87;
  d += "; Burgers reduced probe " + fmt(r.probe_acceptance, 3) + " at eps " + fmt(r.step_size, 3) +
       " after " + std::to_string(r.rounds) + " round(s), " + fmt(since(t0), 3) + " s";
  return {ok, d};
}

// 8 --------------------------------------------------------------------------
Outcome cost_direction() {
  bool ok = true;
  std::string d;
  auto check = [&](const std::string& label, Stage& s, int chains, int samples, int burn_in,
                   double fixed_step, double jitter, int adapt_iterations) {
    ExperimentConfig cfg = s.config;
    cfg.hmc.chains = chains;
    cfg.hmc.samples = samples;
    cfg.hmc.burn_in = burn_in;
    cfg.hmc.step_size = fixed_step;
    cfg.hmc.init = InitKind::ViJitter;
    cfg.hmc.init_scale = jitter;
    cfg.hmc.adapt.target_acceptance = 0.8;
    cfg.hmc.adapt.iterations = adapt_iterations;
    cfg.hmc.adapt.probe = adapt_iterations;
    const CostComparison c = run_cost_compare(cfg, s.q, s.sens.partition, s.data.train, s.data.val);
    const bool acc = c.reduced_fixed.acceptance >= c.full_fixed.acceptance;
    const bool eps = c.reduced_adapted.step_size > c.full_adapted.step_size;
    ok = ok && acc && eps;
    d += label + ": fixed eps " + fmt(cfg.hmc.step_size, 3) + " acceptance full " +
         fmt(c.full_fixed.acceptance, 3) + " reduced " + fmt(c.reduced_fixed.acceptance, 3) +
         ", eps* full " + fmt(c.full_adapted.step_size, 3) + " reduced " +
         fmt(c.reduced_adapted.step_size, 3) + "; ";
  };
  check("Case II", case2(), 2, 400, 100, 1e-3, 1e-3, 500);
  Stage& b = burgers();
  check("Burgers", b, 2, 60, 20, 1e-5, b.config.hmc.init_scale, 500);
  return {ok, d};
}

// 9 --------------------------------------------------------------------------
Outcome burgers_quality() {
  Stage& b = burgers();
  const NetworkSpec& net = b.config.network;
  const Dataset& val = b.data.val;
  const double vi_rel = mean_relative_l2(evaluate(net, b.q.mu, val), val.targets);
  const SamplingPlan plan =
      plan_sampling(b.config, b.q, b.data.train, SampleMode::Reduced, &b.sens.partition);
  const auto t0 = Clock::now();
  const ChainArchive a = run_sample(b.config, plan);
  const double secs = since(t0);
  const Eigen::MatrixXd thetas = full_draws(a, net.param_count(), b.config.report.max_draws);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(val.targets.rows(), val.targets.cols());
  for (Index s = 0; s < thetas.rows(); ++s) mean += evaluate(net, thetas.row(s).transpose(), val);
  mean /= static_cast<double>(thetas.rows());
  const double hmc_rel = mean_relative_l2(mean, val.targets);
  const double acc = diagnostics(a).acceptance_rate;
  std::ostringstream d;
  d << "VI rel-L2 " << fmt(100 * vi_rel, 3) << "%, VI-HMC rel-L2 " << fmt(100 * hmc_rel, 3)
    << "%, VI-HMC acceptance " << fmt(acc, 3) << " (" << b.sens.partition.selected() << " of "
    << net.param_count() << " sampled, " << a.good_chains() << " good chain(s); VI "
    << fmt(b.vi_seconds, 3) << " s, HMC " << fmt(secs, 3) << " s)";
  return {vi_rel < 0.15 && hmc_rel < 0.25 && acc > 0.6, d.str()};
}

// 10 -------------------------------------------------------------------------
Outcome degenerate_limits() {
  ExperimentConfig cfg = load_config(kConfigs / "case1.json");
  cfg.vi.train.epochs = 3000;
  cfg.hmc.samples = 300;
  cfg.hmc.burn_in = 100;
  cfg.hmc.full_step_size = cfg.hmc.step_size;
  cfg.sensitivity->tau = 1.0;
  const ExperimentData data = load_data(cfg);
  const VariationalPosterior q = run_train_vi(cfg, data.train, data.val).posterior;
  const SensitivityResult s = run_sensitivity(cfg, q, data.train);
  const ChainArchive full =
      run_sample(cfg, plan_sampling(cfg, q, data.train, SampleMode::Full, nullptr));
  const ChainArchive red =
      run_sample(cfg, plan_sampling(cfg, q, data.train, SampleMode::Reduced, &s.partition));
  const bool identical = s.partition.frozen.empty() && full.chains[0].draws == red.chains[0].draws &&
                         full.chains[0].accepted == red.chains[0].accepted;

  VariationalPosterior zero = q;
  zero.rho.setConstant(-std::numeric_limits<double>::infinity());
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = Eigen::VectorXd::LinSpaced(241, -1.2, 1.2);
  const PredictionBand band = prediction_band(predictive_samples(zero, cfg.network, x, {}, 500, rng));
  const double width = (band.upper() - band.lower()).cwiseAbs().maxCoeff();

  const GaussianTarget g(Eigen::Vector3d(1, 2, 3), Eigen::Matrix3d::Identity());
  const HmcState st = make_state(g, Eigen::Vector3d(0.5, -0.5, 2.0));
  const Eigen::Vector3d p(0.1, 0.2, -0.3);
  const LeapfrogResult lf = leapfrog(g, st, p, 0.3, 0);
  const bool l0 = lf.end.position == st.position && lf.momentum == p;

  return {identical && width == 0.0 && l0,
          std::string("tau=1 reduced vs full draws identical: ") + (identical ? "yes" : "no") +
              "; zero-sigma band width " + fmt(width) + "; L=0 identity: " + (l0 ? "yes" : "no")};
}

// 11 -------------------------------------------------------------------------
int tool(const std::vector<std::string>& args, const fs::path& log) {
  std::string cmd = "\"" + kTool.string() + "\"";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  cmd += " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> run_pipeline(const fs::path& cfg, const fs::path& dir,
                                                 bool operator_data) {
  const std::string c = cfg.string();
  const std::string o = dir.string();
  const fs::path log = dir.parent_path() / (dir.filename().string() + ".log");
  std::vector<std::vector<std::string>> steps{{"gen-data", "-c", c, "-o", o}};
  if (!operator_data) {
    const std::string post = (dir / "posterior.json").string();
    const std::string part = (dir / "partition.json").string();
    steps.push_back({"train-vi", "-c", c, "-o", o});
    steps.push_back({"sensitivity", "-c", c, "-o", o, "--posterior", post});
    steps.push_back({"sample", "-c", c, "-o", o, "--posterior", post, "--partition", part, "--mode", "full"});
    steps.push_back({"sample", "-c", c, "-o", o, "--posterior", post, "--partition", part, "--mode", "reduced"});
    steps.push_back({"report", "-o", o, "--posterior", post, "--data", (dir / "data").string(),
                     "--archive", (dir / "archive_full").string(), "--archive",
                     (dir / "archive_reduced").string(), "--seed", "3"});
    steps.push_back({"cost-compare", "-c", c, "-o", o, "--posterior", post, "--partition", part});
  }
  for (const auto& s : steps) {
    const int rc = tool(s, log);
    if (rc != 0) {
      throw QualityError("vihmc " + s[0] + " exited with " + std::to_string(rc) + ": " + read_text(log));
    }
  }
  std::map<std::string, std::string> hashes;
  for (const auto& a : load_manifest(dir / "manifest.json").artifacts) hashes[a.role] = a.hash;
  return hashes;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("vihmc_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  ExperimentConfig c1 = load_config(kConfigs / "case1.json");
  c1.vi.train.epochs = 2000;
  c1.hmc.samples = 200;
  c1.hmc.burn_in = 50;
  write_text(root / "case1.json", serialize_config(c1));
  ExperimentConfig b = load_config(kConfigs / "burgers.json");
  b.data.burgers.n_fields = 20;
  write_text(root / "burgers.json", serialize_config(b));

  bool ok = true;
  std::string d;
  for (const auto& [name, op] : {std::pair<std::string, bool>{"case1", false}, {"burgers", true}}) {
    const auto a = run_pipeline(root / (name + ".json"), root / (name + "_a"), op);
    const auto bb = run_pipeline(root / (name + ".json"), root / (name + "_b"), op);
    int same = 0;
    for (const auto& [role, h] : a) {
      const auto it = bb.find(role);
      if (it != bb.end() && it->second == h) {
        ++same;
      } else {
        ok = false;
        d += "[" + name + " " + role + " differs] ";
      }
    }
    ok = ok && a.size() == bb.size() && !a.empty();
    d += name + ": " + std::to_string(same) + "/" + std::to_string(a.size()) + " artifacts identical; ";
  }
  fs::remove_all(root);
  return {ok, d};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Case I end-to-end recovery", case1_recovery},
      {"Case I sensitivity count", case1_count},
      {"Case II sensitivity count", case2_count},
      {"sampler correctness oracle", conjugate_oracle},
      {"integrator order and reversibility", integrator_order},
      {"gradient fidelity", gradient_fidelity},
      {"step-size adaptation", adaptation},
      {"directional cost at desk scale", cost_direction},
      {"desk-scale Burgers operator quality", burgers_quality},
      {"degenerate-limit identities", degenerate_limits},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[k].first << " ("
              << fmt(since(t0), 3) << " s): " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : "all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
