#include "vihmc/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

#include "vihmc/diagnostics.hpp"
#include "vihmc/errors.hpp"
#include "vihmc/io.hpp"

namespace vihmc {

namespace {

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Index>& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
  return out;
}

double median(Eigen::VectorXd v) {
  std::sort(v.data(), v.data() + v.size());
  const Index n = v.size();
  return n % 2 ? v(n / 2) : 0.5 * (v(n / 2 - 1) + v(n / 2));
}

std::string file_stem(std::string method) {
  for (char& c : method) {
    c = std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c)) : '_';
  }
  return method;
}

}  // namespace

ExperimentData load_data(const ExperimentConfig& config, const std::filesystem::path& base) {
  ExperimentData out;
  switch (config.data.kind) {
    case DataKind::Sinusoid: {
      auto [train, val] = gen_sinusoid(config.data.sinusoid);
      out.train = std::move(train);
      out.val = std::move(val);
      break;
    }
    case DataKind::Burgers: {
      auto [train, val] = gen_burgers_dataset(config.data.burgers, config.data.trunk_dim);
      out.train = std::move(train);
      out.val = std::move(val);
      break;
    }
    case DataKind::Path: {
      std::filesystem::path p = config.data.path;
      if (p.is_relative() && !base.empty()) p = base / p;
      auto [train, val] = load_dataset(p);
      out.train = std::move(train);
      out.val = std::move(val);
      break;
    }
  }
  out.spec_echo = serialize_data(config.data);
  check_inputs(config.network, out.train.inputs, out.train.queries);
  return out;
}

TrainResult run_train_vi(const ExperimentConfig& config, const Dataset& train, const Dataset& val) {
  std::mt19937_64 init_rng(config.vi.init_seed);
  const VariationalPosterior q0 = VariationalPosterior::initialize(
      config.network, config.prior, config.vi.sigma0, init_rng, config.vi.init_scale);
  std::mt19937_64 rng(config.vi.seed);
  return train_vi(q0, config.network, train, val, config.likelihood, config.vi.train, rng);
}

SensitivityResult run_sensitivity(const ExperimentConfig& config, const VariationalPosterior& q,
                                  const Dataset& train) {
  const SensitivityBlock block = config.sensitivity.value_or(SensitivityBlock{});
  SensitivityResult out;
  out.report = compute_sensitivities(q, config.network, train);
  out.partition = select_partition(out.report, q, block.tau, block.rule);
  return out;
}

SamplingPlan plan_sampling(const ExperimentConfig& config, const VariationalPosterior& q,
                           const Dataset& train, SampleMode mode,
                           const ParameterPartition* partition) {
  q.validate(config.network.param_count());
  SamplingPlan plan;
  plan.mode = mode;
  auto data = std::make_shared<const Dataset>(train);
  TargetPosterior full(config.network, data, config.prior, config.likelihood);
  if (mode == SampleMode::Reduced) {
    if (partition == nullptr) {
      throw ConfigError("reduced sampling needs a parameter partition");
    }
    plan.target = std::make_shared<const TargetPosterior>(reduced_target(full, *partition));
  } else {
    plan.target = std::make_shared<const TargetPosterior>(std::move(full));
  }
  const auto& free = plan.target->free_indices();
  if (free.empty()) {
    throw QualityError("the partition leaves no parameter to sample");
  }
  const Eigen::VectorXd var_free = gather(q.sigma().array().square().matrix(), free);

  const HmcBlock& h = config.hmc;
  HmcConfig& c = plan.hmc;
  c.step_size = h.step_for(mode);
  c.chains = h.chains;
  c.samples = h.samples;
  c.burn_in = h.burn_in;
  c.seed = h.seed;
  c.adapt = h.adapt;
  c.divergence_threshold = h.divergence_threshold;
  c.trajectory.max_steps = h.leapfrog.max_steps;
  plan.step_provenance = h.adapt.enabled ? "adapted from " + format_double(c.step_size) +
                                               " at target acceptance " +
                                               format_double(h.adapt.target_acceptance)
                                         : "fixed";
  if (h.leapfrog.kind == LeapfrogBlock::Kind::Fixed) {
    c.trajectory.steps = h.leapfrog.steps;
    c.trajectory.length = 0.0;
    plan.steps_provenance = "fixed";
  } else {
    double v = h.leapfrog.variance;
    if (h.leapfrog.variance_choice == "max") v = var_free.maxCoeff();
    if (h.leapfrog.variance_choice == "median") v = median(var_free);
    if (h.leapfrog.use_std) v = std::sqrt(v);
    c.trajectory.length = std::numbers::pi * v / 2.0;
    plan.steps_provenance = "heuristic pi*v/(2*eps) with v=" + format_double(v) + " (" +
                            h.leapfrog.variance_choice + (h.leapfrog.use_std ? ", std" : "") + ")";
    if (!(c.trajectory.length > 0.0)) {
      throw QualityError("leapfrog heuristic: posterior variance is zero");
    }
  }
  if (h.vi_mass) {
    if (!(var_free.minCoeff() > 0.0)) {
      throw QualityError("mass matrix from VI variances: some variance is zero");
    }
    c.inv_mass = var_free;
  }
  c.validate();
  if (h.init == InitKind::Prior) {
    plan.inits = prior_inits(static_cast<Index>(free.size()), config.prior.variance, h.chains, h.seed);
  } else {
    plan.inits = jittered_inits(plan.target->restrict(q.mu), h.init_scale, h.chains, h.seed);
  }
  return plan;
}

ChainArchive run_sample(const ExperimentConfig& config, const SamplingPlan& plan) {
  ChainArchive a = sample_chains(*plan.target, plan.hmc, plan.inits);
  a.free_indices = plan.target->free_indices();
  a.frozen_indices = plan.target->frozen_indices();
  a.frozen_values = plan.target->frozen_values();
  a.config_snapshot = serialize_config(config);
  return a;
}

std::map<std::string, std::string> archive_extra(const SamplingPlan& plan) {
  return {{"mode", to_string(plan.mode)},
          {"step_size", format_double(plan.hmc.step_size)},
          {"step_provenance", plan.step_provenance},
          {"steps_provenance", plan.steps_provenance},
          {"leapfrog_steps", std::to_string(plan.hmc.trajectory.resolve(plan.hmc.step_size))}};
}

CostComparison run_cost_compare(const ExperimentConfig& config, const VariationalPosterior& q,
                                const ParameterPartition& partition, const Dataset& train,
                                const Dataset& val) {
  CostComparison out;
  auto run = [&](SampleMode mode, bool adapt, const std::string& label) {
    ExperimentConfig c = config;
    c.hmc.mode = mode;
    c.hmc.adapt.enabled = adapt;
    c.hmc.full_step_size = c.hmc.step_size;
    const SamplingPlan plan = plan_sampling(c, q, train, mode, &partition);
    const ChainArchive a = run_sample(c, plan);
    return cost_row(a, c.network, val, label, c.report.max_draws);
  };
  out.full_fixed = run(SampleMode::Full, false, "HMC fixed");
  out.reduced_fixed = run(SampleMode::Reduced, false, "VI-HMC fixed");
  out.full_adapted = run(SampleMode::Full, true, "HMC adapted");
  out.reduced_adapted = run(SampleMode::Reduced, true, "VI-HMC adapted");
  return out;
}

std::string cost_compare_csv(const CostComparison& c) {
  return cost_table_csv({c.full_fixed, c.reduced_fixed, c.full_adapted, c.reduced_adapted});
}

std::string cost_compare_timing_csv(const CostComparison& c) {
  return timing_table_csv({c.full_fixed, c.reduced_fixed, c.full_adapted, c.reduced_adapted});
}

std::map<std::string, std::string> build_report(const ReportInputs& in) {
  std::map<std::string, std::string> files;
  const NetworkSpec& net = in.network;
  const Index total = net.param_count();
  const ReportBlock& s = in.settings;
  const bool op = net.kind == NetworkKind::DeepONet;

  std::vector<MethodSummary> summaries{summarize_vi(in.posterior)};
  std::vector<CostRow> costs;
  for (const auto& [name, a] : in.archives) {
    summaries.push_back(summarize_archive(a, total, name));
    costs.push_back(cost_row(a, net, in.val, name, s.max_draws));
  }
  files["parameters.csv"] = parameter_table_csv(net, summaries);
  if (!costs.empty()) {
    files["cost.csv"] = cost_table_csv(costs);
    files["timing.csv"] = timing_table_csv(costs);
  }

  // Band points: an x grid for function data, the query grid of the first
  // validation field for operator data.
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd queries;
  Eigen::MatrixXd points;
  std::vector<std::string> coords;
  if (op) {
    if (in.val.count() == 0) throw ConfigError("report: empty validation set");
    inputs = in.val.inputs.topRows(1);
    queries = in.val.queries;
    points = queries.leftCols(std::min<Index>(2, queries.cols()));
    coords = {"x", "t"};
    coords.resize(static_cast<std::size_t>(points.cols()));
  } else {
    inputs = Eigen::VectorXd::LinSpaced(s.band_points, s.band_lo, s.band_hi);
    if (net.mlp.input_dim != 1) {
      inputs = in.val.inputs;
      for (Index c = 0; c < inputs.cols(); ++c) coords.push_back("x" + std::to_string(c));
    } else {
      coords = {"x"};
    }
    points = inputs;
  }
  std::mt19937_64 rng(in.seed);
  const Eigen::MatrixXd vi_preds =
      predictive_samples(in.posterior, net, inputs, queries, s.max_draws, rng);
  files["band_vi.csv"] = band_csv(points, prediction_band(vi_preds), coords);
  for (const auto& [name, a] : in.archives) {
    const Eigen::MatrixXd p = predict_draws(net, full_draws(a, total, s.max_draws), inputs, queries);
    files["band_" + file_stem(name) + ".csv"] = band_csv(points, prediction_band(p), coords);
    if (!s.scatter_x.empty()) {
      files["scatter_" + file_stem(name) + ".csv"] = joint_scatter_csv(a, net, s.scatter_x, s.scatter_y);
    }
    const ChainDiagnostics d = diagnostics(a);
    std::string diag = "index,name,ess,rhat\n";
    const ParamLayout layout = net.layout();
    for (std::size_t k = 0; k < a.free_indices.size(); ++k) {
      const Index i = a.free_indices[k];
      const Index c = static_cast<Index>(k);
      diag += std::to_string(i) + "," + layout.name_of(i) + "," + format_double(d.ess(c)) + "," +
              (d.rhat.size() ? format_double(d.rhat(c)) : std::string("nan")) + "\n";
    }
    files["diagnostics_" + file_stem(name) + ".csv"] = diag;
  }

  if (op) {
    std::string rel = "method,mean_relative_l2\n";
    const Eigen::MatrixXd mu_pred = evaluate(net, in.posterior.mu, in.val);
    rel += "VI," + format_double(mean_relative_l2(mu_pred, in.val.targets)) + "\n";
    for (const auto& [name, a] : in.archives) {
      const Eigen::MatrixXd p =
          predict_draws(net, full_draws(a, total, s.max_draws), in.val.inputs, in.val.queries);
      const Eigen::RowVectorXd m = p.colwise().mean();
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pm =
          Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
              m.data(), in.val.targets.rows(), in.val.targets.cols());
      rel += name + "," + format_double(mean_relative_l2(pm, in.val.targets)) + "\n";
    }
    files["relative_l2.csv"] = rel;
  }
  return files;
}

}  // namespace vihmc
