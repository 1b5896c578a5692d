// vihmc: config-driven VI / sensitivity / HMC pipeline.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vihmc/config.hpp"
#include "vihmc/errors.hpp"
#include "vihmc/hash.hpp"
#include "vihmc/io.hpp"
#include "vihmc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vihmc;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kQuality = 3 };

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Common {
  std::string config;
  std::string out;
};

fs::path run_dir(const Common& c, const ExperimentConfig* cfg) {
  if (!c.out.empty()) return c.out;
  return fs::path("runs") / (cfg ? cfg->name : std::string("report"));
}

/// Loads the run directory's manifest (if any) so stages accumulate.
RunManifest open_manifest(const fs::path& dir, const std::string& command, const std::string& chash) {
  RunManifest m;
  const fs::path p = dir / "manifest.json";
  if (fs::exists(p)) m = load_manifest(p);
  m.tool_version = kToolVersion;
  if (!chash.empty()) m.config_hash = chash;
  m.command = m.command.empty() ? command : m.command + " " + command;
  return m;
}

void record(RunManifest& m, const std::string& role, const fs::path& dir, const fs::path& rel) {
  std::erase_if(m.artifacts, [&](const ArtifactEntry& e) { return e.role == role; });
  m.add(role, dir, rel);
}

PosteriorArtifact load_compatible(const fs::path& path, const ExperimentConfig& cfg) {
  PosteriorArtifact a = load_posterior(path);
  const std::string want = spec_hash(cfg.network);
  const std::string have = spec_hash(a.network);
  if (want != have) {
    throw ConfigError("posterior " + path.string() + " was trained for network " + have +
                      " but the config describes network " + want);
  }
  return a;
}

ParameterPartition resolve_partition(const ExperimentConfig& cfg, const VariationalPosterior& q,
                                     const Dataset& train, const std::string& partition_arg,
                                     const fs::path& base) {
  std::string p = partition_arg.empty() ? cfg.partition_path : partition_arg;
  if (!p.empty()) {
    fs::path path = p;
    if (partition_arg.empty() && path.is_relative()) path = base / path;
    ParameterPartition part = load_partition(path, spec_hash(cfg.network));
    if (part.total != cfg.network.param_count()) {
      throw ConfigError("partition covers " + std::to_string(part.total) +
                        " parameters, network has " + std::to_string(cfg.network.param_count()));
    }
    return part;
  }
  return run_sensitivity(cfg, q, train).partition;
}

int cmd_gen_data(const Common& c) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = load_config(c.config);
  if (cfg.data.kind == DataKind::Path) {
    throw ConfigError("gen-data: data block names a path, not a generator");
  }
  const fs::path dir = run_dir(c, &cfg);
  fs::create_directories(dir);
  RunLock lock(dir);
  const ExperimentData d = load_data(cfg, fs::path(c.config).parent_path());
  save_dataset(dir / "data", d.train, d.val, d.spec_echo);
  RunManifest m = open_manifest(dir, "gen-data", config_hash(cfg));
  record(m, "data", dir, "data");
  m.stage_seconds["gen-data"] = seconds_since(t0);
  save_manifest(dir / "manifest.json", m);
  std::cout << "data: " << d.train.count() << " train / " << d.val.count() << " val -> "
            << (dir / "data").string() << "\n";
  return kOk;
}

int cmd_train_vi(const Common& c) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = load_config(c.config);
  const fs::path dir = run_dir(c, &cfg);
  fs::create_directories(dir);
  RunLock lock(dir);
  const ExperimentData d = load_data(cfg, fs::path(c.config).parent_path());
  const TrainResult r = run_train_vi(cfg, d.train, d.val);
  save_history(dir / "history.csv", r.history);
  RunManifest m = open_manifest(dir, "train-vi", config_hash(cfg));
  record(m, "history", dir, "history.csv");
  if (r.diverged) {
    m.notes["train-vi"] = r.message;
    m.stage_seconds["train-vi"] = seconds_since(t0);
    save_manifest(dir / "manifest.json", m);
    std::cerr << "train-vi: diverged at epoch " << r.failed_epoch << ": " << r.message << "\n";
    return kNumerical;
  }
  save_posterior(dir / "posterior.json", {r.posterior, cfg.network, config_hash(cfg), cfg.vi.seed});
  record(m, "posterior", dir, "posterior.json");
  m.stage_seconds["train-vi"] = seconds_since(t0);
  save_manifest(dir / "manifest.json", m);
  if (!r.history.empty()) {
    const EpochRecord& last = r.history.back();
    std::cout << "epochs " << r.history.size() << ", train ELBO " << last.train_elbo
              << ", val MSE " << last.val_mse << "\n";
  }
  std::cout << "posterior -> " << (dir / "posterior.json").string() << "\n";
  return kOk;
}

int cmd_sensitivity(const Common& c, const std::string& posterior, std::optional<double> tau) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = load_config(c.config);
  SensitivityBlock block = cfg.sensitivity.value_or(SensitivityBlock{});
  if (tau) block.tau = *tau;
  cfg.sensitivity = block;
  cfg.validate();
  const PosteriorArtifact pa = load_compatible(posterior, cfg);
  const fs::path dir = run_dir(c, &cfg);
  fs::create_directories(dir);
  RunLock lock(dir);
  const ExperimentData d = load_data(cfg, fs::path(c.config).parent_path());
  const SensitivityResult r = run_sensitivity(cfg, pa.posterior, d.train);
  save_sensitivity(dir / "sensitivity", r.report, cfg.network, block.histogram_bins);
  save_partition(dir / "partition.json", r.partition, spec_hash(cfg.network));
  RunManifest m = open_manifest(dir, "sensitivity", config_hash(cfg));
  record(m, "sensitivity", dir, "sensitivity");
  record(m, "partition", dir, "partition.json");
  m.stage_seconds["sensitivity"] = seconds_since(t0);
  save_manifest(dir / "manifest.json", m);
  std::cout << "tau " << block.tau << ": " << r.partition.selected() << " of "
            << r.partition.total << " parameters selected\n";
  if (r.partition.degenerate) {
    std::cerr << "sensitivity: every score is zero\n";
    return kQuality;
  }
  return kOk;
}

int cmd_sample(const Common& c, const std::string& posterior, const std::string& partition,
               const std::string& mode_arg, const std::string& name) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = load_config(c.config);
  if (!mode_arg.empty()) cfg.hmc.mode = parse_sample_mode(mode_arg);
  {
    ExperimentConfig check = cfg;
    if (!partition.empty()) check.partition_path = partition;
    check.validate();
  }
  const PosteriorArtifact pa = load_compatible(posterior, cfg);
  const fs::path dir = run_dir(c, &cfg);
  fs::create_directories(dir);
  RunLock lock(dir);
  const ExperimentData d = load_data(cfg, fs::path(c.config).parent_path());
  std::optional<ParameterPartition> part;
  if (cfg.hmc.mode == SampleMode::Reduced) {
    part = resolve_partition(cfg, pa.posterior, d.train, partition, fs::path(c.config).parent_path());
  }
  const SamplingPlan plan =
      plan_sampling(cfg, pa.posterior, d.train, cfg.hmc.mode, part ? &*part : nullptr);
  const ChainArchive a = run_sample(cfg, plan);
  const std::string rel = name.empty() ? "archive_" + to_string(cfg.hmc.mode) : name;
  auto extra = archive_extra(plan);
  if (!partition.empty()) extra["partition_hash"] = file_hash(partition);
  save_archive(dir / rel, a, extra);
  RunManifest m = open_manifest(dir, "sample", config_hash(cfg));
  record(m, "archive:" + rel, dir, rel);
  m.stage_seconds["sample:" + rel] = seconds_since(t0);
  m.notes["sample:" + rel] = archive_extra(plan).at("step_provenance") + "; leapfrog " +
                             plan.steps_provenance;
  save_manifest(dir / "manifest.json", m);

  std::cout << to_string(cfg.hmc.mode) << " sampling of " << a.dim() << " parameters, "
            << a.chains.size() << " chain(s)\n";
  for (std::size_t k = 0; k < a.chains.size(); ++k) {
    const ChainRecord& ch = a.chains[k];
    std::cout << "  chain " << k << ": acceptance " << ch.acceptance(a.burn_in) << ", step "
              << ch.adapted_step_size << ", L " << ch.leapfrog_steps << ", " << ch.seconds << " s"
              << (ch.bad ? " [bad: " + ch.bad_reason + "]" : std::string()) << "\n";
  }
  if (a.good_chains() == 0) {
    std::cerr << "sample: every chain was flagged bad\n";
    return kQuality;
  }
  return kOk;
}

int cmd_report(const Common& c, const std::vector<std::string>& archives,
               const std::string& posterior, const std::string& data, std::uint64_t seed) {
  const auto t0 = Clock::now();
  if (archives.empty()) throw ConfigError("report: at least one --archive is required");
  ReportInputs in;
  const PosteriorArtifact pa = load_posterior(posterior);
  in.network = pa.network;
  in.posterior = pa.posterior;
  in.seed = seed;
  std::optional<ExperimentConfig> cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  for (const auto& path : archives) {
    std::map<std::string, std::string> extra;
    ChainArchive a = load_archive(path, &extra);
    if (!cfg && !a.config_snapshot.empty()) cfg = parse_config(a.config_snapshot);
    std::string method = fs::path(path).filename().string();
    if (auto it = extra.find("mode"); it != extra.end()) {
      method = it->second == "full" ? "HMC" : "VI-HMC";
      for (const auto& [other, _] : in.archives) {
        if (other == method) method += "_" + fs::path(path).filename().string();
      }
    }
    in.archives.emplace_back(method, std::move(a));
  }
  if (cfg) in.settings = cfg->report;
  in.val = load_dataset(data).second;
  if (cfg && spec_hash(cfg->network) != spec_hash(pa.network)) {
    throw ConfigError("report: posterior network " + spec_hash(pa.network) +
                      " differs from archive network " + spec_hash(cfg->network));
  }
  const auto files = build_report(in);
  const fs::path dir = run_dir(c, cfg ? &*cfg : nullptr);
  fs::create_directories(dir / "report");
  RunLock lock(dir);
  RunManifest m = open_manifest(dir, "report", cfg ? config_hash(*cfg) : std::string());
  for (const auto& [file, text] : files) {
    write_text(dir / "report" / file, text);
    if (!is_timing_file(file)) record(m, "report:" + file, dir, fs::path("report") / file);
    std::cout << "  " << (dir / "report" / file).string() << "\n";
  }
  m.stage_seconds["report"] = seconds_since(t0);
  save_manifest(dir / "manifest.json", m);
  return kOk;
}

int cmd_cost_compare(const Common& c, const std::string& posterior, const std::string& partition) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = load_config(c.config);
  const fs::path dir = run_dir(c, &cfg);
  fs::create_directories(dir);
  RunLock lock(dir);
  const ExperimentData d = load_data(cfg, fs::path(c.config).parent_path());
  VariationalPosterior q;
  if (!posterior.empty()) {
    q = load_compatible(posterior, cfg).posterior;
  } else {
    const TrainResult r = run_train_vi(cfg, d.train, d.val);
    if (r.diverged) throw NumericalError("cost-compare: VI training diverged: " + r.message);
    q = r.posterior;
  }
  const ParameterPartition part =
      resolve_partition(cfg, q, d.train, partition, fs::path(c.config).parent_path());
  const CostComparison cc = run_cost_compare(cfg, q, part, d.train, d.val);
  write_text(dir / "cost_compare.csv", cost_compare_csv(cc));
  write_text(dir / "timing_cost_compare.csv", cost_compare_timing_csv(cc));
  RunManifest m = open_manifest(dir, "cost-compare", config_hash(cfg));
  record(m, "cost-compare", dir, "cost_compare.csv");
  m.stage_seconds["cost-compare"] = seconds_since(t0);
  save_manifest(dir / "manifest.json", m);
  std::cout << cost_compare_csv(cc) << cost_compare_timing_csv(cc);
  return kOk;
}

int cmd_verify(const std::string& manifest) {
  verify_manifest(manifest);
  std::cout << "manifest ok\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VI + sensitivity-reduced HMC for small Bayesian networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("-c,--config", common.config, "Experiment config (JSON)");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", common.out, "Run directory (default runs/<name>)");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate and store the configured dataset");
  add_common(gen, true);

  auto* train = app.add_subcommand("train-vi", "Train the mean-field Gaussian posterior");
  add_common(train, true);

  std::string posterior;
  std::string partition;
  std::optional<double> tau;
  auto* sens = app.add_subcommand("sensitivity", "Rank parameters and select the sampled subset");
  add_common(sens, true);
  sens->add_option("--posterior", posterior, "posterior.json from train-vi")->required();
  sens->add_option("--tau", tau, "Variance-captured threshold in (0, 1]");

  std::string mode;
  std::string archive_name;
  auto* sample = app.add_subcommand("sample", "Run HMC on the full or reduced posterior");
  add_common(sample, true);
  sample->add_option("--posterior", posterior, "posterior.json from train-vi")->required();
  sample->add_option("--partition", partition, "partition.json from sensitivity");
  sample->add_option("--mode", mode, "Override hmc.mode")->check(CLI::IsMember({"full", "reduced"}));
  sample->add_option("--name", archive_name, "Archive directory name inside the run directory");

  std::vector<std::string> archives;
  std::string data;
  std::uint64_t seed = 0;
  auto* report = app.add_subcommand("report", "Summary tables and prediction bands");
  add_common(report, false);
  report->add_option("--archive", archives, "Archive directories")->required();
  report->add_option("--posterior", posterior, "posterior.json from train-vi")->required();
  report->add_option("--data", data, "Dataset directory from gen-data")->required();
  report->add_option("--seed", seed, "Seed for the VI predictive draws");

  auto* cost = app.add_subcommand("cost-compare", "Full vs reduced sampling cost");
  add_common(cost, true);
  cost->add_option("--posterior", posterior, "posterior.json (trained if omitted)");
  cost->add_option("--partition", partition, "partition.json (computed if omitted)");

  std::string manifest;
  auto* verify = app.add_subcommand("verify", "Check a run manifest against its artifacts");
  verify->add_option("manifest", manifest, "manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen_data(common);
    if (*train) return cmd_train_vi(common);
    if (*sens) return cmd_sensitivity(common, posterior, tau);
    if (*sample) return cmd_sample(common, posterior, partition, mode, archive_name);
    if (*report) return cmd_report(common, archives, posterior, data, seed);
    if (*cost) return cmd_cost_compare(common, posterior, partition);
    if (*verify) return cmd_verify(manifest);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const QualityError& e) {
    std::cerr << "quality gate: " << e.what() << "\n";
    return kQuality;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
