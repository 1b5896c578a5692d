#pragma once

// Pipeline stages shared by the command line tool and the tests. Every stage
// is a pure function of the configuration, its inputs and the named seeds.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vihmc/config.hpp"
#include "vihmc/hmc.hpp"
#include "vihmc/report.hpp"
#include "vihmc/sensitivity.hpp"
#include "vihmc/target.hpp"
#include "vihmc/vi.hpp"

namespace vihmc {

inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentData {
  Dataset train;
  Dataset val;
  /// JSON echo of the generator spec (or the source path).
  std::string spec_echo;
};

/// Generates the configured dataset, or loads it (paths relative to `base`).
ExperimentData load_data(const ExperimentConfig& config, const std::filesystem::path& base = {});

/// Initial posterior from vi.init_seed, then training driven by vi.seed.
TrainResult run_train_vi(const ExperimentConfig& config, const Dataset& train, const Dataset& val);

struct SensitivityResult {
  SensitivityReport report;
  ParameterPartition partition;
};

/// Scores on the training data; partition at the configured tau and rule.
SensitivityResult run_sensitivity(const ExperimentConfig& config, const VariationalPosterior& q,
                                  const Dataset& train);

/// Everything `sample_chains` needs, with the provenance of the step size and
/// leapfrog count.
struct SamplingPlan {
  SampleMode mode = SampleMode::Reduced;
  std::shared_ptr<const TargetPosterior> target;
  HmcConfig hmc;
  std::vector<Eigen::VectorXd> inits;
  std::string step_provenance;
  std::string steps_provenance;
};

/// Builds the full or reduced target (reduced needs `partition`), the HMC
/// settings and the chain start points.
SamplingPlan plan_sampling(const ExperimentConfig& config, const VariationalPosterior& q,
                           const Dataset& train, SampleMode mode,
                           const ParameterPartition* partition);

/// Runs the plan and stamps the archive with the free/frozen maps and the
/// config snapshot. Chains flagged bad are kept; callers decide.
ChainArchive run_sample(const ExperimentConfig& config, const SamplingPlan& plan);

/// Archive metadata recorded next to the draws.
std::map<std::string, std::string> archive_extra(const SamplingPlan& plan);

struct CostComparison {
  /// Both modes at the shared fixed step (`hmc.step_size`).
  CostRow full_fixed;
  CostRow reduced_fixed;
  /// Both modes with step-size adaptation at the configured target.
  CostRow full_adapted;
  CostRow reduced_adapted;
};

CostComparison run_cost_compare(const ExperimentConfig& config, const VariationalPosterior& q,
                                const ParameterPartition& partition, const Dataset& train,
                                const Dataset& val);
std::string cost_compare_csv(const CostComparison& c);
std::string cost_compare_timing_csv(const CostComparison& c);

struct ReportInputs {
  NetworkSpec network;
  VariationalPosterior posterior;
  /// (method name, archive) pairs.
  std::vector<std::pair<std::string, ChainArchive>> archives;
  Dataset val;
  ReportBlock settings;
  std::uint64_t seed = 0;
};

/// File name -> CSV text.
std::map<std::string, std::string> build_report(const ReportInputs& in);

}  // namespace vihmc
