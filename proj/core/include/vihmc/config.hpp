#pragma once

// Declarative experiment configuration, stored as JSON.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "vihmc/datagen.hpp"
#include "vihmc/hmc.hpp"
#include "vihmc/network.hpp"
#include "vihmc/sensitivity.hpp"
#include "vihmc/vi.hpp"

namespace vihmc {

enum class DataKind { Sinusoid, Burgers, Path };

struct DataSource {
  DataKind kind = DataKind::Sinusoid;
  SinusoidSpec sinusoid;
  BurgersSpec burgers;
  /// Trunk input width for operator data; columns past (x, t) are zero.
  int trunk_dim = 2;
  /// Dataset directory written by gen-data.
  std::string path;

  bool operator==(const DataSource&) const = default;
};

struct ViBlock {
  TrainConfig train;
  double sigma0 = 0.05;
  double init_scale = 1.0;
  /// Seeds the initial means.
  std::uint64_t init_seed = 0;
  /// Seeds the reparameterization draws and batch order.
  std::uint64_t seed = 0;

  bool operator==(const ViBlock&) const = default;
};

struct SensitivityBlock {
  double tau = 0.9;
  ThresholdRule rule = ThresholdRule::AtLeast;
  int histogram_bins = 50;

  bool operator==(const SensitivityBlock&) const = default;
};

enum class SampleMode { Full, Reduced };
std::string to_string(SampleMode m);
SampleMode parse_sample_mode(const std::string& s);

enum class InitKind { Prior, ViJitter };

/// Leapfrog count: fixed, or pi * v / (2 eps) from a posterior variance v.
struct LeapfrogBlock {
  enum class Kind { Fixed, Heuristic };
  Kind kind = Kind::Fixed;
  int steps = 10;
  /// "max" or "median" of the VI variances of the sampled parameters, or
  /// "value" to use `variance` as given.
  std::string variance_choice = "max";
  double variance = 0.0;
  /// Use the standard deviation in place of the variance.
  bool use_std = false;
  int max_steps = 100000;

  bool operator==(const LeapfrogBlock&) const = default;
};

struct HmcBlock {
  SampleMode mode = SampleMode::Reduced;
  /// Step size for reduced-space sampling.
  double step_size = 1e-3;
  /// Step size for full-space sampling.
  double full_step_size = 1e-3;
  AdaptConfig adapt;
  LeapfrogBlock leapfrog;
  int chains = 1;
  int samples = 1000;
  int burn_in = 0;
  InitKind init = InitKind::Prior;
  double init_scale = 0.0;
  std::uint64_t seed = 0;
  /// Diagonal mass from the inverse VI variances instead of identity.
  bool vi_mass = false;
  double divergence_threshold = 1000.0;

  [[nodiscard]] double step_for(SampleMode m) const {
    return m == SampleMode::Full ? full_step_size : step_size;
  }
  bool operator==(const HmcBlock&) const = default;
};

struct ReportBlock {
  /// Prediction-band inputs for function data: `band_points` equally spaced
  /// points on [band_lo, band_hi].
  double band_lo = -1.2;
  double band_hi = 1.2;
  int band_points = 200;
  /// Named parameter pair for the joint-scatter CSV (empty: skipped).
  std::string scatter_x;
  std::string scatter_y;
  /// Network draws used for prediction bands.
  int max_draws = 1000;

  bool operator==(const ReportBlock&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  NetworkSpec network;
  DataSource data;
  PriorSpec prior;
  LikelihoodSpec likelihood;
  ViBlock vi;
  std::optional<SensitivityBlock> sensitivity;
  /// Partition artifact used instead of a sensitivity block.
  std::string partition_path;
  HmcBlock hmc;
  ReportBlock report;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON (fixed key order, round-trip exact doubles).
std::string serialize_config(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

/// JSON text of a data source block.
std::string serialize_data(const DataSource& data);

/// Network spec to and from its JSON text.
std::string serialize_network(const NetworkSpec& spec);
NetworkSpec parse_network(const std::string& text);

}  // namespace vihmc
