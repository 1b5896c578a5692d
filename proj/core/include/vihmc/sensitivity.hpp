#pragma once

// First-order variance sensitivities of the network output to each parameter
// under a mean-field posterior, and the sensitive/frozen parameter partition
// derived from them.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "vihmc/network.hpp"
#include "vihmc/vi.hpp"

namespace vihmc {

struct SensitivityReport {
  /// S_i^2 = sigma_i^2 * mean over observations of (dF_mu/dtheta_i)^2.
  Eigen::VectorXd scores;
  /// Parameter indices by descending score; ties by ascending index.
  std::vector<Index> ranking;
  /// cumulative(n) = fraction of the total captured by the top n+1 parameters.
  Eigen::VectorXd cumulative;
  double total = 0.0;

  /// Rank position of each parameter (inverse of `ranking`).
  [[nodiscard]] std::vector<Index> rank_of() const;
};

/// Builds the ranking and cumulative curve for precomputed scores.
SensitivityReport make_report(const Eigen::VectorXd& scores);

/// Gradients at theta = mu, one reverse sweep per (observation, output
/// component). For operator data an observation is an (input function,
/// query point) pair.
SensitivityReport compute_sensitivities(const VariationalPosterior& q, const NetworkSpec& net,
                                        const Dataset& data);

/// How the cutoff count is read from the cumulative curve.
enum class ThresholdRule {
  AtLeast,  // smallest N with cumulative >= tau
  AtMost,   // largest N with cumulative <= tau
};

std::string to_string(ThresholdRule rule);
ThresholdRule parse_threshold_rule(const std::string& s);

struct ParameterPartition {
  Index total = 0;
  /// Ascending flat indices of the sampled parameters.
  std::vector<Index> sensitive;
  /// Ascending flat indices of the parameters pinned to their VI means.
  std::vector<Index> frozen;
  /// mu at `frozen`, same order.
  Eigen::VectorXd frozen_values;
  double tau = 1.0;
  ThresholdRule rule = ThresholdRule::AtLeast;
  /// Largest frozen score (0 when nothing is frozen).
  double cutoff = 0.0;
  /// Set when every score is zero and nothing could be selected.
  bool degenerate = false;

  [[nodiscard]] Index selected() const { return static_cast<Index>(sensitive.size()); }
  /// Checks that the two index sets are disjoint and cover [0, total).
  void validate() const;
  /// Partition that keeps every parameter free.
  static ParameterPartition all_free(Index total);
};

ParameterPartition select_partition(const SensitivityReport& report, const VariationalPosterior& q,
                                    double tau, ThresholdRule rule = ThresholdRule::AtLeast);

/// Scores reshaped to one block per layer and role.
struct LayerSensitivity {
  std::string layer_id;
  std::string role;
  Eigen::MatrixXd scores;

  [[nodiscard]] double total() const { return scores.sum(); }
};

std::vector<LayerSensitivity> layer_sensitivity_map(const SensitivityReport& report,
                                                    const NetworkSpec& spec);

struct ScoreHistogram {
  double upper = 0.0;  // right edge of the last bin
  std::vector<Index> counts;
};

/// Equal-width bins over [0, q-quantile of the scores]; larger scores land in
/// the last bin.
ScoreHistogram score_histogram(const SensitivityReport& report, int bins, double quantile = 1.0);

}  // namespace vihmc
