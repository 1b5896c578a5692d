#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "vihmc/hmc.hpp"

namespace vihmc {

struct ChainDiagnostics {
  /// Post-burn-in acceptance over all chains.
  double acceptance_rate = 0.0;
  /// Rank-normalized split R-hat per coordinate; empty with fewer than two chains.
  Eigen::VectorXd rhat;
  /// Multi-chain autocorrelation ESS per coordinate.
  Eigen::VectorXd ess;
  double seconds_per_sample = 0.0;
  int bad_chains = 0;
  std::string notice;
};

/// Diagnostics over the good chains of an archive (all chains if none is good).
ChainDiagnostics diagnostics(const ChainArchive& archive);

/// Columns are chains, rows are draws.
double split_rhat(const Eigen::MatrixXd& draws);
/// max(bulk, tail) rank-normalized split R-hat.
double rank_normalized_split_rhat(const Eigen::MatrixXd& draws);
/// Geyer initial-monotone-sequence ESS across chains. Antithetic chains can
/// exceed the draw count; the estimate is only bounded by S log10 S.
double effective_sample_size(const Eigen::MatrixXd& draws);

/// Biased autocovariance at lags 0..n-1.
Eigen::VectorXd autocovariance(const Eigen::VectorXd& x);

}  // namespace vihmc
