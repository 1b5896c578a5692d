#pragma once

// Summary tables and plot-ready CSV text built from posteriors and archives.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "vihmc/hmc.hpp"
#include "vihmc/network.hpp"
#include "vihmc/vi.hpp"

namespace vihmc {

/// Per-parameter posterior mean and standard deviation over the full
/// parameter vector. Frozen coordinates carry their pinned value and sd 0.
struct MethodSummary {
  std::string method;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

MethodSummary summarize_vi(const VariationalPosterior& q, const std::string& method = "VI");
/// Throws QualityError when the archive holds no kept draws.
MethodSummary summarize_archive(const ChainArchive& archive, Index total,
                                const std::string& method);

/// Full parameter vectors (one per row) for up to `max_draws` pooled good
/// draws, evenly thinned.
Eigen::MatrixXd full_draws(const ChainArchive& archive, Index total, int max_draws);
/// Row s: network output for theta = thetas.row(s), flattened row-major.
Eigen::MatrixXd predict_draws(const NetworkSpec& net, const Eigen::MatrixXd& thetas,
                              const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& queries = {});

/// Parameter table: one row per parameter, mean and sd columns per method.
std::string parameter_table_csv(const NetworkSpec& net, const std::vector<MethodSummary>& methods);

struct CostRow {
  std::string method;
  double acceptance = 0.0;
  double mse = 0.0;
  double seconds_per_sample = 0.0;
  double step_size = 0.0;
  int leapfrog_steps = 0;
  Index sampled_parameters = 0;
};

/// Acceptance, MSE of the posterior-mean prediction on `data` and time per sample.
CostRow cost_row(const ChainArchive& archive, const NetworkSpec& net, const Dataset& data,
                 const std::string& method, int max_draws);
/// Deterministic columns only; wall-clock figures go to timing_table_csv.
std::string cost_table_csv(const std::vector<CostRow>& rows);
std::string timing_table_csv(const std::vector<CostRow>& rows);

/// Predictive mean, sd and mean +- 3 sd per output point.
struct PredictionBand {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  [[nodiscard]] Eigen::VectorXd lower() const { return mean - 3.0 * sd; }
  [[nodiscard]] Eigen::VectorXd upper() const { return mean + 3.0 * sd; }
};

PredictionBand prediction_band(const Eigen::MatrixXd& predictions);
/// Columns: the coordinates of each point, then mean, sd, lower, upper.
std::string band_csv(const Eigen::MatrixXd& points, const PredictionBand& band,
                     const std::vector<std::string>& coordinate_names);

/// Flat index of a parameter from its layout name (e.g. "layer0.weight[1,0]")
/// or its plain index; throws ConfigError listing the available names.
Index parameter_index(const NetworkSpec& net, const std::string& name);
/// Draws of two named parameters, one row per kept sample.
std::string joint_scatter_csv(const ChainArchive& archive, const NetworkSpec& net,
                              const std::string& x, const std::string& y);

/// (1/N) sum_n ||Y_n - P_n||_2 / ||Y_n||_2 over rows.
double mean_relative_l2(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

}  // namespace vihmc
