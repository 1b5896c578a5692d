#pragma once

// Mean-field Gaussian variational inference (Bayes by backprop).

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vihmc/autodiff.hpp"
#include "vihmc/network.hpp"

namespace vihmc {

/// Zero-mean isotropic Gaussian prior on every parameter.
struct PriorSpec {
  double variance = 1.0;

  void validate() const;
  bool operator==(const PriorSpec&) const = default;
};

/// Gaussian observation model y ~ N(F(x), noise_variance).
struct LikelihoodSpec {
  double noise_variance = 1.0;

  void validate() const;
  bool operator==(const LikelihoodSpec&) const = default;
};

/// q(theta) = prod_i N(mu_i, sigma_i^2) with sigma_i = softplus(rho_i).
struct VariationalPosterior {
  Eigen::VectorXd mu;
  Eigen::VectorXd rho;
  PriorSpec prior;

  [[nodiscard]] Index size() const { return mu.size(); }
  [[nodiscard]] Eigen::VectorXd sigma() const;
  /// Throws ConfigError unless lengths match `n` and every sigma is positive.
  void validate(Index n) const;

  /// Means from fan-in uniform initialization, all sigma equal to `sigma0`.
  static VariationalPosterior initialize(const NetworkSpec& spec, const PriorSpec& prior,
                                         double sigma0, std::mt19937_64& rng,
                                         double init_scale = 1.0);
};

/// rho such that softplus(rho) == sigma.
double inverse_softplus(double sigma);

/// Closed-form KL(q || prior).
double kl_gaussian(const VariationalPosterior& q);

/// Sum over observations of -log N(y | f, noise_variance).
double gaussian_nll(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets,
                    const LikelihoodSpec& likelihood);

/// A recorded loss evaluation. `mu` and `rho` are the differentiable leaves.
struct ElboEvaluation {
  std::unique_ptr<ad::Tape> tape;
  ad::Var mu;
  ad::Var rho;
  ad::Var loss;
  double kl = 0.0;
  double nll = 0.0;

  [[nodiscard]] double value() const { return loss.scalar(); }
  /// Runs the reverse sweep; returns (d/dmu, d/drho) stacked.
  Eigen::VectorXd gradient();
};

/// kl_scale * KL(q || prior) + mean over the draws of the data NLL, with
/// theta = mu + sigma * eps for each supplied standard-normal draw `eps`.
ElboEvaluation elbo_loss_with_draws(const VariationalPosterior& q, const NetworkSpec& net,
                                    const Dataset& data, const LikelihoodSpec& likelihood,
                                    const std::vector<Eigen::VectorXd>& draws,
                                    double kl_scale = 1.0);

/// Same as above with `n_mc` fresh draws from `rng`.
ElboEvaluation elbo_loss(const VariationalPosterior& q, const NetworkSpec& net,
                         const Dataset& data, const LikelihoodSpec& likelihood, int n_mc,
                         std::mt19937_64& rng, double kl_scale = 1.0);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

/// Multiplies the learning rate by `factor` once the validation loss has not
/// improved (relative `threshold`) for more than `patience` epochs.
struct PlateauConfig {
  bool enabled = true;
  double factor = 0.1;
  int patience = 50;
  double threshold = 1e-4;
  double min_learning_rate = 0.0;

  bool operator==(const PlateauConfig&) const = default;
};

struct TrainConfig {
  int epochs = 1000;
  int n_mc = 1;
  /// Rows per mini-batch; 0 means full batch.
  int batch_size = 0;
  AdamConfig adam;
  PlateauConfig plateau;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  int epoch = 0;
  double train_elbo = 0.0;  // stochastic loss summed over the epoch's batches
  double val_elbo = 0.0;    // KL + validation NLL at theta = mu
  double train_mse = 0.0;   // at theta = mu
  double val_mse = 0.0;     // at theta = mu
  double learning_rate = 0.0;
};

struct TrainResult {
  VariationalPosterior posterior;
  std::vector<EpochRecord> history;
  bool diverged = false;
  int failed_epoch = -1;
  std::string message;
};

/// Adam on (mu, rho). On a non-finite loss, stops and returns the last finite
/// posterior with `diverged` set.
TrainResult train_vi(const VariationalPosterior& q0, const NetworkSpec& net, const Dataset& train,
                     const Dataset& val, const LikelihoodSpec& likelihood,
                     const TrainConfig& config, std::mt19937_64& rng);

/// Row s holds the network output at theta_s ~ q, flattened row-major.
Eigen::MatrixXd predictive_samples(const VariationalPosterior& q, const NetworkSpec& net,
                                   const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& queries,
                                   int n_samples, std::mt19937_64& rng);

double mean_squared_error(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

}  // namespace vihmc
