#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "vihmc/network.hpp"
#include "vihmc/sensitivity.hpp"
#include "vihmc/vi.hpp"

namespace vihmc {

/// Unnormalized log density over a D-dimensional free vector. Implementations
/// must be safe to call concurrently from several chains.
class Target {
 public:
  virtual ~Target() = default;

  [[nodiscard]] virtual Index dim() const = 0;
  [[nodiscard]] virtual double log_density(const Eigen::VectorXd& x) const = 0;
  /// Returns the log density and writes its gradient into `grad`.
  virtual double log_density_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const = 0;
};

/// Multivariate normal N(mean, covariance).
class GaussianTarget final : public Target {
 public:
  GaussianTarget(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance);

  [[nodiscard]] Index dim() const override { return mean_.size(); }
  [[nodiscard]] double log_density(const Eigen::VectorXd& x) const override;
  double log_density_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override;

  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& precision() const { return precision_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd precision_;
  double log_norm_ = 0.0;
};

/// log P(D | theta) + log P(theta) for a network with Gaussian likelihood and
/// zero-mean isotropic Gaussian prior. A reduced posterior samples only the
/// free coordinates; the rest are pinned to fixed values and the prior is
/// restricted to the free coordinates.
class TargetPosterior final : public Target {
 public:
  TargetPosterior(NetworkSpec net, std::shared_ptr<const Dataset> data, PriorSpec prior,
                  LikelihoodSpec likelihood);

  [[nodiscard]] Index dim() const override { return static_cast<Index>(free_.size()); }
  [[nodiscard]] double log_density(const Eigen::VectorXd& x) const override;
  double log_density_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override;

  /// Full parameter vector with `free` written into the free coordinates.
  [[nodiscard]] Eigen::VectorXd assemble(const Eigen::VectorXd& free) const;
  /// Free coordinates of a full parameter vector.
  [[nodiscard]] Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;

  [[nodiscard]] bool reduced() const { return !frozen_.empty(); }
  [[nodiscard]] const std::vector<Index>& free_indices() const { return free_; }
  [[nodiscard]] const std::vector<Index>& frozen_indices() const { return frozen_; }
  [[nodiscard]] Eigen::VectorXd frozen_values() const;
  [[nodiscard]] const NetworkSpec& network() const { return net_; }
  [[nodiscard]] const Dataset& data() const { return *data_; }
  [[nodiscard]] const PriorSpec& prior() const { return prior_; }
  [[nodiscard]] const LikelihoodSpec& likelihood() const { return likelihood_; }

  friend TargetPosterior reduced_target(const TargetPosterior& full,
                                        const ParameterPartition& partition);

 private:
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;

  NetworkSpec net_;
  std::shared_ptr<const Dataset> data_;
  PriorSpec prior_;
  LikelihoodSpec likelihood_;
  std::vector<Index> free_;
  std::vector<Index> frozen_;
  Eigen::VectorXd base_;  // full-length vector holding the frozen values
};

/// Sampling target over the partition's sensitive coordinates with the frozen
/// coordinates pinned to the partition's frozen values.
TargetPosterior reduced_target(const TargetPosterior& full, const ParameterPartition& partition);

/// Same as target.log_density(theta); named for the pipeline stage.
double log_posterior(const Target& target, const Eigen::VectorXd& theta);

}  // namespace vihmc
