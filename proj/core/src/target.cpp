#include "vihmc/target.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "vihmc/errors.hpp"

namespace vihmc {

GaussianTarget::GaussianTarget(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance)
    : mean_(std::move(mean)) {
  if (covariance.rows() != mean_.size() || covariance.cols() != mean_.size()) {
    throw ConfigError("GaussianTarget: covariance shape does not match mean");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("GaussianTarget: covariance is not positive definite");
  }
  precision_ = llt.solve(Eigen::MatrixXd::Identity(mean_.size(), mean_.size()));
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) +
                      log_det);
}

double GaussianTarget::log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd d = x - mean_;
  return log_norm_ - 0.5 * d.dot(precision_ * d);
}

double GaussianTarget::log_density_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  const Eigen::VectorXd d = x - mean_;
  grad = -(precision_ * d);
  return log_norm_ + 0.5 * d.dot(grad);
}

TargetPosterior::TargetPosterior(NetworkSpec net, std::shared_ptr<const Dataset> data,
                                 PriorSpec prior, LikelihoodSpec likelihood)
    : net_(std::move(net)),
      data_(std::move(data)),
      prior_(prior),
      likelihood_(likelihood) {
  net_.validate();
  prior_.validate();
  likelihood_.validate();
  if (!data_) {
    throw ConfigError("TargetPosterior: no dataset");
  }
  if (data_->count() > 0) {
    check_inputs(net_, data_->inputs, data_->queries);
  }
  const Index n = net_.param_count();
  free_.resize(static_cast<std::size_t>(n));
  std::iota(free_.begin(), free_.end(), Index{0});
  base_ = Eigen::VectorXd::Zero(n);
}

Eigen::VectorXd TargetPosterior::assemble(const Eigen::VectorXd& free) const {
  if (free.size() != dim()) {
    throw ConfigError("free vector has " + std::to_string(free.size()) + " entries, target has " +
                      std::to_string(dim()));
  }
  Eigen::VectorXd full = base_;
  for (std::size_t k = 0; k < free_.size(); ++k) {
    full(free_[k]) = free(static_cast<Index>(k));
  }
  return full;
}

Eigen::VectorXd TargetPosterior::restrict(const Eigen::VectorXd& full) const {
  if (full.size() != base_.size()) {
    throw ConfigError("full vector length does not match the network");
  }
  Eigen::VectorXd free(dim());
  for (std::size_t k = 0; k < free_.size(); ++k) {
    free(static_cast<Index>(k)) = full(free_[k]);
  }
  return free;
}

Eigen::VectorXd TargetPosterior::frozen_values() const {
  Eigen::VectorXd v(static_cast<Index>(frozen_.size()));
  for (std::size_t k = 0; k < frozen_.size(); ++k) {
    v(static_cast<Index>(k)) = base_(frozen_[k]);
  }
  return v;
}

double TargetPosterior::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  if (x.size() != dim()) {
    throw ConfigError("log_posterior: expected " + std::to_string(dim()) + " free parameters, got " +
                      std::to_string(x.size()));
  }
  // One tape per thread; its node storage is reused across evaluations.
  thread_local ad::Tape tape;
  tape.clear();

  const double d = static_cast<double>(dim());
  const double s2 = prior_.variance;
  ad::Var free = tape.variable(x);
  ad::Var log_prior = (-0.5 / s2) * ad::dot(free, free) +
                      (-0.5 * d * std::log(2.0 * std::numbers::pi * s2));
  ad::Var total = log_prior;

  if (data_->count() > 0) {
    ad::Var theta = reduced() ? tape.scatter(free, free_, base_) : free;
    ad::Var out = build_network(tape, net_, theta, data_->inputs, data_->queries);
    const double var = likelihood_.noise_variance;
    const double n_obs = static_cast<double>(data_->targets.size());
    ad::Var resid = out - tape.constant(data_->targets);
    ad::Var log_lik = (-0.5 / var) * ad::sum(ad::square(resid)) +
                      (-0.5 * n_obs * std::log(2.0 * std::numbers::pi * var));
    total = log_lik + log_prior;
  }

  const double value = total.scalar();
  if (grad != nullptr) {
    if (std::isfinite(value)) {
      tape.backward(total);
      *grad = tape.adjoint(free).col(0);
    } else {
      grad->setConstant(dim(), std::numeric_limits<double>::quiet_NaN());
    }
  }
  return value;
}

double TargetPosterior::log_density(const Eigen::VectorXd& x) const { return evaluate(x, nullptr); }

double TargetPosterior::log_density_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  return evaluate(x, &grad);
}

TargetPosterior reduced_target(const TargetPosterior& full, const ParameterPartition& partition) {
  if (full.reduced()) {
    throw ConfigError("reduced_target: target is already reduced");
  }
  if (partition.total != full.network().param_count()) {
    throw ConfigError("reduced_target: partition covers " + std::to_string(partition.total) +
                      " parameters, network has " + std::to_string(full.network().param_count()));
  }
  partition.validate();
  TargetPosterior out = full;
  out.free_ = partition.sensitive;
  out.frozen_ = partition.frozen;
  out.base_ = Eigen::VectorXd::Zero(partition.total);
  for (std::size_t k = 0; k < partition.frozen.size(); ++k) {
    out.base_(partition.frozen[k]) = partition.frozen_values(static_cast<Index>(k));
  }
  return out;
}

double log_posterior(const Target& target, const Eigen::VectorXd& theta) {
  return target.log_density(theta);
}

}  // namespace vihmc
