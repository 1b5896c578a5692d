#include "vihmc/vi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "vihmc/errors.hpp"

namespace vihmc {

namespace {

Eigen::VectorXd standard_normal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (Index i = 0; i < n; ++i) {
    z(i) = normal(rng);
  }
  return z;
}

Eigen::RowVectorXd flatten_rows(const Eigen::MatrixXd& m) {
  Eigen::RowVectorXd out(m.size());
  for (Index r = 0; r < m.rows(); ++r) {
    out.segment(r * m.cols(), m.cols()) = m.row(r);
  }
  return out;
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

void PriorSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw ConfigError("prior variance must be positive");
  }
}

void LikelihoodSpec::validate() const {
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw ConfigError("likelihood variance must be positive");
  }
}

double inverse_softplus(double sigma) {
  if (!(sigma > 0.0)) {
    throw ConfigError("inverse_softplus needs sigma > 0");
  }
  // log(exp(s) - 1) = s + log(1 - exp(-s))
  return sigma + std::log(-std::expm1(-sigma));
}

Eigen::VectorXd VariationalPosterior::sigma() const {
  return rho.unaryExpr([](double r) { return ad::softplus(r); });
}

void VariationalPosterior::validate(Index n) const {
  if (mu.size() != n || rho.size() != n) {
    throw ConfigError("posterior has " + std::to_string(mu.size()) + " means and " +
                      std::to_string(rho.size()) + " scales; network has " + std::to_string(n) +
                      " parameters");
  }
  const Eigen::VectorXd s = sigma();
  for (Index i = 0; i < n; ++i) {
    if (!(s(i) > 0.0)) {
      throw ConfigError("posterior sigma " + std::to_string(i) + " is not positive");
    }
  }
  prior.validate();
}

VariationalPosterior VariationalPosterior::initialize(const NetworkSpec& spec,
                                                      const PriorSpec& prior, double sigma0,
                                                      std::mt19937_64& rng, double init_scale) {
  VariationalPosterior q;
  q.mu = init_params(spec, rng, init_scale);
  q.rho = Eigen::VectorXd::Constant(q.mu.size(), inverse_softplus(sigma0));
  q.prior = prior;
  return q;
}

double kl_gaussian(const VariationalPosterior& q) {
  const double s2 = q.prior.variance;
  const double log_s = 0.5 * std::log(s2);
  const Eigen::VectorXd sigma = q.sigma();
  double kl = 0.0;
  for (Index i = 0; i < q.size(); ++i) {
    const double si = sigma(i);
    kl += log_s - std::log(si) + (si * si + q.mu(i) * q.mu(i)) / (2.0 * s2) - 0.5;
  }
  return kl;
}

double gaussian_nll(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets,
                    const LikelihoodSpec& likelihood) {
  const double var = likelihood.noise_variance;
  const double n = static_cast<double>(targets.size());
  return 0.5 * (predictions - targets).squaredNorm() / var +
         0.5 * n * std::log(2.0 * std::numbers::pi * var);
}

double mean_squared_error(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  return (predictions - targets).squaredNorm() / static_cast<double>(targets.size());
}

Eigen::VectorXd ElboEvaluation::gradient() {
  tape->backward(loss);
  const Index n = mu.rows();
  Eigen::VectorXd g(2 * n);
  g.head(n) = tape->adjoint(mu).col(0);
  g.tail(n) = tape->adjoint(rho).col(0);
  return g;
}

ElboEvaluation elbo_loss_with_draws(const VariationalPosterior& q, const NetworkSpec& net,
                                    const Dataset& data, const LikelihoodSpec& likelihood,
                                    const std::vector<Eigen::VectorXd>& draws, double kl_scale) {
  if (data.count() == 0) {
    throw ConfigError("elbo_loss: empty dataset");
  }
  if (draws.empty()) {
    throw ConfigError("elbo_loss: n_mc must be at least 1");
  }
  const Index n = net.param_count();
  q.validate(n);
  likelihood.validate();

  ElboEvaluation ev;
  ev.tape = std::make_unique<ad::Tape>();
  ad::Tape& tape = *ev.tape;
  ev.mu = tape.variable(q.mu);
  ev.rho = tape.variable(q.rho);
  ad::Var sigma = ad::softplus(ev.rho);

  const double s2 = q.prior.variance;
  const double nd = static_cast<double>(n);
  ad::Var quad = ad::sum(ad::square(sigma)) + ad::sum(ad::square(ev.mu));
  ad::Var kl = (1.0 / (2.0 * s2)) * quad - ad::sum(ad::log(sigma));
  kl = kl + (nd * 0.5 * std::log(s2) - 0.5 * nd);

  const double var = likelihood.noise_variance;
  const double n_obs = static_cast<double>(data.targets.size());
  const double nll_const = 0.5 * n_obs * std::log(2.0 * std::numbers::pi * var);
  ad::Var targets = tape.constant(data.targets);
  ad::Var nll_sum;
  for (const auto& eps : draws) {
    if (eps.size() != n) {
      throw ConfigError("elbo_loss: draw length does not match parameter count");
    }
    ad::Var theta = ev.mu + sigma * tape.constant(eps);
    ad::Var out = build_network(tape, net, theta, data.inputs, data.queries);
    ad::Var nll = (0.5 / var) * ad::sum(ad::square(out - targets));
    nll_sum = nll_sum.valid() ? nll_sum + nll : nll;
  }
  ad::Var nll_mean = (1.0 / static_cast<double>(draws.size())) * nll_sum + nll_const;
  ev.loss = kl_scale * kl + nll_mean;
  ev.kl = kl.scalar();
  ev.nll = nll_mean.scalar();
  return ev;
}

ElboEvaluation elbo_loss(const VariationalPosterior& q, const NetworkSpec& net,
                         const Dataset& data, const LikelihoodSpec& likelihood, int n_mc,
                         std::mt19937_64& rng, double kl_scale) {
  if (n_mc < 1) {
    throw ConfigError("elbo_loss: n_mc must be at least 1");
  }
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(static_cast<std::size_t>(n_mc));
  for (int m = 0; m < n_mc; ++m) {
    draws.push_back(standard_normal(q.size(), rng));
  }
  return elbo_loss_with_draws(q, net, data, likelihood, draws, kl_scale);
}

TrainResult train_vi(const VariationalPosterior& q0, const NetworkSpec& net, const Dataset& train,
                     const Dataset& val, const LikelihoodSpec& likelihood,
                     const TrainConfig& config, std::mt19937_64& rng) {
  if (config.epochs < 0) {
    throw ConfigError("train_vi: epochs must be non-negative");
  }
  train.validate();
  const Index n = net.param_count();
  q0.validate(n);

  TrainResult result;
  result.posterior = q0;
  VariationalPosterior& q = result.posterior;

  Eigen::VectorXd m = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
  long step = 0;
  double lr = config.adam.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  const Index rows = train.count();
  const Index batch = config.batch_size > 0 ? std::min<Index>(config.batch_size, rows) : rows;
  std::vector<Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (batch < rows) {
      std::shuffle(order.begin(), order.end(), rng);
    }
    double epoch_loss = 0.0;
    for (Index start = 0; start < rows; start += batch) {
      const Index len = std::min(batch, rows - start);
      const bool full = len == rows;
      Dataset sub;
      if (!full) {
        sub = train.subset(
            std::vector<Index>(order.begin() + start, order.begin() + start + len));
      }
      const Dataset& data = full ? train : sub;
      const double kl_scale = static_cast<double>(len) / static_cast<double>(rows);
      ElboEvaluation ev = elbo_loss(q, net, data, likelihood, config.n_mc, rng, kl_scale);
      const double loss = ev.value();
      const Eigen::VectorXd g = std::isfinite(loss) ? ev.gradient() : Eigen::VectorXd();
      if (!std::isfinite(loss) || !all_finite(g)) {
        result.diverged = true;
        result.failed_epoch = epoch;
        result.message = "non-finite loss at epoch " + std::to_string(epoch);
        return result;
      }
      epoch_loss += loss;

      ++step;
      const auto& a = config.adam;
      m = a.beta1 * m + (1.0 - a.beta1) * g;
      v = a.beta2 * v + (1.0 - a.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(step));
      const Eigen::VectorXd update =
          (lr / c1) * (m.array() / ((v.array() / c2).sqrt() + a.epsilon)).matrix();
      q.mu -= update.head(n);
      q.rho -= update.tail(n);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_elbo = epoch_loss;
    rec.learning_rate = lr;
    const Eigen::MatrixXd train_pred = evaluate(net, q.mu, train);
    rec.train_mse = mean_squared_error(train_pred, train.targets);
    if (val.count() > 0) {
      const Eigen::MatrixXd val_pred = evaluate(net, q.mu, val);
      rec.val_mse = mean_squared_error(val_pred, val.targets);
      rec.val_elbo = kl_gaussian(q) + gaussian_nll(val_pred, val.targets, likelihood);
    } else {
      rec.val_elbo = kl_gaussian(q) + gaussian_nll(train_pred, train.targets, likelihood);
      rec.val_mse = rec.train_mse;
    }
    result.history.push_back(rec);

    if (config.plateau.enabled) {
      const double monitored = rec.val_elbo;
      if (monitored < best - config.plateau.threshold * std::abs(best) || !std::isfinite(best)) {
        best = monitored;
        bad_epochs = 0;
      } else if (++bad_epochs > config.plateau.patience) {
        lr = std::max(lr * config.plateau.factor, config.plateau.min_learning_rate);
        bad_epochs = 0;
      }
    }
  }
  return result;
}

Eigen::MatrixXd predictive_samples(const VariationalPosterior& q, const NetworkSpec& net,
                                   const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& queries,
                                   int n_samples, std::mt19937_64& rng) {
  if (n_samples < 1) {
    throw ConfigError("predictive_samples: n_samples must be at least 1");
  }
  if (q.mu.size() != net.param_count() || q.rho.size() != net.param_count()) {
    throw ConfigError("predictive_samples: posterior does not match network");
  }
  // sigma may be exactly zero here (rho = -inf); that collapses q onto mu.
  const Eigen::VectorXd sigma = q.sigma();
  ad::Tape tape;
  Eigen::MatrixXd out;
  for (int s = 0; s < n_samples; ++s) {
    tape.clear();
    const Eigen::VectorXd theta = q.mu + sigma.cwiseProduct(standard_normal(q.size(), rng));
    const Eigen::MatrixXd y =
        build_network(tape, net, tape.constant(theta), inputs, queries).value();
    if (s == 0) {
      out.resize(n_samples, y.size());
    }
    out.row(s) = flatten_rows(y);
  }
  return out;
}

}  // namespace vihmc
