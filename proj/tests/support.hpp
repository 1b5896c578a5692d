#pragma once

// Shared oracles and fixtures for the unit and acceptance tests.

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vihmc/network.hpp"
#include "vihmc/target.hpp"
#include "vihmc/vi.hpp"

namespace vihmc::testing {

/// Central differences with step h on every coordinate.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||b||, floor).
inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

/// 1 -> 2 sin -> 1 linear without output bias: y = a sin(w1 x + p1) + b sin(w2 x + p2)
/// with theta = (w1, w2, p1, p2, a, b).
inline NetworkSpec case1_net() {
  NetworkSpec n;
  n.mlp.input_dim = 1;
  n.mlp.layers = {{2, Activation::Sin, true}, {1, Activation::Identity, false}};
  return n;
}

/// 1 -> 10 tanh -> 10 tanh -> 1 with all biases.
inline NetworkSpec case2_net() {
  NetworkSpec n;
  n.mlp.input_dim = 1;
  n.mlp.layers = {{10, Activation::Tanh, true}, {10, Activation::Tanh, true},
                  {1, Activation::Identity, true}};
  return n;
}

/// y = X theta: a single identity layer without bias.
inline NetworkSpec linear_net(Index d) {
  NetworkSpec n;
  n.mlp.input_dim = d;
  n.mlp.layers = {{1, Activation::Identity, false}};
  return n;
}

inline NetworkSpec mlp(Index in, std::vector<LayerSpec> layers) {
  NetworkSpec n;
  n.mlp.input_dim = in;
  n.mlp.layers = std::move(layers);
  return n;
}

inline NetworkSpec small_deeponet(Index sensors, Index trunk_in, Index width, Index p) {
  NetworkSpec n;
  n.kind = NetworkKind::DeepONet;
  n.branch.input_dim = sensors;
  n.branch.layers = {{width, Activation::Tanh, true}, {p, Activation::Identity, true}};
  n.trunk.input_dim = trunk_in;
  n.trunk.layers = {{width, Activation::Tanh, true}, {p, Activation::Tanh, true}};
  n.output_bias = true;
  return n;
}

inline Eigen::MatrixXd randn(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline Eigen::MatrixXd uniform(Index r, Index c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline Dataset function_data(Eigen::MatrixXd x, Eigen::MatrixXd y) {
  Dataset d;
  d.kind = DatasetKind::Function;
  d.inputs = std::move(x);
  d.targets = std::move(y);
  return d;
}

/// Bayesian linear regression y = X theta + N(0, noise), theta ~ N(0, prior I).
struct ConjugateRegression {
  NetworkSpec net;
  std::shared_ptr<const Dataset> data;
  PriorSpec prior;
  LikelihoodSpec likelihood;
  Eigen::VectorXd post_mean;
  Eigen::MatrixXd post_cov;

  [[nodiscard]] TargetPosterior target() const { return {net, data, prior, likelihood}; }
};

inline ConjugateRegression make_regression(Index d, Index n, std::uint64_t seed,
                                           double prior_var = 1.0, double noise_var = 0.25) {
  std::mt19937_64 rng(seed);
  ConjugateRegression r;
  r.net = linear_net(d);
  const Eigen::MatrixXd x = randn(n, d, rng);
  const Eigen::VectorXd truth = randn(d, 1, rng);
  const Eigen::VectorXd y = x * truth + randn(n, 1, rng, std::sqrt(noise_var));
  r.data = std::make_shared<const Dataset>(function_data(x, y));
  r.prior.variance = prior_var;
  r.likelihood.noise_variance = noise_var;
  const Eigen::MatrixXd precision =
      x.transpose() * x / noise_var + Eigen::MatrixXd::Identity(d, d) / prior_var;
  r.post_cov = precision.inverse();
  r.post_mean = r.post_cov * x.transpose() * y / noise_var;
  return r;
}

inline double wrap_pi(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  x = std::fmod(x, two_pi);
  if (x > std::numbers::pi) x -= two_pi;
  if (x < -std::numbers::pi) x += two_pi;
  return x;
}

/// Every Case I parameter vector (w1, w2, p1, p2, a, b) describing the same
/// function: per term (w, p, a) -> (-w, -p, -a) and (p, a) -> (p + pi, -a),
/// and the two terms swapped. Phases are wrapped to (-pi, pi].
inline std::vector<Eigen::VectorXd> case1_orbit(const Eigen::VectorXd& t) {
  std::vector<Eigen::VectorXd> out;
  for (int swap = 0; swap < 2; ++swap) {
    for (int m = 0; m < 16; ++m) {
      Eigen::VectorXd u = t;
      if (swap) u << t(1), t(0), t(3), t(2), t(5), t(4);
      for (int k = 0; k < 2; ++k) {
        if (m >> (2 * k) & 1) {
          u(k) = -u(k);
          u(2 + k) = -u(2 + k);
          u(4 + k) = -u(4 + k);
        }
        if (m >> (2 * k + 1) & 1) {
          u(2 + k) += std::numbers::pi;
          u(4 + k) = -u(4 + k);
        }
        u(2 + k) = wrap_pi(u(2 + k));
      }
      out.push_back(u);
    }
  }
  return out;
}

/// Largest deviation over `coords` of the closest orbit element to `ref`
/// (phase coordinates 2 and 3 compared modulo 2 pi).
inline double case1_distance(const Eigen::VectorXd& t, const Eigen::VectorXd& ref,
                             const std::vector<Index>& coords) {
  double best = 1e300;
  for (const auto& u : case1_orbit(t)) {
    double d = 0.0;
    for (Index c : coords) {
      const double diff = (c == 2 || c == 3) ? wrap_pi(u(c) - ref(c)) : u(c) - ref(c);
      d = std::max(d, std::abs(diff));
    }
    best = std::min(best, d);
  }
  return best;
}

}  // namespace vihmc::testing
