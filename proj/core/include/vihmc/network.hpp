#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vihmc/autodiff.hpp"
#include "vihmc/param_vector.hpp"

namespace vihmc {

enum class Activation { Identity, Sin, Tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

struct LayerSpec {
  Index width = 0;
  Activation activation = Activation::Identity;
  bool bias = true;

  bool operator==(const LayerSpec&) const = default;
};

/// Dense feed-forward stack. Layer k computes act(W_k h + b_k) with W_k of
/// shape (width_k x width_{k-1}).
struct MlpSpec {
  Index input_dim = 0;
  std::vector<LayerSpec> layers;

  [[nodiscard]] Index output_dim() const;
  [[nodiscard]] Index param_count() const;

  bool operator==(const MlpSpec&) const = default;
};

enum class NetworkKind { Mlp, DeepONet };

/// Either a plain MLP or a branch/trunk operator network whose output is
/// sum_k branch_k(u) * trunk_k(y) + c.
struct NetworkSpec {
  NetworkKind kind = NetworkKind::Mlp;
  MlpSpec mlp;
  MlpSpec branch;
  MlpSpec trunk;
  bool output_bias = true;

  [[nodiscard]] Index param_count() const;
  [[nodiscard]] ParamLayout layout() const;
  /// Number of branch/trunk feature pairs (DeepONet only).
  [[nodiscard]] Index latent_dim() const;
  [[nodiscard]] Index output_dim() const;
  void validate() const;

  bool operator==(const NetworkSpec&) const = default;
};

enum class DatasetKind { Function, Operator };

/// Function data: inputs (N x d_in), targets (N x d_out).
/// Operator data: inputs are input functions at sensors (F x n_sensors),
/// queries the shared evaluation grid (Q x d_trunk), targets (F x Q).
struct Dataset {
  DatasetKind kind = DatasetKind::Function;
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd queries;
  Eigen::MatrixXd targets;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string source;

  /// Number of rows (data points or input functions).
  [[nodiscard]] Index count() const { return inputs.rows(); }
  /// N_d: scalar observations per output component (N, or F * Q).
  [[nodiscard]] Index records() const;
  [[nodiscard]] Dataset subset(const std::vector<Index>& rows) const;
  void validate() const;
};

/// Records the network on `tape` with parameters taken from the column vector
/// `theta`. Returns the output node: (N x d_out) for an MLP, (F x Q) for a
/// DeepONet.
ad::Var build_network(ad::Tape& tape, const NetworkSpec& spec, ad::Var theta,
                      const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& queries = {});

/// Shape-checks the inputs against the spec; throws ConfigError naming the layer.
void check_inputs(const NetworkSpec& spec, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& queries);

Eigen::MatrixXd mlp_eval(const NetworkSpec& spec, const Eigen::VectorXd& theta,
                         const Eigen::MatrixXd& x);
Eigen::MatrixXd deeponet_eval(const NetworkSpec& spec, const Eigen::VectorXd& theta,
                              const Eigen::MatrixXd& u, const Eigen::MatrixXd& y);
/// Dispatches on the spec kind.
Eigen::MatrixXd evaluate(const NetworkSpec& spec, const Eigen::VectorXd& theta,
                         const Dataset& data);

Index param_count(const NetworkSpec& spec);

/// Uniform fan-in initialization: weights and biases of a layer with fan-in n
/// are drawn from U(-scale/sqrt(n), scale/sqrt(n)); the DeepONet bias starts at 0.
Eigen::VectorXd init_params(const NetworkSpec& spec, std::mt19937_64& rng, double scale = 1.0);

/// Stable text fingerprint of the architecture (used to match artifacts).
std::string spec_hash(const NetworkSpec& spec);

}  // namespace vihmc
