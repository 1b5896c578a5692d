#pragma once

#include <memory>

#include "vihmc/autodiff.hpp"
#include "vihmc/network.hpp"

namespace vihmc {

/// A recorded network evaluation. `theta` is the differentiable parameter
/// leaf and `output` the network output node.
struct ForwardPass {
  std::unique_ptr<ad::Tape> tape;
  ad::Var theta;
  ad::Var output;

  [[nodiscard]] const Eigen::MatrixXd& outputs() const { return output.value(); }
};

ForwardPass forward(const NetworkSpec& spec, const Eigen::VectorXd& theta,
                    const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& queries = {});

/// d output(row, col) / d theta.
Eigen::VectorXd grad_output(ForwardPass& pass, Index row, Index col = 0);

/// Gradient of the scalar node `root` with respect to the leaf `wrt`.
Eigen::VectorXd grad_scalar(ad::Tape& tape, ad::Var root, ad::Var wrt);

}  // namespace vihmc
