#include "vihmc/gradients.hpp"

#include "vihmc/errors.hpp"

namespace vihmc {

ForwardPass forward(const NetworkSpec& spec, const Eigen::VectorXd& theta,
                    const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& queries) {
  ForwardPass pass;
  pass.tape = std::make_unique<ad::Tape>();
  pass.theta = pass.tape->variable(theta);
  pass.output = build_network(*pass.tape, spec, pass.theta, inputs, queries);
  return pass;
}

Eigen::VectorXd grad_output(ForwardPass& pass, Index row, Index col) {
  pass.tape->backward(pass.output, row, col);
  return pass.tape->adjoint(pass.theta).col(0);
}

Eigen::VectorXd grad_scalar(ad::Tape& tape, ad::Var root, ad::Var wrt) {
  tape.backward(root);
  return tape.adjoint(wrt).col(0);
}

}  // namespace vihmc
