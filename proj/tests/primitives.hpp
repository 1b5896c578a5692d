#pragma once
// Table of autodiff primitives with a finite-difference checker.
#include <functional>
#include <random>
#include <vector>

#include "support.hpp"
#include "vihmc/autodiff.hpp"

namespace vihmc::testing {

using Build = std::function<ad::Var(ad::Tape&, ad::Var, ad::Var)>;

struct Primitive {
  const char* name;
  Index ar, ac, br, bc;
  Build build;
  bool positive = false;  // inputs must stay positive (log)
};

// f(a, b) = sum(w .* op(a, b)) with a fixed random weight so every output
// entry contributes to the scalar.
inline double check_primitive(const Primitive& p, std::mt19937_64& rng) {
  Eigen::MatrixXd a0 = randn(p.ar, p.ac, rng);
  Eigen::MatrixXd b0 = randn(p.br, p.bc, rng);
  if (p.positive) {
    a0 = a0.array().abs() + 0.5;
    b0 = b0.array().abs() + 0.5;
  }
  Eigen::MatrixXd w;
  auto eval = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::VectorXd* grad) {
    ad::Tape tape;
    const ad::Var va = tape.variable(a);
    const ad::Var vb = tape.variable(b);
    const ad::Var out = p.build(tape, va, vb);
    if (w.size() == 0) w = randn(out.rows(), out.cols(), rng);
    const ad::Var loss = ad::sum(tape.constant(w) * out);
    if (grad) {
      tape.backward(loss);
      grad->resize(a.size() + b.size());
      const Eigen::MatrixXd& ga = tape.adjoint(va);
      const Eigen::MatrixXd& gb = tape.adjoint(vb);
      grad->head(a.size()) = Eigen::Map<const Eigen::VectorXd>(ga.data(), ga.size());
      grad->tail(b.size()) = Eigen::Map<const Eigen::VectorXd>(gb.data(), gb.size());
    }
    return loss.scalar();
  };
  Eigen::VectorXd g;
  eval(a0, b0, &g);
  auto f = [&](const Eigen::VectorXd& x) {
    const Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(x.data(), p.ar, p.ac);
    const Eigen::MatrixXd b = Eigen::Map<const Eigen::MatrixXd>(x.data() + a0.size(), p.br, p.bc);
    return eval(a, b, nullptr);
  };
  Eigen::VectorXd x(a0.size() + b0.size());
  x << Eigen::Map<const Eigen::VectorXd>(a0.data(), a0.size()),
      Eigen::Map<const Eigen::VectorXd>(b0.data(), b0.size());
  return rel_err(g, fd_gradient(f, x));
}

inline std::vector<Primitive> all_primitives() {
  return {
      {"add", 3, 4, 3, 4, [](ad::Tape&, ad::Var a, ad::Var b) { return a + b; }},
      {"sub", 3, 4, 3, 4, [](ad::Tape&, ad::Var a, ad::Var b) { return a - b; }},
      {"mul", 3, 4, 3, 4, [](ad::Tape&, ad::Var a, ad::Var b) { return a * b; }},
      {"scale", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var b) { return ad::add_scalar(1.7 * a, b * b); }},
      {"shift", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var) { return (a + 0.3) * (a + 0.3); }},
      {"neg", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var) { return -a; }},
      {"matmul", 3, 4, 4, 2, [](ad::Tape&, ad::Var a, ad::Var b) { return ad::matmul(a, b); }},
      {"transpose", 3, 4, 3, 4,
       [](ad::Tape&, ad::Var a, ad::Var b) { return ad::transpose(a * b); }},
      {"add_row", 5, 3, 3, 1, [](ad::Tape&, ad::Var a, ad::Var b) { return ad::add_row(a, b); }},
      {"add_scalar", 5, 3, 1, 1,
       [](ad::Tape&, ad::Var a, ad::Var b) { return ad::add_scalar(a, b); }},
      {"sin", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var) { return ad::sin(a); }},
      {"tanh", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var) { return ad::tanh(a); }},
      {"softplus", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var) { return ad::softplus(a); }},
      {"square", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var) { return ad::square(a); }},
      {"log", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var) { return ad::log(a); }, true},
      {"exp", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var) { return ad::exp(a); }},
      {"sum", 3, 4, 1, 1, [](ad::Tape&, ad::Var a, ad::Var b) { return ad::sum(a) * b; }},
      {"dot", 4, 1, 4, 1, [](ad::Tape&, ad::Var a, ad::Var b) { return ad::dot(a, b); }},
      {"slice", 12, 1, 1, 1,
       [](ad::Tape& t, ad::Var a, ad::Var b) { return add_scalar(t.slice(a, 2, 3, 2), b); }},
      {"scatter", 3, 1, 1, 1,
       [](ad::Tape& t, ad::Var a, ad::Var b) {
         static const std::vector<Index> pos{4, 0, 2};
         return ad::add_scalar(ad::square(t.scatter(a, pos, Eigen::VectorXd::LinSpaced(6, -1.0, 1.0))), b);
       }},
  };
}

}  // namespace vihmc::testing
