#include "vihmc/autodiff.hpp"

#include <cmath>

#include "vihmc/errors.hpp"

namespace vihmc::ad {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Slice: return "slice";
    case Op::Scatter: return "scatter";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::AddRow: return "add_row";
    case Op::AddScalar: return "add_scalar";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::Sin: return "sin";
    case Op::Tanh: return "tanh";
    case Op::Softplus: return "softplus";
    case Op::Square: return "square";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::Sum: return "sum";
    case Op::Dot: return "dot";
  }
  return "?";
}

double softplus(double x) {
  // log1p(exp(x)) overflows for large x; the two branches agree to rounding.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const Matrix& Var::value() const { return tape_->value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ConfigError("scalar() on non-scalar node of shape " + shape(v));
  }
  return v(0, 0);
}

Tape::Node& Tape::push(Op op, int a, int b, bool grad) {
  if (size_ == nodes_.size()) {
    nodes_.emplace_back();
  }
  Node& n = nodes_[size_++];
  n.op = op;
  n.a = a;
  n.b = b;
  n.c = 0.0;
  n.offset = 0;
  n.grad = grad;
  n.positions.clear();
  return n;
}

const Tape::Node& Tape::node(Var v) const {
  check_owner(v);
  return nodes_[static_cast<std::size_t>(v.id())];
}

void Tape::check_owner(Var v) const {
  if (v.tape() != this || v.id() < 0 || static_cast<std::size_t>(v.id()) >= size_) {
    throw ConfigError("variable does not belong to this tape");
  }
}

void Tape::clear() { size_ = 0; }

Var Tape::variable(const Matrix& value) {
  Node& n = push(Op::Leaf, -1, -1, true);
  n.value = value;
  return {this, static_cast<int>(size_ - 1)};
}

Var Tape::constant(const Matrix& value) {
  Node& n = push(Op::Leaf, -1, -1, false);
  n.value = value;
  return {this, static_cast<int>(size_ - 1)};
}

Var Tape::constant(double value) {
  Node& n = push(Op::Leaf, -1, -1, false);
  n.value.resize(1, 1);
  n.value(0, 0) = value;
  return {this, static_cast<int>(size_ - 1)};
}

const Matrix& Tape::adjoint(Var v) const {
  const Node& n = node(v);
  if (!n.grad) {
    throw ConfigError("adjoint requested for a constant node");
  }
  return n.adjoint;
}

Var Tape::unary(Op op, Var av, double c) {
  check_owner(av);
  const int ai = av.id();
  const bool grad = nodes_[ai].grad;
  Node& n = push(op, ai, -1, grad);
  n.c = c;
  // `push` may have reallocated; re-fetch the input only after it.
  const Matrix& a = nodes_[ai].value;
  switch (op) {
    case Op::Scale: n.value = c * a; break;
    case Op::Shift: n.value = a.array() + c; break;
    case Op::Transpose: n.value = a.transpose(); break;
    case Op::Sin: n.value = a.array().sin(); break;
    case Op::Tanh: n.value = a.array().tanh(); break;
    case Op::Softplus: n.value = a.unaryExpr([](double x) { return softplus(x); }); break;
    case Op::Square: n.value = a.array().square(); break;
    case Op::Log: n.value = a.array().log(); break;
    case Op::Exp: n.value = a.array().exp(); break;
    case Op::Sum:
      n.value.resize(1, 1);
      n.value(0, 0) = a.sum();
      break;
    default: throw ConfigError(std::string("not a unary op: ") + op_name(op));
  }
  return {this, static_cast<int>(size_ - 1)};
}

Var Tape::binary(Op op, Var av, Var bv) {
  check_owner(av);
  check_owner(bv);
  const int ai = av.id();
  const int bi = bv.id();
  {
    const Matrix& a = nodes_[ai].value;
    const Matrix& b = nodes_[bi].value;
    bool ok = true;
    switch (op) {
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Dot: ok = a.rows() == b.rows() && a.cols() == b.cols(); break;
      case Op::MatMul: ok = a.cols() == b.rows(); break;
      case Op::AddRow: ok = b.cols() == 1 && b.rows() == a.cols(); break;
      case Op::AddScalar: ok = b.rows() == 1 && b.cols() == 1; break;
      default: throw ConfigError(std::string("not a binary op: ") + op_name(op));
    }
    if (!ok) {
      throw ConfigError(std::string("shape mismatch in ") + op_name(op) + ": " + shape(a) +
                        " vs " + shape(b));
    }
  }
  const bool grad = nodes_[ai].grad || nodes_[bi].grad;
  Node& n = push(op, ai, bi, grad);
  const Matrix& a = nodes_[ai].value;
  const Matrix& b = nodes_[bi].value;
  switch (op) {
    case Op::Add: n.value = a + b; break;
    case Op::Sub: n.value = a - b; break;
    case Op::Mul: n.value = a.cwiseProduct(b); break;
    case Op::MatMul: n.value.noalias() = a * b; break;
    case Op::AddRow: n.value = a.rowwise() + b.col(0).transpose(); break;
    case Op::AddScalar: n.value = a.array() + b(0, 0); break;
    case Op::Dot:
      n.value.resize(1, 1);
      n.value(0, 0) = a.cwiseProduct(b).sum();
      break;
    default: break;
  }
  return {this, static_cast<int>(size_ - 1)};
}

Var Tape::slice(Var theta, Index offset, Index rows, Index cols) {
  check_owner(theta);
  const int ti = theta.id();
  {
    const Matrix& t = nodes_[ti].value;
    if (t.cols() != 1 || offset < 0 || offset + rows * cols > t.rows()) {
      throw ConfigError("slice [" + std::to_string(offset) + ", " +
                        std::to_string(offset + rows * cols) + ") out of range for " + shape(t));
    }
  }
  Node& n = push(Op::Slice, ti, -1, nodes_[ti].grad);
  n.offset = offset;
  const Matrix& t = nodes_[ti].value;
  n.value.resize(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      n.value(r, c) = t(offset + r * cols + c, 0);
    }
  }
  return {this, static_cast<int>(size_ - 1)};
}

Var Tape::scatter(Var free, std::span<const Index> positions, const Vector& base) {
  check_owner(free);
  const int fi = free.id();
  {
    const Matrix& f = nodes_[fi].value;
    if (f.cols() != 1 || f.rows() != static_cast<Index>(positions.size())) {
      throw ConfigError("scatter: free vector " + shape(f) + " does not match " +
                        std::to_string(positions.size()) + " positions");
    }
    for (Index p : positions) {
      if (p < 0 || p >= base.size()) {
        throw ConfigError("scatter: position " + std::to_string(p) + " out of range");
      }
    }
  }
  Node& n = push(Op::Scatter, fi, -1, nodes_[fi].grad);
  n.positions.assign(positions.begin(), positions.end());
  n.value = base;
  const Matrix& f = nodes_[fi].value;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    n.value(positions[k], 0) = f(static_cast<Index>(k), 0);
  }
  return {this, static_cast<int>(size_ - 1)};
}

void Tape::backward(Var root) {
  check_owner(root);
  const Matrix& v = nodes_[root.id()].value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw ConfigError("backward() needs a scalar root, got " + shape(v));
  }
  backward(root, 0, 0);
}

void Tape::backward(Var root, Index row, Index col) {
  check_owner(root);
  Node& r = nodes_[root.id()];
  if (row < 0 || col < 0 || row >= r.value.rows() || col >= r.value.cols()) {
    throw ConfigError("output index (" + std::to_string(row) + ", " + std::to_string(col) +
                      ") out of range for " + shape(r.value));
  }
  if (!r.grad) {
    throw ConfigError("root does not depend on any variable");
  }
  for (int i = 0; i <= root.id(); ++i) {
    Node& n = nodes_[i];
    if (n.grad) {
      n.adjoint.setZero(n.value.rows(), n.value.cols());
    }
  }
  r.adjoint(row, col) = 1.0;
  reverse_from(root.id());
}

void Tape::reverse_from(int root) {
  for (int i = root; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.grad && n.op != Op::Leaf) {
      propagate(n);
    }
  }
}

void Tape::propagate(const Node& n) {
  const Matrix& g = n.adjoint;
  Node* a = n.a >= 0 ? &nodes_[n.a] : nullptr;
  Node* b = n.b >= 0 ? &nodes_[n.b] : nullptr;
  const bool ga = a != nullptr && a->grad;
  const bool gb = b != nullptr && b->grad;

  switch (n.op) {
    case Op::Leaf: break;
    case Op::Slice:
      if (ga) {
        const Index cols = n.value.cols();
        for (Index r = 0; r < n.value.rows(); ++r) {
          for (Index c = 0; c < cols; ++c) {
            a->adjoint(n.offset + r * cols + c, 0) += g(r, c);
          }
        }
      }
      break;
    case Op::Scatter:
      if (ga) {
        for (std::size_t k = 0; k < n.positions.size(); ++k) {
          a->adjoint(static_cast<Index>(k), 0) += g(n.positions[k], 0);
        }
      }
      break;
    case Op::Add:
      if (ga) a->adjoint += g;
      if (gb) b->adjoint += g;
      break;
    case Op::Sub:
      if (ga) a->adjoint += g;
      if (gb) b->adjoint -= g;
      break;
    case Op::Mul:
      if (ga) a->adjoint += g.cwiseProduct(b->value);
      if (gb) b->adjoint += g.cwiseProduct(a->value);
      break;
    case Op::Scale:
      if (ga) a->adjoint += n.c * g;
      break;
    case Op::Shift:
      if (ga) a->adjoint += g;
      break;
    case Op::AddRow:
      if (ga) a->adjoint += g;
      if (gb) b->adjoint.col(0) += g.colwise().sum().transpose();
      break;
    case Op::AddScalar:
      if (ga) a->adjoint += g;
      if (gb) b->adjoint(0, 0) += g.sum();
      break;
    case Op::MatMul:
      if (ga) a->adjoint.noalias() += g * b->value.transpose();
      if (gb) b->adjoint.noalias() += a->value.transpose() * g;
      break;
    case Op::Transpose:
      if (ga) a->adjoint += g.transpose();
      break;
    case Op::Sin:
      if (ga) a->adjoint.array() += g.array() * a->value.array().cos();
      break;
    case Op::Tanh:
      if (ga) a->adjoint.array() += g.array() * (1.0 - n.value.array().square());
      break;
    case Op::Softplus:
      if (ga) {
        a->adjoint.array() +=
            g.array() * a->value.unaryExpr([](double x) { return sigmoid(x); }).array();
      }
      break;
    case Op::Square:
      if (ga) a->adjoint.array() += 2.0 * g.array() * a->value.array();
      break;
    case Op::Log:
      if (ga) a->adjoint.array() += g.array() / a->value.array();
      break;
    case Op::Exp:
      if (ga) a->adjoint.array() += g.array() * n.value.array();
      break;
    case Op::Sum:
      if (ga) a->adjoint.array() += g(0, 0);
      break;
    case Op::Dot:
      if (ga) a->adjoint += g(0, 0) * b->value;
      if (gb) b->adjoint += g(0, 0) * a->value;
      break;
  }
}

Var operator+(Var a, Var b) { return a.tape()->binary(Op::Add, a, b); }
Var operator-(Var a, Var b) { return a.tape()->binary(Op::Sub, a, b); }
Var operator*(Var a, Var b) { return a.tape()->binary(Op::Mul, a, b); }
Var operator*(double c, Var a) { return a.tape()->unary(Op::Scale, a, c); }
Var operator+(Var a, double c) { return a.tape()->unary(Op::Shift, a, c); }
Var operator-(Var a) { return a.tape()->unary(Op::Scale, a, -1.0); }

Var matmul(Var a, Var b) { return a.tape()->binary(Op::MatMul, a, b); }
Var transpose(Var a) { return a.tape()->unary(Op::Transpose, a); }
Var add_row(Var x, Var bias) { return x.tape()->binary(Op::AddRow, x, bias); }
Var add_scalar(Var x, Var s) { return x.tape()->binary(Op::AddScalar, x, s); }
Var sin(Var a) { return a.tape()->unary(Op::Sin, a); }
Var tanh(Var a) { return a.tape()->unary(Op::Tanh, a); }
Var softplus(Var a) { return a.tape()->unary(Op::Softplus, a); }
Var square(Var a) { return a.tape()->unary(Op::Square, a); }
Var log(Var a) { return a.tape()->unary(Op::Log, a); }
Var exp(Var a) { return a.tape()->unary(Op::Exp, a); }
Var sum(Var a) { return a.tape()->unary(Op::Sum, a); }
Var dot(Var a, Var b) { return a.tape()->binary(Op::Dot, a, b); }

}  // namespace vihmc::ad
