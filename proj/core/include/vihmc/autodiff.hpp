#pragma once

// Tape-based reverse-mode automatic differentiation over dense matrices.
//
// Every node holds an Eigen matrix value. Scalars are 1x1 matrices. The tape
// is append-only: a node's inputs always precede it, so a single backwards
// sweep over the node array is a valid reverse topological order.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vihmc::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Op : std::uint8_t {
  Leaf,
  Slice,      // row-major reshape of a contiguous segment of a column vector
  Scatter,    // place a column vector into fixed positions of a constant base
  Add,
  Sub,
  Mul,        // elementwise
  Scale,      // multiply by a constant
  Shift,      // add a constant
  AddRow,     // X + 1 * b^T, b is a column vector with X.cols() entries
  AddScalar,  // X + s, s is a 1x1 node
  MatMul,
  Transpose,
  Sin,
  Tanh,
  Softplus,
  Square,
  Log,
  Exp,
  Sum,
  Dot,
};

const char* op_name(Op op);

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives
/// and has not been cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  [[nodiscard]] int id() const { return id_; }
  [[nodiscard]] Tape* tape() const { return tape_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr && id_ >= 0; }

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Index rows() const { return value().rows(); }
  [[nodiscard]] Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  [[nodiscard]] double scalar() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Differentiable leaf.
  Var variable(const Matrix& value);
  /// Non-differentiable leaf; receives no adjoint.
  Var constant(const Matrix& value);
  Var constant(double value);

  /// Drops all nodes but keeps their storage so that re-recording a graph of
  /// the same shape does not reallocate.
  void clear();

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] Op op(Var v) const { return node(v).op; }
  [[nodiscard]] const Matrix& value(Var v) const { return node(v).value; }
  [[nodiscard]] const Matrix& adjoint(Var v) const;
  [[nodiscard]] bool requires_grad(Var v) const { return node(v).grad; }

  /// Reverse sweep seeded with d(root)/d(root) = 1. Root must be 1x1.
  void backward(Var root);
  /// Reverse sweep seeded at a single element of a matrix-valued node.
  void backward(Var root, Index row, Index col);

  // Recording entry points used by the free-function operators below.
  Var unary(Op op, Var a, double c = 0.0);
  Var binary(Op op, Var a, Var b);
  Var slice(Var theta, Index offset, Index rows, Index cols);
  Var scatter(Var free, std::span<const Index> positions, const Vector& base);

 private:
  struct Node {
    Op op = Op::Leaf;
    int a = -1;
    int b = -1;
    double c = 0.0;
    Index offset = 0;
    bool grad = false;
    std::vector<Index> positions;
    Matrix value;
    Matrix adjoint;
  };

  Node& push(Op op, int a, int b, bool grad);
  [[nodiscard]] const Node& node(Var v) const;
  void check_owner(Var v) const;
  void reverse_from(int root);
  void propagate(const Node& n);

  std::vector<Node> nodes_;
  std::size_t size_ = 0;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise
Var operator*(double c, Var a);
Var operator+(Var a, double c);
Var operator-(Var a);

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add_row(Var x, Var bias);
Var add_scalar(Var x, Var s);
Var sin(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var square(Var a);
Var log(Var a);
Var exp(Var a);
Var sum(Var a);
Var dot(Var a, Var b);

/// Numerically stable log(1 + exp(x)) and its derivative.
double softplus(double x);
double sigmoid(double x);

}  // namespace vihmc::ad
