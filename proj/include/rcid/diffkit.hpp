#pragma once

// Minimal define-by-run reverse-mode automatic differentiation.
//
// A Tape records nodes in construction order; every node's value is computed
// when it is created. Scalar nodes (Var) carry a double, dense nodes
// (DenseVar) an Eigen matrix or column vector. Dense nodes never consume
// scalar nodes, and reverse accumulation walks the node list backwards.
//
// Nodes whose adjoint is exactly zero are skipped during the backward sweep,
// so subgraphs that do not feed the output (for example a discarded example
// with a non-finite loss) never contaminate gradients.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rcid/error.hpp"

namespace rcid::diffkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

// Scalar handle. A Var without a tape is a constant.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;
  double v = 0.0;

  Var() = default;
  Var(double value) : v(value) {}  // NOLINT: implicit constants are the point
  Var(Tape* t, std::int32_t i, double value) : tape(t), id(i), v(value) {}

  double value() const noexcept { return v; }
  bool is_constant() const noexcept { return tape == nullptr; }
};

struct DenseVar {
  Tape* tape = nullptr;
  std::int32_t id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

enum class Op : std::uint8_t {
  ScalarLeaf,
  Add,
  Sub,
  Mul,
  Div,
  AddConst,   // a + c
  MulConst,   // a * c
  ConstSub,   // c - a
  ConstDiv,   // c / a
  Neg,
  Sqrt,       // zero subgradient at 0 (minimum-norm element)
  Exp,
  Log,
  Tanh,
  Softplus,
  DenseLeaf,
  DenseConst,
  MatVec,     // W * x
  DenseAdd,
  DenseTanh,
  DenseSoftplus,
  DenseMulConst,  // a ⊙ c, c a constant vector
  DenseSquaredNorm,  // ||a||² -> scalar
  Component,  // a[i] -> scalar
};

class GradientTable;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Drops all nodes but keeps allocated buffers for reuse.
  void clear();
  std::size_t size() const noexcept { return nodes_.size(); }

  Var leaf(double value);
  // The matrix is referenced, not copied; it must outlive the tape contents.
  DenseVar dense_leaf(const Matrix& value);
  DenseVar dense_constant(const Eigen::Ref<const Matrix>& value);

  DenseVar matvec(DenseVar w, DenseVar x);
  DenseVar add(DenseVar a, DenseVar b);
  DenseVar tanh(DenseVar a);
  DenseVar softplus(DenseVar a);
  DenseVar mul_const(DenseVar a, const Vector& c);
  Var squared_norm(DenseVar a);
  Var component(DenseVar a, Eigen::Index i);

  // Reverse accumulation from a scalar output. Adjoints stay valid until the
  // next clear() or backward().
  GradientTable backward(Var output);
  // Dense outputs are rejected: only scalar objectives are differentiable here.
  GradientTable backward(DenseVar output);

  // Internal: used by the scalar operator overloads.
  Var push_scalar(Op op, std::int32_t a, std::int32_t b, double value, double c);

 private:
  friend struct DenseVar;
  friend class GradientTable;

  struct Node {
    Op op;
    bool needs_grad;
    std::int32_t a;
    std::int32_t b;
    std::int32_t slot;  // dense value slot, -1 for scalars
    double value;       // scalar value
    double c;           // scalar constant operand / component index
  };

  std::int32_t new_dense_slot(Eigen::Index rows, Eigen::Index cols);
  Matrix& dense_adjoint(std::int32_t node_id);
  const Matrix& dense_value(std::int32_t node_id) const;
  bool needs(std::int32_t id) const { return id >= 0 && nodes_[id].needs_grad; }

  std::vector<Node> nodes_;
  std::vector<const Matrix*> external_;  // per slot, non-null for dense leaves
  std::vector<Matrix> values_;           // per slot
  std::vector<Matrix> adjoints_;         // per slot
  std::vector<std::uint8_t> touched_;    // per slot
  std::vector<Vector> consts_;           // constant vectors for DenseMulConst
  std::vector<double> adj_;              // per node (scalar adjoints)
  std::int32_t slots_used_ = 0;
  std::int32_t consts_used_ = 0;
};

// View onto the tape's adjoints after backward(). Leaves that did not
// influence the output report zero.
class GradientTable {
 public:
  explicit GradientTable(const Tape* tape) : tape_(tape) {}
  double operator[](Var leaf) const;
  // Returns a zero matrix of the right shape for untouched leaves.
  Matrix operator[](DenseVar leaf) const;
  // Adds the gradient of `leaf` into `dst` (shapes must agree).
  void accumulate_into(DenseVar leaf, Matrix& dst, double scale = 1.0) const;
  // Overwrites `dst` with the gradient of `leaf` (resizing as needed).
  void assign_to(DenseVar leaf, Matrix& dst) const;
  // The tape's adjoint of `leaf`, or nullptr when the leaf received none.
  const Matrix* find(DenseVar leaf) const;

 private:
  const Tape* tape_;
};

// Scalar operators.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var sqrt(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var softplus(const Var& a);

// Numerically stable log(1 + exp(x)) and its derivative.
double softplus(double x);
double sigmoid(double x);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global-norm gradient clipping threshold; <= 0 disables clipping.
  double clip_norm = 10.0;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;

  AdamState() = default;
  // Zero accumulators shaped like `params`.
  AdamState(std::span<const Matrix* const> params, AdamConfig cfg);
};

double global_norm(std::span<const Matrix* const> grads);

// One bias-corrected Adam update, preceded by global-norm clipping when
// enabled. Throws InvalidInput on any shape mismatch.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state);

}  // namespace rcid::diffkit
