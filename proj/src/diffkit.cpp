#include "rcid/diffkit.hpp"

#include <cmath>
#include <limits>

namespace rcid::diffkit {

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const Matrix& DenseVar::value() const { return tape->dense_value(id); }

void Tape::clear() {
  nodes_.clear();
  adj_.clear();
  slots_used_ = 0;
  consts_used_ = 0;
}

std::int32_t Tape::new_dense_slot(Eigen::Index rows, Eigen::Index cols) {
  const auto slot = slots_used_++;
  if (static_cast<std::size_t>(slot) >= values_.size()) {
    values_.emplace_back();
    adjoints_.emplace_back();
    external_.push_back(nullptr);
    touched_.push_back(0);
  }
  values_[slot].resize(rows, cols);
  external_[slot] = nullptr;
  return slot;
}

const Matrix& Tape::dense_value(std::int32_t id) const {
  const auto slot = nodes_[id].slot;
  return external_[slot] ? *external_[slot] : values_[slot];
}

Matrix& Tape::dense_adjoint(std::int32_t id) {
  const auto slot = nodes_[id].slot;
  if (!touched_[slot]) {
    const Matrix& v = dense_value(id);
    adjoints_[slot].setZero(v.rows(), v.cols());
    touched_[slot] = 1;
  }
  return adjoints_[slot];
}

Var Tape::push_scalar(Op op, std::int32_t a, std::int32_t b, double value, double c) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({op, true, a, b, -1, value, c});
  return {this, id, value};
}

Var Tape::leaf(double value) { return push_scalar(Op::ScalarLeaf, -1, -1, value, 0.0); }

DenseVar Tape::dense_leaf(const Matrix& value) {
  const auto slot = slots_used_++;
  if (static_cast<std::size_t>(slot) >= values_.size()) {
    values_.emplace_back();
    adjoints_.emplace_back();
    external_.push_back(nullptr);
    touched_.push_back(0);
  }
  external_[slot] = &value;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::DenseLeaf, true, -1, -1, slot, 0.0, 0.0});
  return {this, id};
}

DenseVar Tape::dense_constant(const Eigen::Ref<const Matrix>& value) {
  const auto slot = new_dense_slot(value.rows(), value.cols());
  values_[slot] = value;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::DenseConst, false, -1, -1, slot, 0.0, 0.0});
  return {this, id};
}

DenseVar Tape::matvec(DenseVar w, DenseVar x) {
  const Matrix& wv = dense_value(w.id);
  const Matrix& xv = dense_value(x.id);
  if (xv.cols() != 1 || wv.cols() != xv.rows()) {
    throw InvalidInput("matvec: shape mismatch");
  }
  const auto slot = new_dense_slot(wv.rows(), 1);
  values_[slot].col(0).noalias() = wv * xv.col(0);
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::MatVec, needs(w.id) || needs(x.id), w.id, x.id, slot, 0.0, 0.0});
  return {this, id};
}

DenseVar Tape::add(DenseVar a, DenseVar b) {
  const Matrix& av = dense_value(a.id);
  const Matrix& bv = dense_value(b.id);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw InvalidInput("add: shape mismatch");
  }
  const auto slot = new_dense_slot(av.rows(), av.cols());
  values_[slot] = av + bv;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::DenseAdd, needs(a.id) || needs(b.id), a.id, b.id, slot, 0.0, 0.0});
  return {this, id};
}

DenseVar Tape::tanh(DenseVar a) {
  const Matrix& av = dense_value(a.id);
  const auto slot = new_dense_slot(av.rows(), av.cols());
  values_[slot] = av.array().tanh();
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::DenseTanh, needs(a.id), a.id, -1, slot, 0.0, 0.0});
  return {this, id};
}

DenseVar Tape::softplus(DenseVar a) {
  const Matrix& av = dense_value(a.id);
  const auto slot = new_dense_slot(av.rows(), av.cols());
  values_[slot] = av.unaryExpr([](double x) { return diffkit::softplus(x); });
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::DenseSoftplus, needs(a.id), a.id, -1, slot, 0.0, 0.0});
  return {this, id};
}

DenseVar Tape::mul_const(DenseVar a, const Vector& c) {
  const Matrix& av = dense_value(a.id);
  if (av.cols() != 1 || av.rows() != c.size()) throw InvalidInput("mul_const: shape mismatch");
  const auto cidx = consts_used_++;
  if (static_cast<std::size_t>(cidx) >= consts_.size()) consts_.emplace_back();
  consts_[cidx] = c;
  const auto slot = new_dense_slot(av.rows(), 1);
  values_[slot] = av.array() * c.array();
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::DenseMulConst, needs(a.id), a.id, cidx, slot, 0.0, 0.0});
  return {this, id};
}

Var Tape::squared_norm(DenseVar a) {
  const double v = dense_value(a.id).squaredNorm();
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::DenseSquaredNorm, needs(a.id), a.id, -1, -1, v, 0.0});
  return {this, id, v};
}

Var Tape::component(DenseVar a, Eigen::Index i) {
  const Matrix& av = dense_value(a.id);
  if (i < 0 || i >= av.size()) throw InvalidInput("component: index out of range");
  const double v = av(i);
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({Op::Component, needs(a.id), a.id, -1, -1, v, static_cast<double>(i)});
  return {this, id, v};
}

GradientTable Tape::backward(DenseVar) {
  throw InvalidInput("backward: output node must be scalar");
}

GradientTable Tape::backward(Var output) {
  if (output.tape != this || output.id < 0) {
    throw InvalidInput("backward: output is not a node of this tape");
  }
  adj_.assign(nodes_.size(), 0.0);
  std::fill(touched_.begin(), touched_.begin() + slots_used_, 0);
  adj_[output.id] = 1.0;

  for (auto id = output.id; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!n.needs_grad) continue;
    if (n.slot < 0) {
      const double g = adj_[id];
      if (g == 0.0) continue;
      switch (n.op) {
        case Op::ScalarLeaf:
          break;
        case Op::Add:
          adj_[n.a] += g;
          adj_[n.b] += g;
          break;
        case Op::Sub:
          adj_[n.a] += g;
          adj_[n.b] -= g;
          break;
        case Op::Mul:
          adj_[n.a] += g * nodes_[n.b].value;
          adj_[n.b] += g * nodes_[n.a].value;
          break;
        case Op::Div: {
          const double bv = nodes_[n.b].value;
          adj_[n.a] += g / bv;
          adj_[n.b] -= g * n.value / bv;
          break;
        }
        case Op::AddConst:
          adj_[n.a] += g;
          break;
        case Op::MulConst:
          adj_[n.a] += g * n.c;
          break;
        case Op::ConstSub:
        case Op::Neg:
          adj_[n.a] -= g;
          break;
        case Op::ConstDiv:
          adj_[n.a] -= g * n.value / nodes_[n.a].value;
          break;
        case Op::Sqrt:
          if (n.value > 0.0) adj_[n.a] += g * 0.5 / n.value;
          break;
        case Op::Exp:
          adj_[n.a] += g * n.value;
          break;
        case Op::Log:
          adj_[n.a] += g / nodes_[n.a].value;
          break;
        case Op::Tanh:
          adj_[n.a] += g * (1.0 - n.value * n.value);
          break;
        case Op::Softplus:
          adj_[n.a] += g * sigmoid(nodes_[n.a].value);
          break;
        case Op::DenseSquaredNorm:
          dense_adjoint(n.a).noalias() += (2.0 * g) * dense_value(n.a);
          break;
        case Op::Component:
          dense_adjoint(n.a)(static_cast<Eigen::Index>(n.c)) += g;
          break;
        default:
          break;
      }
      continue;
    }
    if (!touched_[n.slot]) continue;
    const Matrix& g = adjoints_[n.slot];
    switch (n.op) {
      case Op::DenseLeaf:
      case Op::DenseConst:
        break;
      case Op::MatVec: {
        const Matrix& w = dense_value(n.a);
        const Matrix& x = dense_value(n.b);
        if (needs(n.a)) dense_adjoint(n.a).noalias() += g * x.transpose();
        if (needs(n.b)) dense_adjoint(n.b).noalias() += w.transpose() * g;
        break;
      }
      case Op::DenseAdd:
        if (needs(n.a)) dense_adjoint(n.a) += g;
        if (needs(n.b)) dense_adjoint(n.b) += g;
        break;
      case Op::DenseTanh: {
        const Matrix& y = values_[n.slot];
        dense_adjoint(n.a).array() += g.array() * (1.0 - y.array().square());
        break;
      }
      case Op::DenseSoftplus: {
        const Matrix& x = dense_value(n.a);
        dense_adjoint(n.a).array() +=
            g.array() * x.unaryExpr([](double v) { return sigmoid(v); }).array();
        break;
      }
      case Op::DenseMulConst:
        dense_adjoint(n.a).array() += g.array() * consts_[n.b].array();
        break;
      default:
        break;
    }
  }
  return GradientTable(this);
}

double GradientTable::operator[](Var leaf) const {
  if (leaf.tape != tape_ || leaf.id < 0) return 0.0;
  if (static_cast<std::size_t>(leaf.id) >= tape_->adj_.size()) return 0.0;
  return tape_->adj_[leaf.id];
}

Matrix GradientTable::operator[](DenseVar leaf) const {
  const Matrix& v = tape_->dense_value(leaf.id);
  const auto slot = tape_->nodes_[leaf.id].slot;
  if (!tape_->touched_[slot]) return Matrix::Zero(v.rows(), v.cols());
  return tape_->adjoints_[slot];
}

void GradientTable::accumulate_into(DenseVar leaf, Matrix& dst, double scale) const {
  const auto slot = tape_->nodes_[leaf.id].slot;
  const Matrix& v = tape_->dense_value(leaf.id);
  if (dst.rows() != v.rows() || dst.cols() != v.cols()) {
    throw InvalidInput("accumulate_into: shape mismatch");
  }
  if (!tape_->touched_[slot]) return;
  if (scale == 1.0) {
    dst += tape_->adjoints_[slot];
  } else {
    dst += scale * tape_->adjoints_[slot];
  }
}

const Matrix* GradientTable::find(DenseVar leaf) const {
  const auto slot = tape_->nodes_[leaf.id].slot;
  return tape_->touched_[slot] ? &tape_->adjoints_[slot] : nullptr;
}

void GradientTable::assign_to(DenseVar leaf, Matrix& dst) const {
  const auto slot = tape_->nodes_[leaf.id].slot;
  const Matrix& v = tape_->dense_value(leaf.id);
  if (!tape_->touched_[slot]) {
    dst.setZero(v.rows(), v.cols());
    return;
  }
  dst = tape_->adjoints_[slot];
}

// ---------------------------------------------------------------------------
// Scalar operators

namespace {

Tape* tape_of(const Var& a, const Var& b) {
  if (a.tape && b.tape && a.tape != b.tape) {
    throw InvalidInput("operands belong to different tapes");
  }
  return a.tape ? a.tape : b.tape;
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (!t) return Var(a.v + b.v);
  if (a.is_constant()) return t->push_scalar(Op::AddConst, b.id, -1, a.v + b.v, a.v);
  if (b.is_constant()) return t->push_scalar(Op::AddConst, a.id, -1, a.v + b.v, b.v);
  return t->push_scalar(Op::Add, a.id, b.id, a.v + b.v, 0.0);
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (!t) return Var(a.v - b.v);
  if (a.is_constant()) return t->push_scalar(Op::ConstSub, b.id, -1, a.v - b.v, a.v);
  if (b.is_constant()) return t->push_scalar(Op::AddConst, a.id, -1, a.v - b.v, -b.v);
  return t->push_scalar(Op::Sub, a.id, b.id, a.v - b.v, 0.0);
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (!t) return Var(a.v * b.v);
  if (a.is_constant()) return t->push_scalar(Op::MulConst, b.id, -1, a.v * b.v, a.v);
  if (b.is_constant()) return t->push_scalar(Op::MulConst, a.id, -1, a.v * b.v, b.v);
  return t->push_scalar(Op::Mul, a.id, b.id, a.v * b.v, 0.0);
}

Var operator/(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (!t) return Var(a.v / b.v);
  if (a.is_constant()) return t->push_scalar(Op::ConstDiv, b.id, -1, a.v / b.v, a.v);
  if (b.is_constant()) return t->push_scalar(Op::MulConst, a.id, -1, a.v / b.v, 1.0 / b.v);
  return t->push_scalar(Op::Div, a.id, b.id, a.v / b.v, 0.0);
}

Var operator-(const Var& a) {
  if (a.is_constant()) return Var(-a.v);
  return a.tape->push_scalar(Op::Neg, a.id, -1, -a.v, 0.0);
}

Var sqrt(const Var& a) {
  const double v = std::sqrt(a.v);
  if (a.is_constant()) return Var(v);
  return a.tape->push_scalar(Op::Sqrt, a.id, -1, v, 0.0);
}

Var exp(const Var& a) {
  const double v = std::exp(a.v);
  if (a.is_constant()) return Var(v);
  return a.tape->push_scalar(Op::Exp, a.id, -1, v, 0.0);
}

Var log(const Var& a) {
  const double v = std::log(a.v);
  if (a.is_constant()) return Var(v);
  return a.tape->push_scalar(Op::Log, a.id, -1, v, 0.0);
}

Var tanh(const Var& a) {
  const double v = std::tanh(a.v);
  if (a.is_constant()) return Var(v);
  return a.tape->push_scalar(Op::Tanh, a.id, -1, v, 0.0);
}

Var softplus(const Var& a) {
  const double v = softplus(a.v);
  if (a.is_constant()) return Var(v);
  return a.tape->push_scalar(Op::Softplus, a.id, -1, v, 0.0);
}

// ---------------------------------------------------------------------------
// Adam

AdamState::AdamState(std::span<const Matrix* const> params, AdamConfig cfg) : config(cfg) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Matrix* p : params) {
    m.push_back(Matrix::Zero(p->rows(), p->cols()));
    v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

double global_norm(std::span<const Matrix* const> grads) {
  double sq = 0.0;
  for (const Matrix* g : grads) sq += g->squaredNorm();
  return std::sqrt(sq);
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw InvalidInput("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto r = params[i]->rows();
    const auto c = params[i]->cols();
    if (grads[i]->rows() != r || grads[i]->cols() != c || state.m[i].rows() != r ||
        state.m[i].cols() != c || state.v[i].rows() != r || state.v[i].cols() != c) {
      throw InvalidInput("adam_step: shape mismatch in tensor " + std::to_string(i));
    }
  }
  const AdamConfig& cfg = state.config;
  double scale = 1.0;
  if (cfg.clip_norm > 0.0) {
    const double norm = global_norm(grads);
    if (norm > cfg.clip_norm) scale = cfg.clip_norm / norm;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto g = grads[i]->array();
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    m = cfg.beta1 * m + ((1.0 - cfg.beta1) * scale) * g;
    v = cfg.beta2 * v + ((1.0 - cfg.beta2) * scale * scale) * g.square();
    params[i]->array() -= (cfg.lr / bc1) * m / ((v * (1.0 / bc2)).sqrt() + cfg.eps);
  }
}

}  // namespace rcid::diffkit
