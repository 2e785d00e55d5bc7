#include "rcid/estimator_net.hpp"

#include <algorithm>
#include <cmath>

namespace rcid {

using diffkit::DenseVar;
using diffkit::Matrix;
using diffkit::Vector;

TrainingWindow::TrainingWindow(const BuildingSeries& series, std::size_t start,
                               std::size_t lookback)
    : series_(&series), start_(start), lookback_(lookback) {
  if (lookback == 0) throw InvalidInput("TrainingWindow: lookback must be >= 1");
  if (start + lookback + 1 > series.size()) {
    throw InvalidInput("TrainingWindow: window exceeds series length");
  }
}

Matrix TrainingWindow::features() const {
  Matrix m(lookback_, kFeatureCount);
  for (std::size_t t = 0; t < lookback_; ++t) {
    const std::size_t k = start_ + t;
    m(t, 0) = series_->t_in[k];
    m(t, 1) = series_->u_heat[k];
    m(t, 2) = series_->q_solar[k];
    m(t, 3) = series_->t_out[k];
  }
  return m;
}

std::span<const double> TrainingWindow::label() const {
  return std::span<const double>(series_->t_in).subspan(start_, lookback_ + 1);
}

Forcings TrainingWindow::forcings() const { return series_->forcings(start_, lookback_); }

std::vector<TrainingWindow> slice_windows(const BuildingSeries& series, std::size_t lookback,
                                          std::size_t stride) {
  if (stride == 0) throw InvalidInput("slice_windows: stride must be >= 1");
  if (series.size() < lookback + 1) {
    throw InvalidInput("slice_windows: series has " + std::to_string(series.size()) +
                       " samples, need at least " + std::to_string(lookback + 1));
  }
  std::vector<TrainingWindow> out;
  out.reserve((series.size() - lookback - 1) / stride + 1);
  for (std::size_t s = 0; s + lookback + 1 <= series.size(); s += stride) {
    out.emplace_back(series, s, lookback);
  }
  return out;
}

namespace {

double percentile95(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  // Linear interpolation between closest ranks.
  const double pos = 0.95 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

Standardization Standardization::fit(std::span<const BuildingSeries* const> series) {
  std::vector<double> u;
  std::vector<double> q;
  for (const auto* s : series) {
    u.insert(u.end(), s->u_heat.begin(), s->u_heat.end());
    q.insert(q.end(), s->q_solar.begin(), s->q_solar.end());
  }
  Standardization out;
  const double pu = percentile95(std::move(u));
  const double pq = percentile95(std::move(q));
  out.u_scale = pu > 0.0 ? pu : 1.0;
  out.q_scale = pq > 0.0 ? pq : 1.0;
  return out;
}

std::vector<ParamRange> default_init_ranges(Topology t) {
  const ParamRange r{0.5, 50.0};
  const ParamRange c{0.5, 50.0};
  const ParamRange a{0.5, 20.0};
  if (t == Topology::OneROneC) return {r, c, a};
  return {r, r, c, c, a};
}

EstimatorNet::EstimatorNet(Topology topology, Vector output_scale,
                           Standardization standardization, NetShape shape)
    : topology_(topology),
      shape_(shape),
      standardization_(standardization),
      output_scale_(std::move(output_scale)) {
  if (static_cast<std::size_t>(output_scale_.size()) != param_count(topology)) {
    throw InvalidInput("EstimatorNet: output scale size does not match topology");
  }
  if ((output_scale_.array() <= 0.0).any()) {
    throw InvalidInput("EstimatorNet: output scales must be positive");
  }
  if (shape.hidden_layers == 0 || shape.hidden_width == 0 || shape.lookback == 0) {
    throw InvalidInput("EstimatorNet: degenerate shape");
  }
  const auto in = static_cast<Eigen::Index>(shape.input_size());
  const auto width = static_cast<Eigen::Index>(shape.hidden_width);
  const auto out = static_cast<Eigen::Index>(output_size());
  Eigen::Index prev = in;
  for (std::size_t l = 0; l < shape.hidden_layers; ++l) {
    tensors_.push_back(Matrix::Zero(width, prev));
    tensors_.push_back(Matrix::Zero(width, 1));
    prev = width;
  }
  tensors_.push_back(Matrix::Zero(out, prev));
  tensors_.push_back(Matrix::Zero(out, 1));
}

void EstimatorNet::init_random(Rng& rng, double output_gain) {
  const std::size_t layers = tensors_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix& w = tensors_[2 * l];
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    const double gain = (l + 1 == layers) ? output_gain : 1.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = gain * uniform(rng, -limit, limit);
      }
    }
    tensors_[2 * l + 1].setZero();
  }
}

std::vector<Matrix*> EstimatorNet::tensor_ptrs() {
  std::vector<Matrix*> out;
  for (auto& t : tensors_) out.push_back(&t);
  return out;
}

std::vector<const Matrix*> EstimatorNet::tensor_ptrs() const {
  std::vector<const Matrix*> out;
  for (const auto& t : tensors_) out.push_back(&t);
  return out;
}

Vector EstimatorNet::input_features(const TrainingWindow& window) const {
  if (window.lookback() != shape_.lookback) {
    throw InvalidInput("EstimatorNet: window lookback does not match the network input");
  }
  const auto& s = window.series();
  const auto& st = standardization_;
  Vector x(static_cast<Eigen::Index>(shape_.input_size()));
  for (std::size_t t = 0; t < shape_.lookback; ++t) {
    const std::size_t k = window.start() + t;
    const auto base = static_cast<Eigen::Index>(t * kFeatureCount);
    x(base + 0) = (s.t_in[k] - st.temp_center) / st.temp_scale;
    x(base + 1) = s.u_heat[k] / st.u_scale;
    x(base + 2) = s.q_solar[k] / st.q_scale;
    x(base + 3) = (s.t_out[k] - st.temp_center) / st.temp_scale;
  }
  return x;
}

Vector EstimatorNet::preactivation(const Vector& input) const {
  if (input.size() != static_cast<Eigen::Index>(shape_.input_size())) {
    throw InvalidInput("EstimatorNet: input size mismatch");
  }
  // Same operation sequence as record_preactivation so that taped and plain
  // forward passes agree bit for bit.
  Vector h = input;
  Vector wx;
  const std::size_t layers = tensors_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = tensors_[2 * l];
    wx.resize(w.rows());
    wx.noalias() = w * h;
    Vector a = wx + tensors_[2 * l + 1].col(0);
    if (l + 1 == layers) return a;
    h = a.array().tanh();
  }
  return h;
}

Vector EstimatorNet::output_map(const Vector& z) const {
  return z.unaryExpr([](double v) { return diffkit::softplus(v); }).cwiseProduct(output_scale_);
}

Vector EstimatorNet::forward(const Vector& input) const { return output_map(preactivation(input)); }

std::vector<DenseVar> EstimatorNet::bind(diffkit::Tape& tape) const {
  std::vector<DenseVar> leaves;
  leaves.reserve(tensors_.size());
  for (const auto& t : tensors_) leaves.push_back(tape.dense_leaf(t));
  return leaves;
}

DenseVar EstimatorNet::record_preactivation(diffkit::Tape& tape, std::span<const DenseVar> leaves,
                                            DenseVar input) const {
  if (leaves.size() != tensors_.size()) throw InvalidInput("record_forward: leaf count mismatch");
  DenseVar h = input;
  const std::size_t layers = tensors_.size() / 2;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    h = tape.tanh(tape.add(tape.matvec(leaves[2 * l], h), leaves[2 * l + 1]));
  }
  return tape.add(tape.matvec(leaves[2 * layers - 2], h), leaves[2 * layers - 1]);
}

DenseVar EstimatorNet::record_forward(diffkit::Tape& tape, std::span<const DenseVar> leaves,
                                      DenseVar input) const {
  return tape.mul_const(tape.softplus(record_preactivation(tape, leaves, input)), output_scale_);
}

ThermalParams estimate_params(const EstimatorNet& net, const TrainingWindow& window) {
  const Vector theta = net.forward(net.input_features(window));
  return ThermalParams::from_values(net.topology(),
                                    std::span<const double>(theta.data(), theta.size()));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw InvalidInput("softplus_inverse: argument must be positive");
  // log(exp(y) - 1) = y + log(1 - exp(-y))
  if (y > 30.0) return y;
  return y + std::log(-std::expm1(-y));
}

}  // namespace rcid
