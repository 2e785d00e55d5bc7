#pragma once

// Neural parameter estimator: an MLP that maps a standardized lookback
// window of (T_in, u_heat, Q_solar, T_out) to strictly positive RC parameters
// through theta_i = scale_i * softplus(z_i).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rcid/diffkit.hpp"
#include "rcid/rc_models.hpp"
#include "rcid/rng.hpp"
#include "rcid/series.hpp"

namespace rcid {

inline constexpr std::size_t kLookback = 96;
inline constexpr std::size_t kFeatureCount = 4;  // T_in, u_heat, Q_solar, T_out

// Lookback window into a BuildingSeries. Non-owning: the series must outlive
// the window. Inputs cover [start, start + lookback); the label covers
// [start, start + lookback] (lookback + 1 samples).
class TrainingWindow {
 public:
  TrainingWindow(const BuildingSeries& series, std::size_t start,
                 std::size_t lookback = kLookback);

  std::size_t start() const noexcept { return start_; }
  std::size_t lookback() const noexcept { return lookback_; }
  const BuildingSeries& series() const noexcept { return *series_; }

  // lookback x 4 matrix, raw units, columns (T_in, u_heat, Q_solar, T_out).
  diffkit::Matrix features() const;
  std::span<const double> label() const;
  // Forcings aligned to the label horizon (lookback samples).
  Forcings forcings() const;

 private:
  const BuildingSeries* series_;
  std::size_t start_;
  std::size_t lookback_;
};

// Windows at the given stride; count = (length - lookback - 1) / stride + 1.
std::vector<TrainingWindow> slice_windows(const BuildingSeries& series,
                                          std::size_t lookback = kLookback,
                                          std::size_t stride = 1);

struct Standardization {
  double temp_center = 20.0;
  double temp_scale = 10.0;
  double u_scale = 1.0;  // divisor for u_heat
  double q_scale = 1.0;  // divisor for Q_solar

  // Divisors are the 95th percentiles of u_heat and Q_solar over the given
  // series (1.0 where the percentile is zero).
  static Standardization fit(std::span<const BuildingSeries* const> series);
};

struct NetShape {
  std::size_t lookback = kLookback;
  std::size_t hidden_layers = 2;
  std::size_t hidden_width = 140;

  std::size_t input_size() const noexcept { return lookback * kFeatureCount; }
  friend bool operator==(const NetShape&, const NetShape&) = default;
};

// Bounds of the uniform prior used for constant-guess initialization and as
// the GA search box. One range per parameter slot of the topology.
struct ParamRange {
  double lo;
  double hi;
};

std::vector<ParamRange> default_init_ranges(Topology t);

class EstimatorNet {
 public:
  EstimatorNet(Topology topology, diffkit::Vector output_scale, Standardization standardization,
               NetShape shape = {});

  // Glorot-uniform weights, zero biases. The output layer is drawn with an
  // extra gain factor so that a fresh net starts close to output-map(bias).
  void init_random(Rng& rng, double output_gain = 0.1);

  Topology topology() const noexcept { return topology_; }
  std::size_t output_size() const noexcept { return param_count(topology_); }
  const NetShape& shape() const noexcept { return shape_; }
  const Standardization& standardization() const noexcept { return standardization_; }
  const diffkit::Vector& output_scale() const noexcept { return output_scale_; }
  std::string activation() const { return "tanh"; }

  // [W_1, b_1, ..., W_out, b_out]; biases are column vectors.
  std::vector<diffkit::Matrix>& tensors() noexcept { return tensors_; }
  const std::vector<diffkit::Matrix>& tensors() const noexcept { return tensors_; }
  std::vector<diffkit::Matrix*> tensor_ptrs();
  std::vector<const diffkit::Matrix*> tensor_ptrs() const;

  // Flattened standardized input (row-major over time steps).
  diffkit::Vector input_features(const TrainingWindow& window) const;

  diffkit::Vector preactivation(const diffkit::Vector& input) const;
  diffkit::Vector output_map(const diffkit::Vector& z) const;
  diffkit::Vector forward(const diffkit::Vector& input) const;

  // Registers the tensors as dense leaves on `tape`, in tensors() order.
  std::vector<diffkit::DenseVar> bind(diffkit::Tape& tape) const;
  // Records the forward pass; returns the pre-activation z.
  diffkit::DenseVar record_preactivation(diffkit::Tape& tape,
                                         std::span<const diffkit::DenseVar> leaves,
                                         diffkit::DenseVar input) const;
  // Records the forward pass including the output map; returns theta.
  diffkit::DenseVar record_forward(diffkit::Tape& tape, std::span<const diffkit::DenseVar> leaves,
                                   diffkit::DenseVar input) const;

 private:
  Topology topology_;
  NetShape shape_;
  Standardization standardization_;
  diffkit::Vector output_scale_;
  std::vector<diffkit::Matrix> tensors_;
};

// Estimated parameters for one window (forward pass, no tape).
ThermalParams estimate_params(const EstimatorNet& net, const TrainingWindow& window);

// Inverse of softplus for y > 0.
double softplus_inverse(double y);

}  // namespace rcid
