#include "rcid/marginals.hpp"

#include <algorithm>
#include <cmath>

namespace rcid {

std::size_t MarginalHistogram::bin_of(double value) const {
  const std::size_t n = bins();
  const double lo = edges.front();
  const double hi = edges.back();
  double pos = (value - lo) / (hi - lo) * static_cast<double>(n);
  std::size_t j = pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), n - 1);
  // Settle rounding at the edges so membership is decided by the stored edges.
  while (j > 0 && value < edges[j]) --j;
  while (j + 1 < n && value >= edges[j + 1]) ++j;
  return j;
}

std::size_t MarginalHistogram::argmax() const {
  std::size_t best = 0;
  for (std::size_t j = 1; j < weights.size(); ++j) {
    if (weights[j] > weights[best]) best = j;
  }
  return best;
}

double MarginalHistogram::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

MarginalHistogram marginal_histogram(const EstimationTrace& trace, std::size_t param_index,
                                     std::size_t bins) {
  if (trace.empty()) throw InvalidInput("marginal_histogram: empty trace");
  if (bins == 0) throw InvalidInput("marginal_histogram: bins must be >= 1");
  if (param_index >= param_count(trace.topology)) {
    throw InvalidInput("marginal_histogram: parameter index out of range");
  }
  double lo = trace.records.front().theta[param_index];
  double hi = lo;
  for (const auto& r : trace.records) {
    lo = std::min(lo, r.theta[param_index]);
    hi = std::max(hi, r.theta[param_index]);
  }
  if (!(hi > lo)) {
    const double half = std::max(std::abs(lo), 1.0) * 1e-6;
    hi = lo + half;
    lo = lo - half;
  }
  MarginalHistogram h;
  h.edges.resize(bins + 1);
  for (std::size_t j = 0; j < bins; ++j) {
    h.edges[j] = lo + (hi - lo) * (static_cast<double>(j) / static_cast<double>(bins));
  }
  h.edges[bins] = hi;
  h.weights.assign(bins, 0.0);
  for (const auto& r : trace.records) {
    h.weights[h.bin_of(r.theta[param_index])] += std::exp(-r.loss);
  }
  return h;
}

ThermalParams select_params(const EstimationTrace& trace, std::size_t bins) {
  if (trace.empty()) throw InvalidInput("select_params: empty trace");
  const std::size_t n = param_count(trace.topology);
  std::vector<double> best(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = marginal_histogram(trace, i, bins);
    best[i] = h.center(h.argmax());
  }
  return ThermalParams::from_values(trace.topology, best);
}

}  // namespace rcid
