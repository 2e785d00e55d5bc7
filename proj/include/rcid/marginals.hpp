#pragma once

// Loss-weighted marginal histograms over an estimation trace and the
// per-parameter argmax selection of the final estimate.
//
// Each record contributes exp(-loss) to the bin containing its value of
// parameter i. Bins are equal-width over [min, max] of that parameter in the
// trace; bin j covers [edges[j], edges[j+1]) and the last bin is closed.

#include <cstddef>
#include <vector>

#include "rcid/rc_models.hpp"
#include "rcid/training.hpp"

namespace rcid {

inline constexpr std::size_t kDefaultHistogramBins = 100;

struct MarginalHistogram {
  std::vector<double> edges;    // bins + 1, strictly increasing
  std::vector<double> weights;  // bins, >= 0

  std::size_t bins() const noexcept { return weights.size(); }
  double center(std::size_t bin) const { return 0.5 * (edges.at(bin) + edges.at(bin + 1)); }
  double width(std::size_t bin) const { return edges.at(bin + 1) - edges.at(bin); }
  std::size_t bin_of(double value) const;
  // Lowest-index bin of maximal weight.
  std::size_t argmax() const;
  double total_weight() const;
};

MarginalHistogram marginal_histogram(const EstimationTrace& trace, std::size_t param_index,
                                     std::size_t bins = kDefaultHistogramBins);

ThermalParams select_params(const EstimationTrace& trace,
                            std::size_t bins = kDefaultHistogramBins);

}  // namespace rcid
