#pragma once

// Portable estimator weights.
//
// Binary layout, all integers u32 and all reals f64, little-endian:
//   magic "RCIDNET\0" (8 bytes)
//   version, topology (0 = 1R1C, 1 = 2R2C), activation (0 = tanh),
//   lookback, features, hidden_layers, hidden_width, output_size
//   temp_center, temp_scale, u_scale, q_scale
//   output_size output scales
//   tensor_count, then per tensor: rows, cols, rows*cols values row-major
// Tensors follow EstimatorNet::tensors() order (W_1, b_1, ..., W_out, b_out).
// A JSON sidecar (<file>.json) repeats the header fields.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rcid/estimator_net.hpp"

namespace rcid {

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

struct ArtifactStamp {
  std::string config_hash;
  std::uint64_t master_seed = 0;
};

std::vector<std::uint8_t> serialize_weights(const EstimatorNet& net);
// `source` names the origin in error messages.
EstimatorNet deserialize_weights(const std::vector<std::uint8_t>& bytes,
                                 const std::string& source = "<memory>");

std::string weights_sidecar_json(const EstimatorNet& net, const ArtifactStamp& stamp = {});

// Writes `path` and `path` + ".json".
void save_weights(const std::filesystem::path& path, const EstimatorNet& net,
                  const ArtifactStamp& stamp = {});
EstimatorNet load_weights(const std::filesystem::path& path);

}  // namespace rcid
