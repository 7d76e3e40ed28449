#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stereosr/tensor.hpp"

namespace stereosr {

/// One named flat array in a weight snapshot.
struct WeightBlob {
  std::string name;
  std::vector<std::uint64_t> shape;
  Vector data;
};

/// Flat binary snapshot: magic "SSRW", version, shape table, f64 payload.
void write_weights(const std::string& path,
                   const std::vector<WeightBlob>& blobs);
std::vector<WeightBlob> read_weights(const std::string& path);

}  // namespace stereosr
