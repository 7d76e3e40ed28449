#pragma once

#include <string>

#include "stereosr/tensor.hpp"

namespace stereosr {

/// Reads an 8-bit PNG as a 3-channel image tensor (byte b -> b/255).
/// Grayscale and palette inputs are expanded to RGB.
Tensor3 read_png(const std::string& path);

/// Writes a 3-channel image tensor as 8-bit RGB PNG (round-half-up).
void write_png(const std::string& path, const Tensor3& img);

inline unsigned char to_byte(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<unsigned char>(c * 255.0 + 0.5);
}

}  // namespace stereosr
