#pragma once

#include "stereosr/tensor.hpp"

namespace stereosr {

enum class ResizeMode { kBicubic, kBilinear, kArea };

/// Per-channel 2-D convolution with reflect-padded borders (edge pixel
/// included in the reflection). Output shape equals input shape.
Tensor3 conv2d_reflect(const Tensor3& img, const Kernel2D& kernel);

/// Separable resampling. Sample positions follow the half-pixel-center
/// convention; bicubic uses the Catmull-Rom cubic (a = -0.5). Image-valued
/// outputs are clamped to [0,1].
Tensor3 resize(const Tensor3& img, int out_h, int out_w, ResizeMode mode);

/// LayerNorm across channels at each spatial location, epsilon 1e-6.
Tensor3 layer_norm(const Tensor3& feat, const Vector& gain,
                   const Vector& bias);

/// Parameter-free variant (unit gain, zero bias).
Tensor3 layer_norm(const Tensor3& feat);

/// Sub-pixel rearrangement: (C, H, W) -> (C/s^2, H*s, W*s).
Tensor3 pixel_shuffle(const Tensor3& feat, int scale);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& m);

inline constexpr double kLayerNormEps = 1e-6;

}  // namespace stereosr
