#pragma once

#include <cstdint>
#include <vector>

#include "stereosr/generator.hpp"
#include "stereosr/tensor.hpp"

namespace stereosr {

/// Multi-scale features of one eye from the shared U-shaped extractor.
struct UNetFeatures {
  Tensor3 f_x1;  // input resolution
  Tensor3 f_x2;  // half resolution
  Tensor3 f_x4;  // quarter resolution
};

struct UNetWeights {
  Conv3x3 enc1;  // 3  -> c1
  Conv3x3 enc2;  // c1 -> c2, stride 2
  Conv3x3 enc3;  // c2 -> c3, stride 2
  Conv3x3 dec2;  // c3 + c2 -> c2 after upsample + skip
  Conv3x3 dec1;  // c2 + c1 -> c1
};

struct IDEMWeights {
  Matrix w1_left, w1_right, w2_left, w2_right;  // c x c projections
  Vector ln_gain, ln_bias;
  Matrix wc;  // fusion pointwise: c -> map channels
  Vector wc_b;

  static IDEMWeights zeros(int channels, int map_channels);
  static IDEMWeights seeded(int channels, int map_channels, SeededRng& rng);
};

/// Spectral-normalized convolution: persistent power-iteration state.
struct SpectralConv {
  Matrix weight;  // out x (in * k * k)
  Vector b;
  Vector u, v;    // singular-vector estimates
  int iterations = 0;

  /// Weight divided by the current top-singular-value estimate.
  Matrix normalized() const;
};

/// One power-iteration step; returns the updated state.
SpectralConv spectral_normalize(SpectralConv conv);

enum class DiscVariant { kA, kB, kC, kD };

struct DiscriminatorConfig {
  int c1 = 16, c2 = 32, c3 = 64;  // U-Net channel widths
  int map_channels = 8;           // IDEM output channels per scale
  DiscVariant variant = DiscVariant::kD;
  std::uint64_t seed = 0;
  bool zero_fusion = false;  // zero the final fusion conv (diagnostics)
  int sn_warmup = 20;

  void validate() const;
};

struct DiscriminatorWeights {
  UNetWeights unet;         // shared across eyes (per-eye variants)
  Conv3x3 unet_in6;         // 6-channel front end (variant b)
  IDEMWeights idem_x1, idem_x2, idem_x4;
  SpectralConv conv_sn;     // c1 -> map_channels, per eye
  Conv3x3 fusion;           // concat -> 1
  DiscriminatorConfig cfg;

  static DiscriminatorWeights build(const DiscriminatorConfig& cfg);
  std::vector<WeightBlob> to_blobs() const;
};

struct DiscriminatorOutput {
  Tensor3 d_map;    // 1 x H x W raw realness scores (no sigmoid)
  double d_scalar;  // mean of d_map
};

/// Three scales per eye; shared weights, so swapping eyes swaps the sets.
std::pair<UNetFeatures, UNetFeatures> unet_features(const StereoPair& pair,
                                                    const UNetWeights& w);

/// Bidirectional cross-attention, elementwise product, fusion conv.
Tensor3 idem(const Tensor3& xl, const Tensor3& xr, const IDEMWeights& w);

DiscriminatorOutput discriminator_forward(const StereoPair& pair,
                                          const DiscriminatorWeights& w);

}  // namespace stereosr
