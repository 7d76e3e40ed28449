#pragma once

#include <cstdint>
#include <vector>

#include "stereosr/ops.hpp"
#include "stereosr/rng.hpp"
#include "stereosr/tensor.hpp"
#include "stereosr/weights_io.hpp"

namespace stereosr {

/// Generic 3x3 convolution weights: `w` is (out_c) x (in_c * 9), reflect
/// borders, plus bias.
struct Conv3x3 {
  Matrix w;
  Vector b;

  static Conv3x3 zeros(int out_c, int in_c);
  static Conv3x3 seeded(int out_c, int in_c, SeededRng& rng);
};

Tensor3 conv3x3_reflect(const Tensor3& feat, const Conv3x3& conv,
                        int stride = 1);

/// Pointwise (1x1) projection applied per pixel.
Tensor3 pointwise(const Tensor3& feat, const Matrix& w, const Vector& b);
Tensor3 pointwise(const Tensor3& feat, const Matrix& w);

struct NAFBlockWeights {
  Vector ln1_gain, ln1_bias, ln2_gain, ln2_bias;
  Matrix pw_expand;   // 2c x c
  Vector pw_expand_b;
  Matrix dw3x3;       // 2c x 9 depthwise taps
  Vector dw3x3_b;
  Matrix ca;          // c x c channel attention on pooled features
  Vector ca_b;
  Matrix pw_project;  // c x c
  Vector pw_project_b;
  Matrix ffn1;        // 2c x c
  Vector ffn1_b;
  Matrix ffn2;        // c x c
  Vector ffn2_b;
  Vector res1_scale, res2_scale;  // per-channel residual scales

  static NAFBlockWeights zeros(int channels);
  static NAFBlockWeights seeded(int channels, SeededRng& rng);
};

struct SCATMWeights {
  Matrix w1_left, w1_right, w2_left, w2_right;  // c x c projections
  Vector gamma_left, gamma_right;               // per-channel scales
  double tau = 1.0;

  static SCATMWeights zeros(int channels, double tau);
  static SCATMWeights seeded(int channels, double tau, SeededRng& rng);
};

struct HashBucketing {
  Matrix projection;                      // b x c, orthonormal rows
  int bucket_count = 0;
  std::vector<int> assignment;            // per-vector bucket index
  std::vector<std::vector<int>> buckets;  // partition of {0..N-1}
};

struct SCGLAWeights {
  Matrix phi_q, phi_k;  // e x c, identical shapes
  Matrix phi_v;         // c x c
  Matrix phi_l;         // l x c
  Matrix scorer_w1;     // h x l
  Vector scorer_b1;
  Matrix scorer_w2;     // capacity x h
  Vector scorer_b2;

  int capacity() const { return static_cast<int>(scorer_w2.rows()); }

  static SCGLAWeights zeros(int channels, int capacity);
  static SCGLAWeights seeded(int channels, int capacity, SeededRng& rng);
};

struct GeneratorConfig {
  int width = 16;       // even (SimpleGate halves channels)
  int n_blocks = 2;
  int scale = 4;        // 2 or 4
  double tau = 1.0;
  int bucket_count = 4;
  int scorer_capacity = 4096;
  std::uint64_t seed = 0;
  bool zero_init = false;

  void validate() const;
};

struct GeneratorWeights {
  Conv3x3 conv_in;  // 3 -> width, shared across eyes
  struct Block {
    NAFBlockWeights naf;
    SCATMWeights scatm;
  };
  std::vector<Block> blocks;
  SCGLAWeights scgla;
  Conv3x3 conv_out;  // width -> 3 * scale^2

  static GeneratorWeights build(const GeneratorConfig& cfg);
  std::vector<WeightBlob> to_blobs() const;
};

/// Elementwise product of the two channel halves; channels halve.
Tensor3 simple_gate(const Tensor3& feat);

Tensor3 naf_block(const Tensor3& feat, const NAFBlockWeights& w);

/// softmax(tau * q k^T / sqrt(C)) v; rows of q/k/v are tokens.
Matrix temperature_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                             double tau);

/// Cross-view attention per scanline row with learnable residual scales.
std::pair<Tensor3, Tensor3> scatm(const Tensor3& xl, const Tensor3& xr,
                                  const SCATMWeights& w);

/// Argmax-of-orthonormal-projection bucketing over column vectors.
HashBucketing bucketize(const Matrix& vectors, int bucket_count,
                        SeededRng rng);

/// Bucketed attention with learned positional + dot-product similarity.
/// `stereo_feat` is c x N, columns are feature vectors.
Matrix scgla(const Matrix& stereo_feat, const HashBucketing& buckets,
             const SCGLAWeights& w);

/// Flatten both views (left first), bucketize, attend, un-flatten; adds the
/// inputs back as a residual.
std::pair<Tensor3, Tensor3> scglam(const Tensor3& fl, const Tensor3& fr,
                                   const SCGLAWeights& w, int bucket_count,
                                   SeededRng rng);

/// Full generator forward pass: shallow conv, block stack, bucketed global
/// attention, pixel-shuffle reconstruction plus a bilinear global residual.
StereoPair generator_forward(const StereoPair& lr, const GeneratorConfig& cfg);
StereoPair generator_forward(const StereoPair& lr, const GeneratorConfig& cfg,
                             const GeneratorWeights& weights);

}  // namespace stereosr
