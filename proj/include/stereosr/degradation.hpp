#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stereosr/ops.hpp"
#include "stereosr/rng.hpp"
#include "stereosr/tensor.hpp"

namespace stereosr {

struct NoiseSpec {
  enum class Kind { kGaussian, kPoisson };
  Kind kind = Kind::kGaussian;
  double level = 1.0;  // gaussian: sigma in 8-bit units; poisson: scale
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Sampled-parameter ranges for the three-stage hybrid degradation model.
/// Defaults are the Flickr1024RS synthesis settings.
struct DegradationConfig {
  int scale = 4;
  Range blur_sigma_range{0.2, 1.5};
  int kernel_size = 21;
  double anisotropic_prob = 0.5;
  Range resize_range{0.5, 1.2};
  Range noise_range{1.0, 15.0};
  Range poisson_scale_range{0.5, 3.0};
  Range jpeg_range{30.0, 95.0};
  double sinc_prob = 0.8;
  Range sinc_cutoff_range{1.0471975511965976, 3.141592653589793};  // [pi/3, pi]
  double skip_prob = 0.2;
  bool enable_so = true;  // shuffle stage-2 op order
  bool enable_vb = true;  // left-right varying blur kernels
  bool enable_vn = true;  // left-right varying noise

  void validate() const;
};

/// One applied operation; parameters are sufficient to replay it exactly.
struct DegradationOp {
  std::string stage;  // stage1 | stage2 | stage3 | final
  std::string op;     // blur | resize | noise | jpeg | sinc
  std::string eye;    // left | right | both
  std::map<std::string, double> params;
  std::uint64_t stream_id = 0;  // RNG stream of the parameter draw /
                                // noise realization
};

/// Exact log of a degrade_pair run; replaying it on the same HR pair
/// reproduces the LR pair bit-exactly.
struct DegradationRecord {
  std::uint64_t seed = 0;
  std::vector<DegradationOp> ops;

  std::string to_jsonl() const;  // one JSON object per line
  static DegradationRecord from_jsonl(const std::string& text);
};

/// Rotated bivariate Gaussian evaluated at integer offsets, normalized.
Kernel2D make_gaussian_kernel(int size, double sigma_x, double sigma_y,
                              double theta);

/// Circular low-pass kernel k(i,j) = cutoff/(2 pi r) J1(cutoff r),
/// center tap cutoff^2 / (4 pi), normalized to sum 1.
Kernel2D make_sinc_kernel(int size, double cutoff);

/// First-order Bessel function of the first kind, |error| < 1e-10.
double bessel_j1(double x);

Tensor3 add_gaussian_noise(const Tensor3& img, double sigma_8bit,
                           SeededRng rng);
Tensor3 add_poisson_noise(const Tensor3& img, double scale, SeededRng rng);

/// Quantize to 8-bit, baseline JPEG (4:2:0) encode at `quality`, decode.
Tensor3 jpeg_roundtrip(const Tensor3& img, int quality);

struct StageResult {
  StereoPair pair;
  std::vector<DegradationOp> ops;
};

StageResult stage1(const StereoPair& pair, const DegradationConfig& cfg,
                   SeededRng rng);
StageResult stage2(const StereoPair& pair, const DegradationConfig& cfg,
                   SeededRng rng);
StageResult stage3(const StereoPair& pair, const DegradationConfig& cfg,
                   SeededRng rng);

struct DegradeResult {
  StereoPair pair;
  DegradationRecord record;
};

/// stage1 -> stage2 -> stage3, then a terminal bicubic resize to exactly
/// (H/s, W/s). Bit-deterministic in (hr, cfg, seed).
DegradeResult degrade_pair(const StereoPair& hr, const DegradationConfig& cfg,
                           std::uint64_t seed);

/// Applies a recorded op list to an HR pair; reproduces the original LR
/// output bit-exactly.
StereoPair replay_record(const StereoPair& hr, const DegradationRecord& rec);

}  // namespace stereosr
