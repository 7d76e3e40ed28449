#pragma once

#include <functional>

#include "stereosr/tensor.hpp"

namespace stereosr {

struct LossWeights {
  double gamma = 1.0;    // perceptual
  double lambda = 0.1;   // adversarial
  double eta = 1.0;      // pixel
  double epsilon = 0.1;  // residual-perceptual
};

/// Pluggable perceptual distance: zero at identity, symmetric.
using PerceptualBackend =
    std::function<double(const Tensor3&, const Tensor3&)>;

/// Default backend: 3-level Gaussian-pyramid mean-L1 distance.
PerceptualBackend pyramid_l1_backend();

double pixel_l1(const StereoPair& sr, const StereoPair& hr);

/// Per-eye distances plus epsilon-weighted distance of the right-minus-left
/// residuals (shifted to [0,1] before evaluation).
double perceptual_residual_loss(const StereoPair& sr, const StereoPair& hr,
                                const PerceptualBackend& backend,
                                double epsilon);

double adversarial_g_loss(double d_scalar_on_sr);
double total_g_loss(double per, double adv, double pix, const LossWeights& w);
double d_loss(double d_scalar_on_sr);

/// 10 log10(1 / MSE) over all channels; +inf for identical inputs.
double psnr_rgb(const Tensor3& a, const Tensor3& b);

/// Mean windowed SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
/// per channel then averaged. Windows are fully interior (no padding).
double ssim(const Tensor3& a, const Tensor3& b);

struct DisparityMap {
  Matrix values;                                      // H x W, pixels
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> valid;  // H x W
};

/// SSD block matching along scanlines in [0, d_max], lowest disparity on
/// ties, with a 1 px left-right consistency check.
DisparityMap block_match_disparity(const StereoPair& pair, int d_max,
                                   int window);

/// Mean absolute disparity error over pixels valid in both maps.
double made(const StereoPair& sr, const StereoPair& hr, int d_max,
            int window);

/// Joint-valid fraction alongside the error (for reporting).
struct MadeResult {
  double error;
  double valid_fraction;
};
MadeResult made_detailed(const StereoPair& sr, const StereoPair& hr,
                         int d_max, int window);

inline constexpr int kDefaultDisparityWindow = 9;
inline constexpr int kDefaultDisparityMax = 64;

}  // namespace stereosr
