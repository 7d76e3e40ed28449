#include "stereosr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stereosr/degradation.hpp"
#include "stereosr/ops.hpp"

namespace stereosr {

PerceptualBackend pyramid_l1_backend() {
  return [](const Tensor3& a, const Tensor3& b) -> double {
    require_same_shape(a, b, "pyramid_l1_backend");
    const Kernel2D blur = make_gaussian_kernel(5, 1.0, 1.0, 0.0);
    Tensor3 la = a, lb = b;
    double dist = 0.0;
    for (int level = 0; level < 3; ++level) {
      dist += (la.data() - lb.data()).cwiseAbs().mean();
      if (level == 2) break;
      const int nh = std::max(1, la.height() / 2);
      const int nw = std::max(1, la.width() / 2);
      la = resize(conv2d_reflect(la, blur), nh, nw, ResizeMode::kArea);
      lb = resize(conv2d_reflect(lb, blur), nh, nw, ResizeMode::kArea);
    }
    return dist;
  };
}

double pixel_l1(const StereoPair& sr, const StereoPair& hr) {
  require_same_shape(sr.left, hr.left, "pixel_l1");
  require_same_shape(sr.right, hr.right, "pixel_l1");
  const double sum = (sr.left.data() - hr.left.data()).cwiseAbs().sum() +
                     (sr.right.data() - hr.right.data()).cwiseAbs().sum();
  return sum / static_cast<double>(sr.left.size() + sr.right.size());
}

double perceptual_residual_loss(const StereoPair& sr, const StereoPair& hr,
                                const PerceptualBackend& backend,
                                double epsilon) {
  require_same_shape(sr.left, hr.left, "perceptual_residual_loss");
  require_same_shape(sr.right, hr.right, "perceptual_residual_loss");
  auto residual01 = [](const StereoPair& p) {
    Tensor3 r = p.right;
    r.data() = (p.right.data() - p.left.data() + Vector::Ones(r.size())) / 2.0;
    return r;
  };
  return backend(sr.left, hr.left) + backend(sr.right, hr.right) +
         epsilon * backend(residual01(sr), residual01(hr));
}

double adversarial_g_loss(double d_scalar_on_sr) {
  return 1.0 - d_scalar_on_sr;
}

double total_g_loss(double per, double adv, double pix,
                    const LossWeights& w) {
  return w.gamma * per + w.lambda * adv + w.eta * pix;
}

double d_loss(double d_scalar_on_sr) { return -d_scalar_on_sr; }

double psnr_rgb(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "psnr_rgb");
  const double mse = (a.data() - b.data()).squaredNorm() /
                     static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

Matrix gaussian_window(int size, double sigma) {
  Matrix w(size, size);
  const int r = size / 2;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x)
      w(y + r, x + r) = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
  return w / w.sum();
}

}  // namespace

double ssim(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "ssim");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  if (a.height() < kWin || a.width() < kWin)
    throw std::invalid_argument("ssim: image smaller than window");

  const Matrix w = gaussian_window(kWin, kSigma);
  const int r = kWin / 2;
  double total = 0.0;
  long count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    auto pa = a.channel(c);
    auto pb = b.channel(c);
    for (int y = r; y < a.height() - r; ++y)
      for (int x = r; x < a.width() - r; ++x) {
        double mu_a = 0, mu_b = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const double wv = w(dy + r, dx + r);
            const double va = pa(y + dy, x + dx);
            const double vb = pb(y + dy, x + dx);
            mu_a += wv * va;
            mu_b += wv * vb;
            saa += wv * va * va;
            sbb += wv * vb * vb;
            sab += wv * va * vb;
          }
        const double var_a = saa - mu_a * mu_a;
        const double var_b = sbb - mu_b * mu_b;
        const double cov = sab - mu_a * mu_b;
        total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                 ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        ++count;
      }
  }
  return total / count;
}

namespace {

// SSD matching cost over a clamped window; candidate requires the shifted
// column to stay in bounds at the window center.
Matrix match_scanlines(const Tensor3& from, const Tensor3& to, int d_max,
                       int window, bool to_the_left) {
  const int h = from.height(), w = from.width();
  const int r = window / 2;
  Matrix disp(h, w);
  auto clampi = [](int v, int lo, int hi) {
    return std::min(std::max(v, lo), hi);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double best_cost = std::numeric_limits<double>::infinity();
      int best_d = 0;
      for (int d = 0; d <= d_max; ++d) {
        const int tx = to_the_left ? x - d : x + d;
        if (tx < 0 || tx >= w) break;
        double cost = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int sy = clampi(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int sx = clampi(x + dx, 0, w - 1);
            const int sx2 = clampi(tx + dx, 0, w - 1);
            for (int c = 0; c < from.channels(); ++c) {
              const double diff = from(c, sy, sx) - to(c, sy, sx2);
              cost += diff * diff;
            }
          }
        }
        if (cost < best_cost) {  // strict: ties keep the smaller disparity
          best_cost = cost;
          best_d = d;
        }
      }
      disp(y, x) = best_d;
    }
  return disp;
}

}  // namespace

DisparityMap block_match_disparity(const StereoPair& pair, int d_max,
                                   int window) {
  if (window % 2 == 0 || window < 1)
    throw std::invalid_argument("block_match_disparity: window must be odd");
  if (d_max < 0 || d_max >= pair.left.width())
    throw std::invalid_argument("block_match_disparity: d_max >= width");

  const Matrix d_left = match_scanlines(pair.left, pair.right, d_max, window,
                                        /*to_the_left=*/true);
  const Matrix d_right = match_scanlines(pair.right, pair.left, d_max, window,
                                         /*to_the_left=*/false);

  DisparityMap map;
  map.values = d_left;
  map.valid.resize(d_left.rows(), d_left.cols());
  for (int y = 0; y < d_left.rows(); ++y)
    for (int x = 0; x < d_left.cols(); ++x) {
      const int d = static_cast<int>(d_left(y, x));
      const int xr = x - d;
      map.valid(y, x) =
          xr >= 0 && std::abs(d_right(y, xr) - d_left(y, x)) <= 1.0;
    }
  return map;
}

MadeResult made_detailed(const StereoPair& sr, const StereoPair& hr,
                         int d_max, int window) {
  require_same_shape(sr.left, hr.left, "made");
  require_same_shape(sr.right, hr.right, "made");
  const DisparityMap a = block_match_disparity(sr, d_max, window);
  const DisparityMap b = block_match_disparity(hr, d_max, window);
  double sum = 0.0;
  long joint = 0;
  const long total = a.values.rows() * a.values.cols();
  for (int y = 0; y < a.values.rows(); ++y)
    for (int x = 0; x < a.values.cols(); ++x)
      if (a.valid(y, x) && b.valid(y, x)) {
        sum += std::abs(a.values(y, x) - b.values(y, x));
        ++joint;
      }
  if (joint == 0)
    throw std::runtime_error("made: no jointly valid pixels");
  return {sum / joint, static_cast<double>(joint) / total};
}

double made(const StereoPair& sr, const StereoPair& hr, int d_max,
            int window) {
  return made_detailed(sr, hr, d_max, window).error;
}

}  // namespace stereosr
