#include "stereosr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace stereosr {

namespace {

// Symmetric reflection: ...2 1 0 | 0 1 2 ... n-1 | n-1 n-2...
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

int clampi(int i, int lo, int hi) { return std::min(std::max(i, lo), hi); }

// Catmull-Rom cubic, a = -0.5.
double cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

struct TapSet {
  int first;                   // first source index
  std::vector<double> weight;  // normalized weights
};

// One output coordinate's source taps for bilinear/bicubic under the
// half-pixel-center mapping, with clamped borders.
std::vector<TapSet> make_taps(int n_in, int n_out, ResizeMode mode) {
  const double scale = static_cast<double>(n_in) / n_out;
  const int support = mode == ResizeMode::kBicubic ? 2 : 1;
  std::vector<TapSet> taps(n_out);
  for (int o = 0; o < n_out; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(src));
    TapSet t;
    t.first = base - support + 1;
    double sum = 0.0;
    for (int k = 0; k < 2 * support; ++k) {
      const double d = src - (t.first + k);
      const double w = mode == ResizeMode::kBicubic
                           ? cubic(d)
                           : std::max(0.0, 1.0 - std::abs(d));
      t.weight.push_back(w);
      sum += w;
    }
    for (double& w : t.weight) w /= sum;
    taps[o] = std::move(t);
  }
  return taps;
}

// Fractional box-coverage taps for area resampling; exact block average at
// integer downscale ratios.
std::vector<TapSet> make_area_taps(int n_in, int n_out) {
  const double scale = static_cast<double>(n_in) / n_out;
  std::vector<TapSet> taps(n_out);
  for (int o = 0; o < n_out; ++o) {
    const double lo = o * scale;
    const double hi = (o + 1) * scale;
    TapSet t;
    t.first = static_cast<int>(std::floor(lo));
    const int last = std::min(n_in - 1, static_cast<int>(std::ceil(hi)) - 1);
    double sum = 0.0;
    for (int i = t.first; i <= last; ++i) {
      const double cover =
          std::min(hi, static_cast<double>(i + 1)) - std::max(lo, double(i));
      t.weight.push_back(cover);
      sum += cover;
    }
    for (double& w : t.weight) w /= sum;
    taps[o] = std::move(t);
  }
  return taps;
}

Tensor3 resize_1d_rows(const Tensor3& img, int out_h,
                       const std::vector<TapSet>& taps) {
  Tensor3 out(img.channels(), out_h, img.width(), img.is_image());
  for (int c = 0; c < img.channels(); ++c) {
    auto src = img.channel(c);
    auto dst = out.channel(c);
    for (int y = 0; y < out_h; ++y) {
      const TapSet& t = taps[y];
      dst.row(y).setZero();
      for (size_t k = 0; k < t.weight.size(); ++k) {
        const int sy = clampi(t.first + static_cast<int>(k), 0,
                              img.height() - 1);
        dst.row(y) += t.weight[k] * src.row(sy);
      }
    }
  }
  return out;
}

Tensor3 resize_1d_cols(const Tensor3& img, int out_w,
                       const std::vector<TapSet>& taps) {
  Tensor3 out(img.channels(), img.height(), out_w, img.is_image());
  for (int c = 0; c < img.channels(); ++c) {
    auto src = img.channel(c);
    auto dst = out.channel(c);
    for (int x = 0; x < out_w; ++x) {
      const TapSet& t = taps[x];
      dst.col(x).setZero();
      for (size_t k = 0; k < t.weight.size(); ++k) {
        const int sx = clampi(t.first + static_cast<int>(k), 0,
                              img.width() - 1);
        dst.col(x) += t.weight[k] * src.col(sx);
      }
    }
  }
  return out;
}

}  // namespace

Tensor3 conv2d_reflect(const Tensor3& img, const Kernel2D& kernel) {
  const int r = kernel.size / 2;
  Tensor3 out(img.channels(), img.height(), img.width(), img.is_image());
  for (int c = 0; c < img.channels(); ++c) {
    auto src = img.channel(c);
    auto dst = out.channel(c);
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        double acc = 0.0;
        for (int ky = -r; ky <= r; ++ky) {
          const int sy = reflect(y + ky, img.height());
          for (int kx = -r; kx <= r; ++kx) {
            const int sx = reflect(x + kx, img.width());
            acc += kernel.taps(ky + r, kx + r) * src(sy, sx);
          }
        }
        dst(y, x) = acc;
      }
    }
  }
  return out;
}

Tensor3 resize(const Tensor3& img, int out_h, int out_w, ResizeMode mode) {
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize: target dimensions must be >= 1");
  if (out_h == img.height() && out_w == img.width()) return img;

  std::vector<TapSet> row_taps, col_taps;
  if (mode == ResizeMode::kArea) {
    row_taps = make_area_taps(img.height(), out_h);
    col_taps = make_area_taps(img.width(), out_w);
  } else {
    row_taps = make_taps(img.height(), out_h, mode);
    col_taps = make_taps(img.width(), out_w, mode);
  }
  Tensor3 out = resize_1d_cols(resize_1d_rows(img, out_h, row_taps), out_w,
                               col_taps);
  if (out.is_image()) out.clamp01();
  return out;
}

Tensor3 layer_norm(const Tensor3& feat, const Vector& gain,
                   const Vector& bias) {
  const int c = feat.channels();
  if (gain.size() != c || bias.size() != c)
    throw std::invalid_argument("layer_norm: gain/bias length mismatch");
  Tensor3 out(c, feat.height(), feat.width());
  const Eigen::Index plane =
      static_cast<Eigen::Index>(feat.height()) * feat.width();
  for (Eigen::Index p = 0; p < plane; ++p) {
    double mean = 0.0;
    for (int ch = 0; ch < c; ++ch) mean += feat.data()[ch * plane + p];
    mean /= c;
    double var = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double d = feat.data()[ch * plane + p] - mean;
      var += d * d;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (int ch = 0; ch < c; ++ch) {
      out.data()[ch * plane + p] =
          gain[ch] * (feat.data()[ch * plane + p] - mean) * inv + bias[ch];
    }
  }
  return out;
}

Tensor3 layer_norm(const Tensor3& feat) {
  return layer_norm(feat, Vector::Ones(feat.channels()),
                    Vector::Zero(feat.channels()));
}

Tensor3 pixel_shuffle(const Tensor3& feat, int scale) {
  if (scale < 1) throw std::invalid_argument("pixel_shuffle: scale < 1");
  const int s2 = scale * scale;
  if (feat.channels() % s2 != 0)
    throw std::invalid_argument(
        "pixel_shuffle: channels not divisible by scale^2");
  if (scale == 1) return feat;
  const int co = feat.channels() / s2;
  Tensor3 out(co, feat.height() * scale, feat.width() * scale,
              feat.is_image());
  for (int c = 0; c < co; ++c)
    for (int i = 0; i < scale; ++i)
      for (int j = 0; j < scale; ++j) {
        const int ci = c * s2 + i * scale + j;
        for (int y = 0; y < feat.height(); ++y)
          for (int x = 0; x < feat.width(); ++x)
            out(c, y * scale + i, x * scale + j) = feat(ci, y, x);
      }
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Vector row = m.row(r).transpose();
    const double mx = row.maxCoeff();
    Vector e = (row.array() - mx).exp();
    out.row(r) = (e / e.sum()).transpose();
  }
  return out;
}

}  // namespace stereosr
