#include <doctest.h>

#include <cmath>

#include "stereosr/ops.hpp"
#include "stereosr/rng.hpp"

using namespace stereosr;

namespace {

Tensor3 random_tensor(int c, int h, int w, std::uint64_t seed,
                      bool image = false) {
  Tensor3 t(c, h, w, image);
  SeededRng rng(seed, 0);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    t.data()[i] = image ? rng.next_double() : rng.normal();
  return t;
}

int reflect_idx(int i, int n) {
  if (n == 1) return 0;
  const int p = 2 * n;
  i = ((i % p) + p) % p;
  return i < n ? i : p - 1 - i;
}

// Brute-force nested-loop reference convolution with reflect borders.
Tensor3 reference_conv(const Tensor3& img, const Kernel2D& k) {
  const int r = k.size / 2;
  Tensor3 out(img.channels(), img.height(), img.width(), img.is_image());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        double acc = 0;
        for (int ky = -r; ky <= r; ++ky)
          for (int kx = -r; kx <= r; ++kx)
            acc += k.taps(ky + r, kx + r) *
                   img(c, reflect_idx(y + ky, img.height()),
                       reflect_idx(x + kx, img.width()));
        out(c, y, x) = acc;
      }
  return out;
}

double cubic_ref(double x, double a = -0.5) {
  x = std::abs(x);
  if (x < 1) return ((a + 2) * x - (a + 3)) * x * x + 1;
  if (x < 2) return (((x - 5) * x + 8) * x - 4) * a;
  return 0;
}

}  // namespace

TEST_CASE("conv2d_reflect identity kernel") {
  const Tensor3 img = random_tensor(3, 7, 5, 1);
  const Kernel2D id(1, Matrix::Ones(1, 1));
  const Tensor3 out = conv2d_reflect(img, id);
  CHECK((out.data() - img.data()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conv2d_reflect keeps constants constant") {
  Tensor3 img(2, 6, 6);
  img.data().setConstant(0.37);
  Matrix taps = Matrix::Ones(3, 3) / 9.0;
  const Tensor3 out = conv2d_reflect(img, Kernel2D(3, taps));
  CHECK((out.data().array() - 0.37).abs().maxCoeff() < 1e-12);
}

TEST_CASE("conv2d_reflect matches brute-force oracle on a ramp") {
  Tensor3 img(1, 5, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) img(0, y, x) = y * 5 + x;
  const Kernel2D box(3, Matrix::Ones(3, 3) / 9.0);
  const Tensor3 got = conv2d_reflect(img, box);
  const Tensor3 want = reference_conv(img, box);
  CHECK((got.data() - want.data()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conv2d_reflect preserves the global mean approximately") {
  const Tensor3 img = random_tensor(1, 16, 16, 9, true);
  const Kernel2D box(5, Matrix::Ones(5, 5) / 25.0);
  const Tensor3 out = conv2d_reflect(img, box);
  CHECK(std::abs(out.data().mean() - img.data().mean()) < 1e-3);
}

TEST_CASE("Kernel2D rejects even sizes and unnormalized taps") {
  CHECK_THROWS_AS(Kernel2D(4, Matrix::Ones(4, 4) / 16.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(Kernel2D(3, Matrix::Ones(3, 3)), std::invalid_argument);
}

TEST_CASE("resize unit scale is the identity") {
  const Tensor3 img = random_tensor(3, 6, 9, 2, true);
  const Tensor3 out = resize(img, 6, 9, ResizeMode::kBilinear);
  CHECK((out.data() - img.data()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("area resize at integer ratio is block averaging") {
  const Tensor3 img = random_tensor(2, 4, 4, 3, true);
  const Tensor3 out = resize(img, 2, 2, ResizeMode::kArea);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        const double mean = (img(c, 2 * y, 2 * x) + img(c, 2 * y, 2 * x + 1) +
                             img(c, 2 * y + 1, 2 * x) +
                             img(c, 2 * y + 1, 2 * x + 1)) /
                            4.0;
        CHECK(out(c, y, x) == doctest::Approx(mean).epsilon(1e-6));
      }
}

TEST_CASE("bicubic resize matches direct separable cubic evaluation") {
  const Tensor3 img = random_tensor(1, 8, 8, 4, false);
  const Tensor3 out = resize(img, 5, 5, ResizeMode::kBicubic);

  auto sample_axis = [](double src, int n, auto&& fetch) {
    const int base = static_cast<int>(std::floor(src));
    double acc = 0, wsum = 0;
    for (int k = base - 1; k <= base + 2; ++k) {
      const double w = cubic_ref(src - k);
      acc += w * fetch(std::clamp(k, 0, n - 1));
      wsum += w;
    }
    return acc / wsum;
  };
  const double sy = 8.0 / 5.0, sx = 8.0 / 5.0;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const double src_y = (y + 0.5) * sy - 0.5;
      const double src_x = (x + 0.5) * sx - 0.5;
      const double want = sample_axis(src_y, 8, [&](int yy) {
        return sample_axis(src_x, 8, [&](int xx) { return img(0, yy, xx); });
      });
      CHECK(out(0, y, x) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("resize rejects zero target dims") {
  const Tensor3 img = random_tensor(1, 4, 4, 5);
  CHECK_THROWS_AS(resize(img, 0, 4, ResizeMode::kBilinear),
                  std::invalid_argument);
}

TEST_CASE("layer_norm collapses constant channels") {
  Tensor3 t(2, 2, 2);
  t.data().setConstant(3.0);
  const Tensor3 out = layer_norm(t);
  CHECK(out.data().cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("layer_norm fixes already-normalized locations") {
  Tensor3 t(2, 1, 1);
  t(0, 0, 0) = -1.0;
  t(1, 0, 0) = 1.0;
  const Tensor3 out = layer_norm(t);
  CHECK(out(0, 0, 0) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(out(1, 0, 0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("layer_norm moments by direct summation") {
  const Tensor3 t = random_tensor(4, 5, 6, 6);
  const Tensor3 out = layer_norm(t);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) {
      double mean = 0, var = 0;
      for (int c = 0; c < 4; ++c) mean += out(c, y, x);
      mean /= 4;
      for (int c = 0; c < 4; ++c)
        var += (out(c, y, x) - mean) * (out(c, y, x) - mean);
      var /= 4;
      CHECK(std::abs(mean) < 1e-5);
      CHECK(std::abs(var - 1.0) < 1e-3);
    }
}

TEST_CASE("layer_norm is shift invariant across channels") {
  const Tensor3 t = random_tensor(4, 3, 3, 7);
  Tensor3 shifted = t;
  shifted.data().array() += 2.5;
  const Tensor3 a = layer_norm(t);
  const Tensor3 b = layer_norm(shifted);
  CHECK((a.data() - b.data()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("layer_norm rejects mismatched gain length") {
  const Tensor3 t = random_tensor(4, 2, 2, 8);
  CHECK_THROWS_AS(layer_norm(t, Vector::Ones(3), Vector::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("pixel_shuffle definitional layout") {
  Tensor3 t(4, 1, 1);
  t.data() << 1, 2, 3, 4;
  const Tensor3 out = pixel_shuffle(t, 2);
  CHECK(out.channels() == 1);
  CHECK(out(0, 0, 0) == 1);
  CHECK(out(0, 0, 1) == 2);
  CHECK(out(0, 1, 0) == 3);
  CHECK(out(0, 1, 1) == 4);
}

TEST_CASE("pixel_shuffle scale 1 is identity") {
  const Tensor3 t = random_tensor(3, 2, 2, 10);
  const Tensor3 out = pixel_shuffle(t, 1);
  CHECK((out.data() - t.data()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pixel_shuffle index-arithmetic oracle") {
  const Tensor3 t = random_tensor(8, 2, 3, 11);
  const Tensor3 out = pixel_shuffle(t, 2);
  REQUIRE(out.channels() == 2);
  REQUIRE(out.height() == 4);
  REQUIRE(out.width() == 6);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 6; ++x) {
        const int src_c = c * 4 + (y % 2) * 2 + (x % 2);
        CHECK(out(c, y, x) == t(src_c, y / 2, x / 2));
      }
}

TEST_CASE("pixel_shuffle is a bijection on elements") {
  const Tensor3 t = random_tensor(8, 3, 2, 12);
  const Tensor3 out = pixel_shuffle(t, 2);
  Vector a = t.data(), b = out.data();
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pixel_shuffle rejects indivisible channels") {
  const Tensor3 t = random_tensor(3, 2, 2, 13);
  CHECK_THROWS_AS(pixel_shuffle(t, 2), std::invalid_argument);
}

TEST_CASE("softmax_rows uniform and limit cases") {
  Matrix m(1, 4);
  m.setConstant(2.0);
  CHECK((softmax_rows(m).array() - 0.25).abs().maxCoeff() < 1e-12);

  Matrix big(1, 2);
  big << 0.0, 500.0;
  const Matrix s = softmax_rows(big);
  CHECK(s(0, 0) < 1e-12);
  CHECK(s(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("softmax_rows against high-precision direct evaluation") {
  Matrix m(1, 3);
  m << 1, 2, 3;
  const Matrix s = softmax_rows(m);
  const long double e1 = expl(1.0L), e2 = expl(2.0L), e3 = expl(3.0L);
  const long double z = e1 + e2 + e3;
  CHECK(s(0, 0) == doctest::Approx(double(e1 / z)).epsilon(1e-14));
  CHECK(s(0, 1) == doctest::Approx(double(e2 / z)).epsilon(1e-14));
  CHECK(s(0, 2) == doctest::Approx(double(e3 / z)).epsilon(1e-14));
}

TEST_CASE("softmax_rows rows sum to 1 and are shift invariant") {
  SeededRng rng(21, 0);
  Matrix m(8, 6);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 6; ++c) m(r, c) = rng.normal() * 10;
  const Matrix s = softmax_rows(m);
  for (int r = 0; r < 8; ++r)
    CHECK(std::abs(s.row(r).sum() - 1.0) < 1e-9);
  Matrix shifted = m;
  shifted.array() += 123.0;
  CHECK((softmax_rows(shifted) - s).cwiseAbs().maxCoeff() < 1e-12);
}
