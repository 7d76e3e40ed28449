#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace stereosr {

using Scalar = double;
using Matrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Planar channel-major, row-major image/feature volume. Image-valued
/// tensors carry values in [0,1]; `is_image` distinguishes the two roles.
template <class T>
class Tensor3T {
 public:
  using MatrixT =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapT = Eigen::Map<MatrixT>;
  using ConstMapT = Eigen::Map<const MatrixT>;

  Tensor3T() = default;
  Tensor3T(int channels, int height, int width, bool is_image = false)
      : c_(channels), h_(height), w_(width), is_image_(is_image) {
    if (channels <= 0 || height <= 0 || width <= 0)
      throw std::invalid_argument("Tensor3: non-positive dimension");
    data_.setZero(static_cast<Eigen::Index>(channels) * height * width);
  }

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  bool is_image() const { return is_image_; }
  void set_image(bool v) { is_image_ = v; }
  Eigen::Index size() const { return data_.size(); }

  Eigen::Matrix<T, Eigen::Dynamic, 1>& data() { return data_; }
  const Eigen::Matrix<T, Eigen::Dynamic, 1>& data() const { return data_; }

  T& operator()(int c, int y, int x) {
    return data_[(static_cast<Eigen::Index>(c) * h_ + y) * w_ + x];
  }
  T operator()(int c, int y, int x) const {
    return data_[(static_cast<Eigen::Index>(c) * h_ + y) * w_ + x];
  }

  /// h x w view of one channel plane.
  MapT channel(int c) {
    return MapT(data_.data() + static_cast<Eigen::Index>(c) * h_ * w_, h_, w_);
  }
  ConstMapT channel(int c) const {
    return ConstMapT(data_.data() + static_cast<Eigen::Index>(c) * h_ * w_,
                     h_, w_);
  }

  bool same_shape(const Tensor3T& o) const {
    return c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  void clamp01() { data_ = data_.cwiseMax(T(0)).cwiseMin(T(1)); }

 private:
  int c_ = 0, h_ = 0, w_ = 0;
  bool is_image_ = false;
  Eigen::Matrix<T, Eigen::Dynamic, 1> data_;
};

using Tensor3 = Tensor3T<Scalar>;

struct StereoPair {
  Tensor3 left;
  Tensor3 right;

  StereoPair() = default;
  StereoPair(Tensor3 l, Tensor3 r) : left(std::move(l)), right(std::move(r)) {
    if (!left.same_shape(right))
      throw std::invalid_argument("StereoPair: eye shapes differ");
  }
};

/// Odd-sized square kernel whose taps sum to 1.
struct Kernel2D {
  int size = 0;
  Matrix taps;  // size x size

  Kernel2D() = default;
  Kernel2D(int size_, Matrix taps_) : size(size_), taps(std::move(taps_)) {
    if (size % 2 == 0 || size <= 0)
      throw std::invalid_argument("Kernel2D: size must be odd and positive");
    if (taps.rows() != size || taps.cols() != size)
      throw std::invalid_argument("Kernel2D: tap matrix shape mismatch");
    const Scalar s = taps.sum();
    if (std::abs(s - 1.0) > 1e-6)
      throw std::invalid_argument("Kernel2D: taps must sum to 1");
  }
};

inline void require_same_shape(const Tensor3& a, const Tensor3& b,
                               const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace stereosr
