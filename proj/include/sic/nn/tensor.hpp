#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>

#include "sic/error.hpp"

namespace sic::nn {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// N x H x W x C tensor. Stored as an (N*H*W) x C row-major matrix, so every
/// pixel's channels are contiguous and a 1x1 convolution is a plain GEMM.
template <typename Scalar>
class Tensor4 {
 public:
  using Matrix = RowMatrix<Scalar>;

  Tensor4() = default;
  Tensor4(Index n, Index h, Index w, Index c) : n_(n), h_(h), w_(w), c_(c), data_(Matrix::Zero(n * h * w, c)) {
    if (n <= 0 || h <= 0 || w <= 0 || c < 0) throw InvalidArgument("tensor dimensions must be positive");
  }
  Tensor4(Index n, Index h, Index w, Matrix data) : n_(n), h_(h), w_(w), c_(data.cols()), data_(std::move(data)) {
    if (data_.rows() != n * h * w) throw InvalidArgument("tensor data rows do not match N*H*W");
  }

  Index n() const { return n_; }
  Index h() const { return h_; }
  Index w() const { return w_; }
  Index c() const { return c_; }
  Index pixels() const { return h_ * w_; }
  Index size() const { return data_.size(); }

  Matrix& matrix() { return data_; }
  const Matrix& matrix() const { return data_; }

  /// Rows belonging to sample k: (H*W) x C.
  auto sample(Index k) { return data_.middleRows(k * pixels(), pixels()); }
  auto sample(Index k) const { return data_.middleRows(k * pixels(), pixels()); }

  Scalar& operator()(Index n, Index i, Index j, Index ch) { return data_((n * h_ + i) * w_ + j, ch); }
  Scalar operator()(Index n, Index i, Index j, Index ch) const { return data_((n * h_ + i) * w_ + j, ch); }

  bool same_shape(const Tensor4& o) const { return n_ == o.n_ && h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }
  bool same_spatial(const Tensor4& o) const { return n_ == o.n_ && h_ == o.h_ && w_ == o.w_; }

  std::string shape_string() const {
    return std::to_string(n_) + "x" + std::to_string(h_) + "x" + std::to_string(w_) + "x" + std::to_string(c_);
  }

  template <typename Other>
  Tensor4<Other> cast() const {
    return Tensor4<Other>(n_, h_, w_, data_.template cast<Other>().eval());
  }

 private:
  Index n_ = 0, h_ = 0, w_ = 0, c_ = 0;
  Matrix data_;
};

using Tensor4d = Tensor4<double>;

/// Channel concatenation, a's channels first.
template <typename Scalar>
Tensor4<Scalar> concat_channels(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  if (!a.same_spatial(b)) {
    throw InvalidArgument("concat_channels: spatial mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
  typename Tensor4<Scalar>::Matrix m(a.matrix().rows(), a.c() + b.c());
  m.leftCols(a.c()) = a.matrix();
  m.rightCols(b.c()) = b.matrix();
  return Tensor4<Scalar>(a.n(), a.h(), a.w(), std::move(m));
}

/// Inverse of concat_channels for gradients: the first `split` channels and the rest.
template <typename Scalar>
std::pair<Tensor4<Scalar>, Tensor4<Scalar>> split_channels(const Tensor4<Scalar>& t, Index split) {
  if (split < 0 || split > t.c()) throw InvalidArgument("split_channels: split outside channel range");
  return {Tensor4<Scalar>(t.n(), t.h(), t.w(), t.matrix().leftCols(split).eval()),
          Tensor4<Scalar>(t.n(), t.h(), t.w(), t.matrix().rightCols(t.c() - split).eval())};
}

}  // namespace sic::nn
