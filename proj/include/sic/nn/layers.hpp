#pragma once

// Stateless layer kernels: "same" convolution (cross-correlation, im2col +
// GEMM per sample), relu, sigmoid and inverted dropout.

#include <cmath>
#include <cstring>
#include <random>

#include "sic/nn/tensor.hpp"

namespace sic::nn {

/// Leading zero padding of a "same" convolution. Even kernels pad one extra
/// row/column at the trailing edge.
inline Index leading_pad(Index kernel) { return (kernel - 1) / 2; }

/// Unfolds one sample (H*W x C, row-major) into an (H*W) x (k*k*C) patch matrix.
/// Column order is (ky, kx, channel), matching the weight row order.
template <typename Scalar, typename Src>
void im2col(const Src& x, Index h, Index w, Index c, Index kernel, RowMatrix<Scalar>& cols) {
  const Index pad = leading_pad(kernel);
  cols.setZero(h * w, kernel * kernel * c);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      Scalar* dst = cols.data() + (i * w + j) * cols.cols();
      for (Index ky = 0; ky < kernel; ++ky) {
        const Index si = i + ky - pad;
        if (si < 0 || si >= h) continue;
        for (Index kx = 0; kx < kernel; ++kx) {
          const Index sj = j + kx - pad;
          if (sj < 0 || sj >= w) continue;
          std::memcpy(dst + (ky * kernel + kx) * c, x.data() + (si * w + sj) * x.outerStride(), sizeof(Scalar) * static_cast<std::size_t>(c));
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters patch-matrix gradients back onto the sample.
template <typename Scalar, typename Dst>
void col2im_add(const RowMatrix<Scalar>& cols, Index h, Index w, Index c, Index kernel, Dst&& x) {
  const Index pad = leading_pad(kernel);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const Scalar* src = cols.data() + (i * w + j) * cols.cols();
      for (Index ky = 0; ky < kernel; ++ky) {
        const Index si = i + ky - pad;
        if (si < 0 || si >= h) continue;
        for (Index kx = 0; kx < kernel; ++kx) {
          const Index sj = j + kx - pad;
          if (sj < 0 || sj >= w) continue;
          const Scalar* s = src + (ky * kernel + kx) * c;
          for (Index ch = 0; ch < c; ++ch) x(si * w + sj, ch) += s[ch];
        }
      }
    }
  }
}

/// y = conv(x, weight) + bias with zero "same" padding. `weight` is (k*k*Cin) x Cout.
template <typename Scalar>
Tensor4<Scalar> conv2d_forward(const Tensor4<Scalar>& x, const RowMatrix<Scalar>& weight, const Vector<Scalar>& bias,
                               Index kernel) {
  if (kernel <= 0 || weight.rows() != kernel * kernel * x.c()) {
    throw InvalidArgument("conv2d: channel mismatch (input " + x.shape_string() + ", weight rows " +
                          std::to_string(weight.rows()) + ", kernel " + std::to_string(kernel) + ")");
  }
  if (bias.size() != weight.cols()) throw InvalidArgument("conv2d: bias size does not match output channels");
  Tensor4<Scalar> y(x.n(), x.h(), x.w(), weight.cols());
  RowMatrix<Scalar> cols;
  for (Index k = 0; k < x.n(); ++k) {
    auto out = y.sample(k);
    if (kernel == 1) {
      out.noalias() = x.sample(k) * weight;
    } else {
      im2col<Scalar>(x.sample(k), x.h(), x.w(), x.c(), kernel, cols);
      out.noalias() = cols * weight;
    }
    out.rowwise() += bias.transpose();
  }
  return y;
}

template <typename Scalar>
struct ConvGradients {
  Tensor4<Scalar> grad_x;  // empty when not requested
  RowMatrix<Scalar> grad_w;
  Vector<Scalar> grad_b;
};

template <typename Scalar>
ConvGradients<Scalar> conv2d_backward(const Tensor4<Scalar>& grad_out, const Tensor4<Scalar>& x,
                                      const RowMatrix<Scalar>& weight, Index kernel, bool need_grad_x = true) {
  if (!grad_out.same_spatial(x) || grad_out.c() != weight.cols() || weight.rows() != kernel * kernel * x.c()) {
    throw InvalidArgument("conv2d_backward: shape mismatch (grad " + grad_out.shape_string() + ", input " +
                          x.shape_string() + ")");
  }
  ConvGradients<Scalar> g;
  g.grad_w = RowMatrix<Scalar>::Zero(weight.rows(), weight.cols());
  g.grad_b = grad_out.matrix().colwise().sum().transpose();
  if (need_grad_x) g.grad_x = Tensor4<Scalar>(x.n(), x.h(), x.w(), x.c());
  RowMatrix<Scalar> cols;
  RowMatrix<Scalar> grad_cols;
  for (Index k = 0; k < x.n(); ++k) {
    const auto gy = grad_out.sample(k);
    if (kernel == 1) {
      g.grad_w.noalias() += x.sample(k).transpose() * gy;
      if (need_grad_x) g.grad_x.sample(k).noalias() = gy * weight.transpose();
    } else {
      im2col<Scalar>(x.sample(k), x.h(), x.w(), x.c(), kernel, cols);
      g.grad_w.noalias() += cols.transpose() * gy;
      if (need_grad_x) {
        grad_cols.noalias() = gy * weight.transpose();
        col2im_add<Scalar>(grad_cols, x.h(), x.w(), x.c(), kernel, g.grad_x.sample(k));
      }
    }
  }
  return g;
}

template <typename Scalar>
Tensor4<Scalar> relu_forward(const Tensor4<Scalar>& x) {
  return Tensor4<Scalar>(x.n(), x.h(), x.w(), x.matrix().cwiseMax(Scalar(0)).eval());
}

/// Uses the forward output: d relu = 1 where y > 0.
template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& grad_out, const Tensor4<Scalar>& y) {
  typename Tensor4<Scalar>::Matrix g = (y.matrix().array() > Scalar(0)).select(grad_out.matrix(), Scalar(0));
  return Tensor4<Scalar>(y.n(), y.h(), y.w(), std::move(g));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
Tensor4<Scalar> sigmoid_forward(const Tensor4<Scalar>& x) {
  typename Tensor4<Scalar>::Matrix y = x.matrix().unaryExpr([](Scalar v) { return sigmoid(v); });
  return Tensor4<Scalar>(x.n(), x.h(), x.w(), std::move(y));
}

template <typename Scalar>
Tensor4<Scalar> sigmoid_backward(const Tensor4<Scalar>& grad_out, const Tensor4<Scalar>& y) {
  typename Tensor4<Scalar>::Matrix g =
      (grad_out.matrix().array() * y.matrix().array() * (Scalar(1) - y.matrix().array())).matrix();
  return Tensor4<Scalar>(y.n(), y.h(), y.w(), std::move(g));
}

/// Inverted-dropout mask: 0 with probability `rate`, 1/(1-rate) otherwise.
template <typename Scalar, typename Generator>
RowMatrix<Scalar> dropout_mask(Index rows, Index cols, double rate, Generator& gen) {
  if (rate < 0.0 || rate >= 1.0) throw InvalidArgument("dropout rate must lie in [0, 1)");
  RowMatrix<Scalar> mask(rows, cols);
  const Scalar keep = Scalar(1.0 / (1.0 - rate));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = unit(gen) < rate ? Scalar(0) : keep;
  return mask;
}

}  // namespace sic::nn
