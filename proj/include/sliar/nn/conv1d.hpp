#pragma once

#include <string>

#include "sliar/nn/layers.hpp"

namespace sliar::nn {

/// floor((in_len - kernel) / stride) + 1; throws ShapeError when the kernel does not fit.
inline Index conv_output_length(Index in_len, Index kernel, Index stride) {
  if (kernel < 1 || stride < 1) throw ShapeError("kernel and stride must be positive");
  if (in_len < kernel) {
    throw ShapeError("input length " + std::to_string(in_len) + " is shorter than kernel " + std::to_string(kernel));
  }
  return (in_len - kernel) / stride + 1;
}

/// 1-D convolution over a (channels x length) signal, computed as an
/// im2col product. Weight layout is (out, in * kernel) with the kernel tap
/// fastest, matching the usual (out, in, kernel) row-major tensor.
template <typename Scalar>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(const std::string& name, Index in_channels, Index out_channels, Index kernel, Index stride = 1)
      : weight(name + ".weight", out_channels, in_channels * kernel),
        bias(name + ".bias", out_channels, 1),
        in_channels_(in_channels),
        kernel_(kernel),
        stride_(stride) {}

  Index in_channels() const { return in_channels_; }
  Index out_channels() const { return weight.value.rows(); }
  Index kernel() const { return kernel_; }
  Index stride() const { return stride_; }

  void init_uniform_fan_in(std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels_ * kernel_));
    init_uniform(weight, rng, bound);
    init_uniform(bias, rng, bound);
  }

  Matrix<Scalar> im2col(const Matrix<Scalar>& x) const {
    if (x.rows() != in_channels_) {
      throw ShapeError(weight.name + ": expected " + std::to_string(in_channels_) + " input channels, got " +
                       std::to_string(x.rows()));
    }
    const Index out_len = conv_output_length(x.cols(), kernel_, stride_);
    Matrix<Scalar> cols(in_channels_ * kernel_, out_len);
    for (Index t = 0; t < out_len; ++t) {
      for (Index c = 0; c < in_channels_; ++c) {
        cols.col(t).segment(c * kernel_, kernel_) = x.row(c).segment(t * stride_, kernel_).transpose();
      }
    }
    return cols;
  }

  /// Returns (out_channels x out_len). `cols` receives the im2col matrix for backward.
  Matrix<Scalar> forward(const Matrix<Scalar>& x, Matrix<Scalar>* cols_out = nullptr) const {
    Matrix<Scalar> cols = im2col(x);
    Matrix<Scalar> y = weight.value * cols;
    y.colwise() += bias.value.col(0);
    if (cols_out) *cols_out = std::move(cols);
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& cols, Index in_len, const Matrix<Scalar>& dy) {
    weight.grad.noalias() += dy * cols.transpose();
    bias.grad.col(0) += dy.rowwise().sum();
    const Matrix<Scalar> dcols = weight.value.transpose() * dy;
    Matrix<Scalar> dx = Matrix<Scalar>::Zero(in_channels_, in_len);
    for (Index t = 0; t < dy.cols(); ++t) {
      for (Index c = 0; c < in_channels_; ++c) {
        dx.row(c).segment(t * stride_, kernel_) += dcols.col(t).segment(c * kernel_, kernel_).transpose();
      }
    }
    return dx;
  }

  void collect(ParameterList<Scalar>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

 private:
  Index in_channels_ = 1;
  Index kernel_ = 1;
  Index stride_ = 1;
};

/// Max pooling along the length axis, channel by channel.
template <typename Scalar>
class MaxPool1d {
 public:
  explicit MaxPool1d(Index window = 1, Index stride = 1) : window_(window), stride_(stride) {}

  Index window() const { return window_; }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>* argmax = nullptr) const {
    const Index out_len = conv_output_length(x.cols(), window_, stride_);
    Matrix<Scalar> y(x.rows(), out_len);
    if (argmax) argmax->resize(x.rows(), out_len);
    for (Index c = 0; c < x.rows(); ++c) {
      for (Index t = 0; t < out_len; ++t) {
        Index best = 0;
        y(c, t) = x.row(c).segment(t * stride_, window_).maxCoeff(&best);
        if (argmax) (*argmax)(c, t) = t * stride_ + best;
      }
    }
    return y;
  }

  Matrix<Scalar> backward(const Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>& argmax, Index in_len,
                          const Matrix<Scalar>& dy) const {
    Matrix<Scalar> dx = Matrix<Scalar>::Zero(dy.rows(), in_len);
    for (Index c = 0; c < dy.rows(); ++c) {
      for (Index t = 0; t < dy.cols(); ++t) dx(c, argmax(c, t)) += dy(c, t);
    }
    return dx;
  }

 private:
  Index window_;
  Index stride_;
};

}  // namespace sliar::nn
