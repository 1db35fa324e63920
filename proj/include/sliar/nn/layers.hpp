#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sliar/errors.hpp"
#include "sliar/nn/tensor.hpp"

namespace sliar::nn {

/// y = x W^T + b over the rows of x.
template <typename Scalar>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, Index in, Index out)
      : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {}

  Index in_features() const { return weight.value.cols(); }
  Index out_features() const { return weight.value.rows(); }

  /// PyTorch default: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight and bias.
  void init_uniform_fan_in(std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features()));
    init_uniform(weight, rng, bound);
    init_uniform(bias, rng, bound);
  }

  void init_normal_zero_bias(std::mt19937_64& rng, double stddev) {
    init_normal(weight, rng, stddev);
    bias.value.setZero();
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) const {
    if (x.cols() != in_features()) {
      throw ShapeError(weight.name + ": expected input width " + std::to_string(in_features()) + ", got " +
                       std::to_string(x.cols()));
    }
    Matrix<Scalar> y = x * weight.value.transpose();
    y.rowwise() += bias.value.col(0).transpose();
    return y;
  }

  Vector<Scalar> forward(const Vector<Scalar>& x) const {
    if (x.size() != in_features()) {
      throw ShapeError(weight.name + ": expected input width " + std::to_string(in_features()) + ", got " +
                       std::to_string(x.size()));
    }
    return weight.value * x + bias.value.col(0);
  }

  /// Accumulates parameter gradients and returns dL/dx.
  Matrix<Scalar> backward(const Matrix<Scalar>& x, const Matrix<Scalar>& dy) {
    weight.grad.noalias() += dy.transpose() * x;
    bias.grad.col(0) += dy.colwise().sum().transpose();
    return dy * weight.value;
  }

  Vector<Scalar> backward(const Vector<Scalar>& x, const Vector<Scalar>& dy) {
    weight.grad.noalias() += dy * x.transpose();
    bias.grad.col(0) += dy;
    return weight.value.transpose() * dy;
  }

  void collect(ParameterList<Scalar>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;
};

/// Per-row layer normalization with learned gain and shift.
template <typename Scalar>
class LayerNorm {
 public:
  struct Cache {
    Matrix<Scalar> normalized;
    Vector<Scalar> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, Index width, double eps = 1e-12)
      : gamma(name + ".weight", width, 1), beta(name + ".bias", width, 1), eps_(eps) {
    gamma.value.setOnes();
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Cache* cache = nullptr) const {
    const Vector<Scalar> mean = x.rowwise().mean();
    Matrix<Scalar> centered = x.colwise() - mean;
    const Vector<Scalar> var = centered.array().square().rowwise().mean();
    const Vector<Scalar> inv_std = (var.array() + Scalar(eps_)).rsqrt();
    Matrix<Scalar> normalized = centered.array().colwise() * inv_std.array();
    Matrix<Scalar> y = normalized.array().rowwise() * gamma.value.col(0).transpose().array();
    y.rowwise() += beta.value.col(0).transpose();
    if (cache) {
      cache->normalized = std::move(normalized);
      cache->inv_std = inv_std;
    }
    return y;
  }

  Matrix<Scalar> backward(const Cache& cache, const Matrix<Scalar>& dy) {
    const auto& xhat = cache.normalized;
    gamma.grad.col(0) += (dy.array() * xhat.array()).colwise().sum().transpose().matrix();
    beta.grad.col(0) += dy.colwise().sum().transpose();
    const Matrix<Scalar> dxhat = dy.array().rowwise() * gamma.value.col(0).transpose().array();
    const Scalar n = static_cast<Scalar>(dy.cols());
    const Vector<Scalar> sum_dxhat = dxhat.rowwise().sum();
    const Vector<Scalar> sum_dxhat_xhat = (dxhat.array() * xhat.array()).rowwise().sum();
    Matrix<Scalar> dx = (n * dxhat.array()).colwise() - sum_dxhat.array();
    dx.array() -= xhat.array().colwise() * sum_dxhat_xhat.array();
    dx.array().colwise() *= cache.inv_std.array() / n;
    return dx;
  }

  void collect(ParameterList<Scalar>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }

  double eps() const { return eps_; }

  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;

 private:
  double eps_ = 1e-12;
};

/// Inverted dropout mask: kept units are scaled by 1/(1-p).
template <typename Scalar>
Vector<Scalar> dropout_mask(Index width, double p, std::mt19937_64& rng) {
  Vector<Scalar> mask(width);
  if (p <= 0) {
    mask.setOnes();
    return mask;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - p));
  for (Index i = 0; i < width; ++i) mask(i) = u(rng) < p ? Scalar(0) : keep_scale;
  return mask;
}

}  // namespace sliar::nn
