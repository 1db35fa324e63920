#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sliar::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

/// A trainable tensor and its accumulated gradient. Vectors are stored as
/// single-column matrices; `shape` gives the logical (row-major) shape used
/// in checkpoints.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix<Scalar>::Zero(rows, cols)), grad(Matrix<Scalar>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Index size() const { return value.size(); }
};

template <typename Scalar>
using ParameterList = std::vector<Parameter<Scalar>*>;

template <typename Scalar>
void init_normal(Parameter<Scalar>& p, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
void init_uniform(Parameter<Scalar>& p, std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<Scalar>(dist(rng));
}

// Elementwise activations and their derivatives, written against Eigen
// array expressions so they stay lazy.

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) + (-x).exp()).inverse();
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Derived>
auto relu(const Eigen::ArrayBase<Derived>& x) {
  return x.max(typename Derived::Scalar(0));
}

template <typename Derived>
auto relu_grad(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (x > S(0)).template cast<S>();
}

/// Exact (erf) GELU as used by BERT.
template <typename Derived>
auto gelu(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return S(0.5) * x * (S(1) + x.unaryExpr([](S v) { return std::erf(v * S(M_SQRT1_2)); }));
}

template <typename Derived>
auto gelu_grad(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const S inv_sqrt_2pi = S(0.3989422804014327);
  return S(0.5) * (S(1) + x.unaryExpr([](S v) { return std::erf(v * S(M_SQRT1_2)); })) +
         x * inv_sqrt_2pi * (S(-0.5) * x.square()).exp();
}

/// Row-wise softmax, stabilized by the row maximum.
template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& x) {
  Matrix<Scalar> out = (x.colwise() - x.rowwise().maxCoeff()).array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

}  // namespace sliar::nn
