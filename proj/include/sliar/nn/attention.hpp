#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sliar/nn/layers.hpp"

namespace sliar::nn {

/// Unmasked multi-head self-attention over one sequence (rows = positions).
template <typename Scalar>
class SelfAttention {
 public:
  struct Cache {
    Matrix<Scalar> input;
    Matrix<Scalar> query, key, value;
    std::vector<Matrix<Scalar>> probs;  // per head, T x T
    Matrix<Scalar> context;
  };

  SelfAttention() = default;
  SelfAttention(const std::string& name, Index width, Index heads)
      : query_(name + ".self.query", width, width),
        key_(name + ".self.key", width, width),
        value_(name + ".self.value", width, width),
        output_(name + ".output.dense", width, width),
        heads_(heads) {
    if (heads <= 0 || width % heads != 0) {
      throw ConfigError("attention width " + std::to_string(width) + " is not divisible by " +
                        std::to_string(heads) + " heads");
    }
  }

  void init(std::mt19937_64& rng, double stddev) {
    for (auto* l : {&query_, &key_, &value_, &output_}) l->init_normal_zero_bias(rng, stddev);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Cache* cache = nullptr) const {
    const Index head_dim = x.cols() / heads_;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim));
    Matrix<Scalar> q = query_.forward(x);
    Matrix<Scalar> k = key_.forward(x);
    Matrix<Scalar> v = value_.forward(x);
    Matrix<Scalar> context(x.rows(), x.cols());
    if (cache) cache->probs.resize(static_cast<std::size_t>(heads_));
    for (Index h = 0; h < heads_; ++h) {
      const auto qh = q.middleCols(h * head_dim, head_dim);
      const auto kh = k.middleCols(h * head_dim, head_dim);
      const auto vh = v.middleCols(h * head_dim, head_dim);
      Matrix<Scalar> scores = (qh * kh.transpose()) * scale;
      Matrix<Scalar> p = softmax_rows<Scalar>(scores);
      context.middleCols(h * head_dim, head_dim).noalias() = p * vh;
      if (cache) cache->probs[static_cast<std::size_t>(h)] = std::move(p);
    }
    Matrix<Scalar> out = output_.forward(context);
    if (cache) {
      cache->input = x;
      cache->query = std::move(q);
      cache->key = std::move(k);
      cache->value = std::move(v);
      cache->context = std::move(context);
    }
    return out;
  }

  Matrix<Scalar> backward(const Cache& cache, const Matrix<Scalar>& dy) {
    const Index width = cache.input.cols();
    const Index head_dim = width / heads_;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim));
    const Matrix<Scalar> dcontext = output_.backward(cache.context, dy);
    Matrix<Scalar> dq(cache.query.rows(), width), dk(cache.key.rows(), width), dv(cache.value.rows(), width);
    for (Index h = 0; h < heads_; ++h) {
      const auto& p = cache.probs[static_cast<std::size_t>(h)];
      const auto qh = cache.query.middleCols(h * head_dim, head_dim);
      const auto kh = cache.key.middleCols(h * head_dim, head_dim);
      const auto vh = cache.value.middleCols(h * head_dim, head_dim);
      const auto dctx = dcontext.middleCols(h * head_dim, head_dim);
      const Matrix<Scalar> dp = dctx * vh.transpose();
      dv.middleCols(h * head_dim, head_dim).noalias() = p.transpose() * dctx;
      // softmax Jacobian-vector product per row
      const Vector<Scalar> row_dot = (dp.array() * p.array()).rowwise().sum();
      Matrix<Scalar> dscores = p.array() * (dp.array().colwise() - row_dot.array());
      dscores *= scale;
      dq.middleCols(h * head_dim, head_dim).noalias() = dscores * kh;
      dk.middleCols(h * head_dim, head_dim).noalias() = dscores.transpose() * qh;
    }
    Matrix<Scalar> dx = query_.backward(cache.input, dq);
    dx += key_.backward(cache.input, dk);
    dx += value_.backward(cache.input, dv);
    return dx;
  }

  void collect(ParameterList<Scalar>& out) {
    for (auto* l : {&query_, &key_, &value_, &output_}) l->collect(out);
  }

  Index heads() const { return heads_; }

 private:
  Linear<Scalar> query_, key_, value_, output_;
  Index heads_ = 1;
};

}  // namespace sliar::nn
