#pragma once

#include <array>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sliar/corpus.hpp"
#include "sliar/errors.hpp"
#include "sliar/nn/conv1d.hpp"
#include "sliar/nn/layers.hpp"

namespace sliar {

/// Feed-forward head: affine layers with rectifiers between them; the last
/// width is 2 (one sigmoid unit per class).
struct FfnHeadConfig {
  std::vector<nn::Index> layer_widths;

  /// Hidden widths 800, 512, 256, 128 behind the given input width.
  static FfnHeadConfig deep(nn::Index input_width) { return {{input_width, 800, 512, 256, 128, 2}}; }
  /// A single affine layer from the input to the two output units.
  static FfnHeadConfig shallow(nn::Index input_width) { return {{input_width, 2}}; }

  nn::Index input_width() const { return layer_widths.empty() ? 0 : layer_widths.front(); }
  void validate() const;
};

/// Two stacked 1-D convolutions over the fused vector treated as a
/// one-channel signal, a max-pool, then one affine layer to 2 units.
struct CnnHeadConfig {
  nn::Index input_width = 0;
  nn::Index conv1_channels = 50;
  nn::Index conv2_channels = 100;
  nn::Index kernel = 20;
  nn::Index stride = 1;
  nn::Index pool = 1;

  static CnnHeadConfig standard(nn::Index input_width) { return {input_width}; }

  nn::Index conv1_length() const { return nn::conv_output_length(input_width, kernel, stride); }
  nn::Index conv2_length() const { return nn::conv_output_length(conv1_length(), kernel, stride); }
  nn::Index pooled_length() const { return nn::conv_output_length(conv2_length(), pool, pool); }
  nn::Index flattened_width() const { return conv2_channels * pooled_length(); }
  /// Smallest input for which both kernels fit: 2 * (kernel - 1) + 1 at stride 1.
  nn::Index min_input_width() const { return 2 * (kernel - 1) + 1; }
  void validate() const;
};

using HeadConfig = std::variant<FfnHeadConfig, CnnHeadConfig>;

nn::Index head_input_width(const HeadConfig& head);
std::string head_kind(const HeadConfig& head);  // "ffn" or "cnn"
nlohmann::json head_to_json(const HeadConfig& head);
HeadConfig head_from_json(const nlohmann::json& j);

/// Sigmoid outputs for (FALSE, TRUE) and the argmax class (ties -> FALSE).
struct Prediction {
  std::array<double, 2> probabilities{};
  BinaryLabel predicted = BinaryLabel::False;

  static Prediction from_probabilities(double p_false, double p_true) {
    return {{p_false, p_true}, p_true > p_false ? BinaryLabel::True : BinaryLabel::False};
  }
};

template <typename Scalar>
class FfnHead {
 public:
  struct Cache {
    std::vector<nn::Vector<Scalar>> inputs;  // input to each affine layer
    std::vector<nn::Vector<Scalar>> pre;     // pre-activation of each hidden layer
  };

  explicit FfnHead(FfnHeadConfig config) : config_(std::move(config)) {
    config_.validate();
    for (std::size_t i = 0; i + 1 < config_.layer_widths.size(); ++i) {
      layers_.emplace_back("head.ffn." + std::to_string(i), config_.layer_widths[i], config_.layer_widths[i + 1]);
    }
  }

  const FfnHeadConfig& config() const { return config_; }

  void init(std::mt19937_64& rng) {
    for (auto& l : layers_) l.init_uniform_fan_in(rng);
  }

  /// Returns the two output logits.
  nn::Vector<Scalar> forward(const nn::Vector<Scalar>& fused, Cache* cache = nullptr) const {
    if (fused.size() != config_.input_width()) {
      throw ShapeError("feed-forward head expects input width " + std::to_string(config_.input_width()) +
                       ", got " + std::to_string(fused.size()));
    }
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    nn::Vector<Scalar> a = fused;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (cache) cache->inputs.push_back(a);
      nn::Vector<Scalar> z = layers_[i].forward(a);
      if (i + 1 == layers_.size()) return z;
      if (cache) cache->pre.push_back(z);
      a = nn::relu(z.array()).matrix();
    }
    return a;
  }

  nn::Vector<Scalar> backward(const Cache& cache, const nn::Vector<Scalar>& dlogits) {
    nn::Vector<Scalar> d = dlogits;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      d = layers_[i].backward(cache.inputs[i], d);
      if (i > 0) d = (d.array() * nn::relu_grad(cache.pre[i - 1].array())).matrix();
    }
    return d;
  }

  nn::ParameterList<Scalar> parameters() {
    nn::ParameterList<Scalar> out;
    for (auto& l : layers_) l.collect(out);
    return out;
  }

 private:
  FfnHeadConfig config_;
  std::vector<nn::Linear<Scalar>> layers_;
};

/// conv1 -> ReLU -> conv2 -> ReLU -> max-pool -> flatten (channel-major) -> affine.
template <typename Scalar>
class CnnHead {
 public:
  using IndexMatrix = Eigen::Matrix<nn::Index, Eigen::Dynamic, Eigen::Dynamic>;
  struct Cache {
    nn::Matrix<Scalar> cols1, pre1, act1;
    nn::Matrix<Scalar> cols2, pre2, act2;
    IndexMatrix argmax;
    nn::Vector<Scalar> flat;
  };

  explicit CnnHead(CnnHeadConfig config)
      : config_(config),
        conv1_("head.cnn.conv1", 1, config.conv1_channels, config.kernel, config.stride),
        conv2_("head.cnn.conv2", config.conv1_channels, config.conv2_channels, config.kernel, config.stride),
        pool_(config.pool, config.pool) {
    config_.validate();
    classifier_ = nn::Linear<Scalar>("head.cnn.classifier", config_.flattened_width(), 2);
  }

  const CnnHeadConfig& config() const { return config_; }

  void init(std::mt19937_64& rng) {
    conv1_.init_uniform_fan_in(rng);
    conv2_.init_uniform_fan_in(rng);
    classifier_.init_uniform_fan_in(rng);
  }

  nn::Vector<Scalar> forward(const nn::Vector<Scalar>& fused, Cache* cache = nullptr) const {
    if (fused.size() != config_.input_width) {
      throw ShapeError("CNN head expects input width " + std::to_string(config_.input_width) + ", got " +
                       std::to_string(fused.size()));
    }
    const nn::Matrix<Scalar> signal = fused.transpose();  // 1 channel x length
    nn::Matrix<Scalar> cols1, cols2;
    nn::Matrix<Scalar> pre1 = conv1_.forward(signal, cache ? &cols1 : nullptr);
    nn::Matrix<Scalar> act1 = nn::relu(pre1.array()).matrix();
    nn::Matrix<Scalar> pre2 = conv2_.forward(act1, cache ? &cols2 : nullptr);
    nn::Matrix<Scalar> act2 = nn::relu(pre2.array()).matrix();
    IndexMatrix argmax;
    const nn::Matrix<Scalar> pooled = pool_.forward(act2, cache ? &argmax : nullptr);
    nn::Vector<Scalar> flat = flatten(pooled);
    nn::Vector<Scalar> logits = classifier_.forward(flat);
    if (cache) {
      cache->cols1 = std::move(cols1);
      cache->pre1 = std::move(pre1);
      cache->act1 = std::move(act1);
      cache->cols2 = std::move(cols2);
      cache->pre2 = std::move(pre2);
      cache->act2 = std::move(act2);
      cache->argmax = std::move(argmax);
      cache->flat = std::move(flat);
    }
    return logits;
  }

  nn::Vector<Scalar> backward(const Cache& cache, const nn::Vector<Scalar>& dlogits) {
    const nn::Vector<Scalar> dflat = classifier_.backward(cache.flat, dlogits);
    const nn::Index channels = config_.conv2_channels;
    const nn::Index pooled_len = config_.pooled_length();
    // inverse of the channel-major flatten
    const nn::Matrix<Scalar> dpooled =
        Eigen::Map<const nn::RowMajorMatrix<Scalar>>(dflat.data(), channels, pooled_len);
    const nn::Matrix<Scalar> dact2 = pool_.backward(cache.argmax, cache.act2.cols(), dpooled);
    const nn::Matrix<Scalar> dpre2 = (dact2.array() * nn::relu_grad(cache.pre2.array())).matrix();
    const nn::Matrix<Scalar> dact1 = conv2_.backward(cache.cols2, cache.act1.cols(), dpre2);
    const nn::Matrix<Scalar> dpre1 = (dact1.array() * nn::relu_grad(cache.pre1.array())).matrix();
    const nn::Matrix<Scalar> dsignal = conv1_.backward(cache.cols1, config_.input_width, dpre1);
    return dsignal.row(0).transpose();
  }

  /// Row-major (channel-major) flatten of a (channels x length) map.
  static nn::Vector<Scalar> flatten(const nn::Matrix<Scalar>& map) {
    const nn::RowMajorMatrix<Scalar> row_major = map;
    return Eigen::Map<const nn::Vector<Scalar>>(row_major.data(), row_major.size());
  }

  nn::ParameterList<Scalar> parameters() {
    nn::ParameterList<Scalar> out;
    conv1_.collect(out);
    conv2_.collect(out);
    classifier_.collect(out);
    return out;
  }

 private:
  CnnHeadConfig config_;
  nn::Conv1d<Scalar> conv1_;
  nn::Conv1d<Scalar> conv2_;
  nn::MaxPool1d<Scalar> pool_;
  nn::Linear<Scalar> classifier_;
};

}  // namespace sliar
