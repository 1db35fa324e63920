#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "sliar/errors.hpp"
#include "sliar/nn/attention.hpp"
#include "sliar/nn/layers.hpp"
#include "sliar/safetensors.hpp"
#include "sliar/tokenizer.hpp"

namespace sliar {

/// Bidirectional transformer encoder hyperparameters. `path` names a
/// directory with config.json, vocab.txt and model.safetensors when the
/// encoder is pretrained; it is empty for randomly initialized encoders.
struct EncoderConfig {
  std::string preset = "tiny";
  std::string path;
  nn::Index hidden_width = 32;
  nn::Index layers = 2;
  nn::Index heads = 2;
  nn::Index intermediate_width = 64;
  nn::Index max_positions = 128;
  nn::Index type_vocab = 2;
  std::size_t max_tokens = 128;
  double dropout = 0.3;
  double layer_norm_eps = 1e-12;
  std::size_t hash_buckets = 8;

  /// Randomly initialized 2-layer, width-32 encoder over the 8-symbol hash tokenizer.
  static EncoderConfig tiny();
  /// BERT-Base shape (768 wide, 12 layers, 12 heads) read from `dir`.
  static EncoderConfig pretrained(const std::filesystem::path& dir);

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

inline EncoderConfig EncoderConfig::tiny() { return {}; }

inline EncoderConfig EncoderConfig::pretrained(const std::filesystem::path& dir) {
  EncoderConfig c;
  c.preset = "pretrained";
  c.path = dir.string();
  c.hidden_width = 768;
  c.layers = 12;
  c.heads = 12;
  c.intermediate_width = 3072;
  c.max_positions = 512;
  c.hash_buckets = 0;
  const auto config_json = dir / "config.json";
  std::ifstream in(config_json);
  if (in) {
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw LoadError("cannot parse '" + config_json.string() + "'");
    c.hidden_width = j.value("hidden_size", c.hidden_width);
    c.layers = j.value("num_hidden_layers", c.layers);
    c.heads = j.value("num_attention_heads", c.heads);
    c.intermediate_width = j.value("intermediate_size", c.intermediate_width);
    c.max_positions = j.value("max_position_embeddings", c.max_positions);
    c.type_vocab = j.value("type_vocab_size", c.type_vocab);
    c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  }
  return c;
}

inline void EncoderConfig::validate() const {
  if (hidden_width <= 0) throw ConfigError("encoder hidden_width must be positive");
  if (max_tokens <= 2) throw ConfigError("encoder max_tokens must exceed 2");
  if (static_cast<nn::Index>(max_tokens) > max_positions) {
    throw ConfigError("encoder max_tokens exceeds max_positions");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("encoder dropout must lie in [0, 1)");
  if (layers < 0 || heads <= 0 || hidden_width % heads != 0) throw ConfigError("invalid encoder layer geometry");
}

inline nlohmann::json EncoderConfig::to_json() const {
  return {{"preset", preset},
          {"path", path},
          {"hidden_width", hidden_width},
          {"layers", layers},
          {"heads", heads},
          {"intermediate_width", intermediate_width},
          {"max_positions", max_positions},
          {"type_vocab", type_vocab},
          {"max_tokens", max_tokens},
          {"dropout", dropout},
          {"layer_norm_eps", layer_norm_eps},
          {"hash_buckets", hash_buckets}};
}

inline EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.preset = j.at("preset").get<std::string>();
  c.path = j.value("path", std::string());
  c.hidden_width = j.at("hidden_width").get<nn::Index>();
  c.layers = j.at("layers").get<nn::Index>();
  c.heads = j.at("heads").get<nn::Index>();
  c.intermediate_width = j.at("intermediate_width").get<nn::Index>();
  c.max_positions = j.at("max_positions").get<nn::Index>();
  c.type_vocab = j.value("type_vocab", nn::Index{2});
  c.max_tokens = j.at("max_tokens").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.layer_norm_eps = j.value("layer_norm_eps", 1e-12);
  c.hash_buckets = j.value("hash_buckets", std::size_t{8});
  return c;
}

/// Post-norm transformer block: attention and feed-forward sublayers, each
/// wrapped in a residual connection followed by layer normalization.
template <typename Scalar>
class TransformerLayer {
 public:
  struct Cache {
    typename nn::SelfAttention<Scalar>::Cache attention;
    typename nn::LayerNorm<Scalar>::Cache attention_norm;
    nn::Matrix<Scalar> hidden;  // after the attention sublayer
    nn::Matrix<Scalar> pre_activation;
    nn::Matrix<Scalar> activation;
    typename nn::LayerNorm<Scalar>::Cache output_norm;
  };

  TransformerLayer() = default;
  TransformerLayer(const std::string& name, const EncoderConfig& c)
      : attention_(name + ".attention", c.hidden_width, c.heads),
        attention_norm_(name + ".attention.output.LayerNorm", c.hidden_width, c.layer_norm_eps),
        intermediate_(name + ".intermediate.dense", c.hidden_width, c.intermediate_width),
        output_(name + ".output.dense", c.intermediate_width, c.hidden_width),
        output_norm_(name + ".output.LayerNorm", c.hidden_width, c.layer_norm_eps) {}

  void init(std::mt19937_64& rng, double stddev) {
    attention_.init(rng, stddev);
    intermediate_.init_normal_zero_bias(rng, stddev);
    output_.init_normal_zero_bias(rng, stddev);
  }

  nn::Matrix<Scalar> forward(const nn::Matrix<Scalar>& x, Cache* cache = nullptr) const {
    nn::Matrix<Scalar> attended = attention_.forward(x, cache ? &cache->attention : nullptr);
    attended += x;
    nn::Matrix<Scalar> hidden = attention_norm_.forward(attended, cache ? &cache->attention_norm : nullptr);
    nn::Matrix<Scalar> pre = intermediate_.forward(hidden);
    nn::Matrix<Scalar> act = nn::gelu(pre.array()).matrix();
    nn::Matrix<Scalar> out = output_.forward(act);
    out += hidden;
    nn::Matrix<Scalar> y = output_norm_.forward(out, cache ? &cache->output_norm : nullptr);
    if (cache) {
      cache->hidden = std::move(hidden);
      cache->pre_activation = std::move(pre);
      cache->activation = std::move(act);
    }
    return y;
  }

  nn::Matrix<Scalar> backward(const Cache& cache, const nn::Matrix<Scalar>& dy) {
    const nn::Matrix<Scalar> dsum = output_norm_.backward(cache.output_norm, dy);
    const nn::Matrix<Scalar> dact = output_.backward(cache.activation, dsum);
    const nn::Matrix<Scalar> dpre = (dact.array() * nn::gelu_grad(cache.pre_activation.array())).matrix();
    nn::Matrix<Scalar> dhidden = intermediate_.backward(cache.hidden, dpre);
    dhidden += dsum;
    const nn::Matrix<Scalar> dattended = attention_norm_.backward(cache.attention_norm, dhidden);
    nn::Matrix<Scalar> dx = attention_.backward(cache.attention, dattended);
    dx += dattended;
    return dx;
  }

  void collect(nn::ParameterList<Scalar>& out) {
    attention_.collect(out);
    attention_norm_.collect(out);
    intermediate_.collect(out);
    output_.collect(out);
    output_norm_.collect(out);
  }

 private:
  nn::SelfAttention<Scalar> attention_;
  nn::LayerNorm<Scalar> attention_norm_;
  nn::Linear<Scalar> intermediate_;
  nn::Linear<Scalar> output_;
  nn::LayerNorm<Scalar> output_norm_;
};

/// Transformer encoder returning the pooled first-token representation
/// tanh(W h_0 + b). Parameter names follow the usual BERT checkpoint layout
/// so pretrained weights load by name.
template <typename Scalar>
class Encoder {
 public:
  struct Cache {
    std::vector<TokenId> ids;
    typename nn::LayerNorm<Scalar>::Cache embedding_norm;
    std::vector<typename TransformerLayer<Scalar>::Cache> layers;
    nn::Vector<Scalar> first_token;
    nn::Vector<Scalar> pooled;
    nn::Index length = 0;
  };

  Encoder(EncoderConfig config, std::shared_ptr<const Tokenizer> tokenizer)
      : config_(std::move(config)), tokenizer_(std::move(tokenizer)) {
    config_.validate();
    if (!tokenizer_) throw ConfigError("encoder needs a tokenizer");
    const auto vocab = static_cast<nn::Index>(tokenizer_->vocab_size());
    const auto h = config_.hidden_width;
    word_embeddings_ = nn::Parameter<Scalar>("embeddings.word_embeddings.weight", vocab, h);
    position_embeddings_ = nn::Parameter<Scalar>("embeddings.position_embeddings.weight", config_.max_positions, h);
    type_embeddings_ = nn::Parameter<Scalar>("embeddings.token_type_embeddings.weight", config_.type_vocab, h);
    embedding_norm_ = nn::LayerNorm<Scalar>("embeddings.LayerNorm", h, config_.layer_norm_eps);
    for (nn::Index i = 0; i < config_.layers; ++i) {
      layers_.emplace_back("encoder.layer." + std::to_string(i), config_);
    }
    pooler_ = nn::Linear<Scalar>("pooler.dense", h, h);
  }

  /// Random initialization with N(0, 0.02) weights and zero biases.
  void init_random(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    constexpr double kStd = 0.02;
    nn::init_normal(word_embeddings_, rng, kStd);
    nn::init_normal(position_embeddings_, rng, kStd);
    nn::init_normal(type_embeddings_, rng, kStd);
    for (auto& layer : layers_) layer.init(rng, kStd);
    pooler_.init_normal_zero_bias(rng, kStd);
  }

  /// Loads every encoder parameter from a safetensors file; a leading
  /// "bert." prefix and legacy gamma/beta LayerNorm names are accepted.
  void load_weights(const safetensors::File& file) {
    for (auto* p : parameters()) {
      const std::string name = resolve_name(file, p->name);
      file.copy_to(name, p->value);
    }
  }

  const EncoderConfig& config() const { return config_; }
  const Tokenizer& tokenizer() const { return *tokenizer_; }
  std::shared_ptr<const Tokenizer> shared_tokenizer() const { return tokenizer_; }
  nn::Index width() const { return config_.hidden_width; }

  std::vector<TokenId> tokenize(std::string_view text) const { return tokenizer_->encode(text, config_.max_tokens); }

  nn::Vector<Scalar> encode(std::string_view text) const { return forward(tokenize(text)); }

  nn::Vector<Scalar> forward(const std::vector<TokenId>& ids, Cache* cache = nullptr) const {
    const auto length = static_cast<nn::Index>(ids.size());
    if (length == 0 || length > config_.max_positions) throw ShapeError("token sequence length out of range");
    nn::Matrix<Scalar> x(length, width());
    for (nn::Index t = 0; t < length; ++t) {
      const auto id = ids[static_cast<std::size_t>(t)];
      if (id < 0 || id >= word_embeddings_.value.rows()) throw ShapeError("token id outside the vocabulary");
      x.row(t) = word_embeddings_.value.row(id) + position_embeddings_.value.row(t) + type_embeddings_.value.row(0);
    }
    x = embedding_norm_.forward(x, cache ? &cache->embedding_norm : nullptr);
    if (cache) cache->layers.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      x = layers_[l].forward(x, cache ? &cache->layers[l] : nullptr);
    }
    nn::Vector<Scalar> first = x.row(0).transpose();
    nn::Vector<Scalar> pooled = pooler_.forward(first).array().tanh().matrix();
    if (cache) {
      cache->ids = ids;
      cache->first_token = std::move(first);
      cache->pooled = pooled;
      cache->length = length;
    }
    return pooled;
  }

  void backward(const Cache& cache, const nn::Vector<Scalar>& dpooled) {
    const nn::Vector<Scalar> dpre = (dpooled.array() * (Scalar(1) - cache.pooled.array().square())).matrix();
    const nn::Vector<Scalar> dfirst = pooler_.backward(cache.first_token, dpre);
    nn::Matrix<Scalar> dx = nn::Matrix<Scalar>::Zero(cache.length, width());
    dx.row(0) = dfirst.transpose();
    for (std::size_t l = layers_.size(); l-- > 0;) dx = layers_[l].backward(cache.layers[l], dx);
    const nn::Matrix<Scalar> demb = embedding_norm_.backward(cache.embedding_norm, dx);
    for (nn::Index t = 0; t < cache.length; ++t) {
      word_embeddings_.grad.row(cache.ids[static_cast<std::size_t>(t)]) += demb.row(t);
      position_embeddings_.grad.row(t) += demb.row(t);
    }
    type_embeddings_.grad.row(0) += demb.colwise().sum();
  }

  nn::ParameterList<Scalar> parameters() {
    nn::ParameterList<Scalar> out{&word_embeddings_, &position_embeddings_, &type_embeddings_};
    embedding_norm_.collect(out);
    for (auto& layer : layers_) layer.collect(out);
    pooler_.collect(out);
    return out;
  }

 private:
  static std::string resolve_name(const safetensors::File& file, const std::string& name) {
    std::vector<std::string> candidates{name, "bert." + name};
    for (const auto& [from, to] : {std::pair<std::string, std::string>{"LayerNorm.weight", "LayerNorm.gamma"},
                                   std::pair<std::string, std::string>{"LayerNorm.bias", "LayerNorm.beta"}}) {
      if (name.ends_with(from)) {
        const auto legacy = name.substr(0, name.size() - from.size()) + to;
        candidates.push_back(legacy);
        candidates.push_back("bert." + legacy);
      }
    }
    for (const auto& c : candidates) {
      if (file.contains(c)) return c;
    }
    throw LoadError("encoder weights lack tensor '" + name + "'");
  }

  EncoderConfig config_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  nn::Parameter<Scalar> word_embeddings_;
  nn::Parameter<Scalar> position_embeddings_;
  nn::Parameter<Scalar> type_embeddings_;
  nn::LayerNorm<Scalar> embedding_norm_;
  std::vector<TransformerLayer<Scalar>> layers_;
  nn::Linear<Scalar> pooler_;
};

/// Tokenizer for an encoder config: hashed symbols for random encoders,
/// WordPiece from `<path>/vocab.txt` for pretrained ones.
std::shared_ptr<const Tokenizer> make_tokenizer(const EncoderConfig& config);

/// Builds an encoder: pretrained configs load `<path>/model.safetensors`
/// (throwing LoadError naming the path), others are randomly initialized.
template <typename Scalar>
std::unique_ptr<Encoder<Scalar>> make_encoder(const EncoderConfig& config, std::uint64_t seed) {
  auto encoder = std::make_unique<Encoder<Scalar>>(config, make_tokenizer(config));
  if (config.path.empty()) {
    encoder->init_random(seed);
  } else {
    const auto weights = std::filesystem::path(config.path) / "model.safetensors";
    if (!std::filesystem::exists(weights)) throw LoadError("encoder weights not found at '" + weights.string() + "'");
    encoder->load_weights(safetensors::File::load(weights));
  }
  return encoder;
}

}  // namespace sliar
