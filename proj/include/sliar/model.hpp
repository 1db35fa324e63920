#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sliar/encoder.hpp"
#include "sliar/fusion.hpp"
#include "sliar/heads.hpp"
#include "sliar/safetensors.hpp"

namespace sliar {

inline constexpr std::string_view kCheckpointFormat = "sliar-checkpoint/1";

nlohmann::json fusion_to_json(const FusionSpec& spec);
FusionSpec fusion_from_json(const nlohmann::json& j);
nlohmann::json stats_to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& j);

/// Everything needed to rebuild a model apart from its weights.
struct ModelConfig {
  EncoderConfig encoder;
  HeadConfig head;
  FusionSpec fusion;
  NormalizationStats stats;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Throws ConfigError unless the head's input width equals
/// fused_width(fusion, encoder.hidden_width).
void check_model_widths(const ModelConfig& config);

/// Applies the head to a fused vector and turns logits into a Prediction.
template <typename Head, typename Scalar>
Prediction head_predict(const Head& head, const nn::Vector<Scalar>& fused) {
  const nn::Vector<Scalar> logits = head.forward(fused);
  return Prediction::from_probabilities(static_cast<double>(nn::sigmoid(logits(0))),
                                        static_cast<double>(nn::sigmoid(logits(1))));
}

/// record -> encoder text -> pooled vector (+ dropout when training)
///        -> concatenate side features -> head -> two sigmoid units.
template <typename Scalar>
class Model {
 public:
  using HeadVariant = std::variant<FfnHead<Scalar>, CnnHead<Scalar>>;

  struct Trace {
    typename Encoder<Scalar>::Cache encoder;
    nn::Vector<Scalar> dropout_mask;
    std::variant<typename FfnHead<Scalar>::Cache, typename CnnHead<Scalar>::Cache> head;
    nn::Vector<Scalar> logits;
  };

  Model(ModelConfig config, std::unique_ptr<Encoder<Scalar>> encoder)
      : config_(std::move(config)), encoder_(std::move(encoder)), head_(make_head(config_.head)) {
    config_.fusion.validate();
    check_model_widths(config_);
  }

  const ModelConfig& config() const { return config_; }
  const Encoder<Scalar>& encoder() const { return *encoder_; }
  nn::Index fused_width() const { return head_input_width(config_.head); }

  void init_head(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::visit([&](auto& h) { h.init(rng); }, head_);
  }

  /// Replaces the stats used for SPC normalization (computed on the training split).
  void set_normalization(const NormalizationStats& stats) { config_.stats = stats; }

  nn::Vector<Scalar> fused_input(const SentimentalRecord& record, const nn::Vector<Scalar>& pooled) const {
    const auto side = side_features(record, config_.fusion, &config_.stats);
    nn::Vector<Scalar> fused(pooled.size() + static_cast<nn::Index>(side.width()));
    fused.head(pooled.size()) = pooled;
    fused.tail(static_cast<nn::Index>(side.width())) = side.values.template cast<Scalar>();
    return fused;
  }

  /// Eval-mode logits unless `dropout_rng` is given, in which case dropout is
  /// applied to the pooled vector. `trace` captures what backward needs.
  nn::Vector<Scalar> forward(const SentimentalRecord& record, Trace* trace = nullptr,
                             std::mt19937_64* dropout_rng = nullptr) const {
    const auto ids = encoder_->tokenize(serialize_for_encoder(record, config_.fusion));
    nn::Vector<Scalar> pooled = encoder_->forward(ids, trace ? &trace->encoder : nullptr);
    if (dropout_rng) {
      nn::Vector<Scalar> mask = nn::dropout_mask<Scalar>(pooled.size(), config_.encoder.dropout, *dropout_rng);
      pooled.array() *= mask.array();
      if (trace) trace->dropout_mask = std::move(mask);
    } else if (trace) {
      trace->dropout_mask = nn::Vector<Scalar>::Ones(pooled.size());
    }
    const nn::Vector<Scalar> fused = fused_input(record, pooled);
    nn::Vector<Scalar> logits = std::visit(
        [&](const auto& h) -> nn::Vector<Scalar> {
          using H = std::decay_t<decltype(h)>;
          if (!trace) return h.forward(fused);
          typename H::Cache cache;
          auto out = h.forward(fused, &cache);
          trace->head = std::move(cache);
          return out;
        },
        head_);
    if (trace) trace->logits = logits;
    return logits;
  }

  Prediction predict(const SentimentalRecord& record) const {
    const auto logits = forward(record);
    return Prediction::from_probabilities(static_cast<double>(nn::sigmoid(logits(0))),
                                          static_cast<double>(nn::sigmoid(logits(1))));
  }

  /// Accumulates gradients for dL/dlogits. The encoder is skipped when frozen.
  void backward(const Trace& trace, const nn::Vector<Scalar>& dlogits, bool train_encoder = true) {
    const nn::Vector<Scalar> dfused = std::visit(
        [&](auto& h) -> nn::Vector<Scalar> {
          using H = std::decay_t<decltype(h)>;
          return h.backward(std::get<typename H::Cache>(trace.head), dlogits);
        },
        head_);
    if (!train_encoder) return;
    const nn::Vector<Scalar> dpooled = (dfused.head(encoder_->width()).array() * trace.dropout_mask.array()).matrix();
    encoder_->backward(trace.encoder, dpooled);
  }

  nn::ParameterList<Scalar> head_parameters() {
    return std::visit([](auto& h) { return h.parameters(); }, head_);
  }

  nn::ParameterList<Scalar> parameters() {
    auto out = encoder_->parameters();
    for (auto* p : head_parameters()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::vector<nn::Matrix<Scalar>> snapshot() {
    std::vector<nn::Matrix<Scalar>> out;
    for (auto* p : parameters()) out.push_back(p->value);
    return out;
  }

  void restore(const std::vector<nn::Matrix<Scalar>>& weights) {
    auto params = parameters();
    if (weights.size() != params.size()) throw ShapeError("snapshot does not match the model");
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = weights[i];
  }

  /// Self-describing checkpoint: weights plus config, fusion spec,
  /// normalization stats and tokenizer in the safetensors metadata.
  void save(const std::filesystem::path& path, const std::map<std::string, std::string>& extra = {}) {
    constexpr auto dtype = std::is_same_v<Scalar, float> ? safetensors::DType::F32 : safetensors::DType::F64;
    std::vector<safetensors::Entry> entries;
    for (auto* p : parameters()) entries.push_back(safetensors::make_entry(p->name, p->value, dtype));
    auto metadata = extra;
    metadata["format"] = std::string(kCheckpointFormat);
    metadata["model_config"] = config_.to_json().dump();
    metadata["tokenizer"] = encoder_->tokenizer().to_json().dump();
    safetensors::save(path, entries, metadata);
  }

  /// Loads a checkpoint written by save(). `metadata` receives the stored metadata.
  static Model load(const std::filesystem::path& path, std::map<std::string, std::string>* metadata = nullptr) {
    const auto file = safetensors::File::load(path);
    const auto& meta = file.metadata();
    auto format = meta.find("format");
    if (format == meta.end() || format->second != kCheckpointFormat) {
      throw LoadError("'" + path.string() + "' is not a " + std::string(kCheckpointFormat) + " checkpoint");
    }
    auto config = ModelConfig::from_json(nlohmann::json::parse(meta.at("model_config")));
    auto tokenizer = tokenizer_from_json(nlohmann::json::parse(meta.at("tokenizer")));
    auto encoder = std::make_unique<Encoder<Scalar>>(config.encoder, std::move(tokenizer));
    Model model(std::move(config), std::move(encoder));
    for (auto* p : model.parameters()) file.copy_to(p->name, p->value);
    if (metadata) *metadata = meta;
    return model;
  }

 private:
  static HeadVariant make_head(const HeadConfig& head) {
    if (const auto* ffn = std::get_if<FfnHeadConfig>(&head)) return HeadVariant(std::in_place_index<0>, *ffn);
    return HeadVariant(std::in_place_index<1>, std::get<CnnHeadConfig>(head));
  }

  ModelConfig config_;
  std::unique_ptr<Encoder<Scalar>> encoder_;
  HeadVariant head_;
};

/// Validates widths, then builds the encoder (random or pretrained) and a
/// randomly initialized head. Width mismatches throw ConfigError here, before
/// any data is touched.
template <typename Scalar = float>
Model<Scalar> build_model(const FusionSpec& spec, const EncoderConfig& encoder, const HeadConfig& head,
                          std::uint64_t seed, const NormalizationStats& stats = {}) {
  ModelConfig config{encoder, head, spec, stats};
  spec.validate();
  check_model_widths(config);
  Model<Scalar> model(std::move(config), make_encoder<Scalar>(encoder, seed));
  model.init_head(seed ^ 0x9E3779B97F4A7C15ull);
  return model;
}

/// Head sized for a spec: the deep or shallow FFN, or the CNN, with the
/// input width derived from the fused width.
HeadConfig head_for(const std::string& kind, const FusionSpec& spec, const EncoderConfig& encoder,
                    bool deep_ffn = true, std::optional<nn::Index> cnn_kernel = std::nullopt);

}  // namespace sliar
