#include "sliar/model.hpp"

#include <filesystem>

namespace sliar {

void FfnHeadConfig::validate() const {
  if (layer_widths.size() < 2) throw ConfigError("feed-forward head needs at least an input and an output width");
  if (layer_widths.back() != 2) throw ConfigError("feed-forward head must end in 2 output units");
  for (auto w : layer_widths) {
    if (w <= 0) throw ConfigError("feed-forward layer widths must be positive");
  }
}

void CnnHeadConfig::validate() const {
  if (conv1_channels <= 0 || conv2_channels <= 0 || kernel <= 0 || stride <= 0 || pool <= 0) {
    throw ConfigError("CNN head sizes must be positive");
  }
  if (input_width < min_input_width()) {
    throw ShapeError("CNN head needs a fused width of at least " + std::to_string(min_input_width()) + " for kernel " +
                     std::to_string(kernel) + ", got " + std::to_string(input_width));
  }
  (void)pooled_length();
}

nn::Index head_input_width(const HeadConfig& head) {
  return std::visit(
      [](const auto& h) -> nn::Index {
        using H = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<H, FfnHeadConfig>) {
          return h.input_width();
        } else {
          return h.input_width;
        }
      },
      head);
}

std::string head_kind(const HeadConfig& head) { return std::holds_alternative<FfnHeadConfig>(head) ? "ffn" : "cnn"; }

nlohmann::json head_to_json(const HeadConfig& head) {
  if (const auto* ffn = std::get_if<FfnHeadConfig>(&head)) {
    return {{"kind", "ffn"}, {"layer_widths", ffn->layer_widths}};
  }
  const auto& c = std::get<CnnHeadConfig>(head);
  return {{"kind", "cnn"},           {"input_width", c.input_width}, {"conv1_channels", c.conv1_channels},
          {"conv2_channels", c.conv2_channels}, {"kernel", c.kernel},    {"stride", c.stride},
          {"pool", c.pool}};
}

HeadConfig head_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "ffn") return FfnHeadConfig{j.at("layer_widths").get<std::vector<nn::Index>>()};
  if (kind != "cnn") throw ConfigError("unknown head kind '" + kind + "'");
  CnnHeadConfig c;
  c.input_width = j.at("input_width").get<nn::Index>();
  c.conv1_channels = j.at("conv1_channels").get<nn::Index>();
  c.conv2_channels = j.at("conv2_channels").get<nn::Index>();
  c.kernel = j.at("kernel").get<nn::Index>();
  c.stride = j.at("stride").get<nn::Index>();
  c.pool = j.at("pool").get<nn::Index>();
  return c;
}

nlohmann::json fusion_to_json(const FusionSpec& spec) {
  std::vector<std::string> enc, side;
  for (auto g : spec.encoder_groups.ordered()) enc.emplace_back(to_string(g));
  for (auto g : spec.side_groups.ordered()) side.emplace_back(to_string(g));
  return {{"encoder", enc}, {"side", side}, {"normalize_spc", spec.normalize_spc}};
}

FusionSpec fusion_from_json(const nlohmann::json& j) {
  return make_fusion_spec(j.at("encoder").get<std::vector<std::string>>(), j.at("side").get<std::vector<std::string>>(),
                          j.value("normalize_spc", false));
}

nlohmann::json stats_to_json(const NormalizationStats& stats) { return {{"min", stats.min}, {"max", stats.max}}; }

NormalizationStats stats_from_json(const nlohmann::json& j) {
  NormalizationStats s;
  s.min = j.at("min").get<std::array<double, 5>>();
  s.max = j.at("max").get<std::array<double, 5>>();
  return s;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"encoder", encoder.to_json()},
          {"head", head_to_json(head)},
          {"fusion", fusion_to_json(fusion)},
          {"normalization", stats_to_json(stats)}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  return {EncoderConfig::from_json(j.at("encoder")), head_from_json(j.at("head")), fusion_from_json(j.at("fusion")),
          stats_from_json(j.at("normalization"))};
}

void check_model_widths(const ModelConfig& config) {
  const auto expected = static_cast<nn::Index>(fused_width(config.fusion, static_cast<std::size_t>(config.encoder.hidden_width)));
  const auto actual = head_input_width(config.head);
  if (expected != actual) {
    throw ConfigError(head_kind(config.head) + " head expects input width " + std::to_string(actual) +
                      " but the fusion spec produces " + std::to_string(expected));
  }
  std::visit([](const auto& h) { h.validate(); }, config.head);
}

HeadConfig head_for(const std::string& kind, const FusionSpec& spec, const EncoderConfig& encoder, bool deep_ffn,
                    std::optional<nn::Index> cnn_kernel) {
  const auto width = static_cast<nn::Index>(fused_width(spec, static_cast<std::size_t>(encoder.hidden_width)));
  if (kind == "ffn") return deep_ffn ? FfnHeadConfig::deep(width) : FfnHeadConfig::shallow(width);
  if (kind == "cnn") {
    auto c = CnnHeadConfig::standard(width);
    if (cnn_kernel) c.kernel = *cnn_kernel;
    return c;
  }
  throw ConfigError("unknown head kind '" + kind + "' (expected ffn or cnn)");
}

std::shared_ptr<const Tokenizer> make_tokenizer(const EncoderConfig& config) {
  if (config.path.empty()) return std::make_shared<HashTokenizer>(config.hash_buckets);
  const auto vocab = std::filesystem::path(config.path) / "vocab.txt";
  if (!std::filesystem::exists(vocab)) throw LoadError("encoder vocabulary not found at '" + vocab.string() + "'");
  return std::make_shared<WordPieceTokenizer>(WordPieceTokenizer::load(vocab));
}

}  // namespace sliar
