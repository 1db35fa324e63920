#include "sliar/fusion.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <sstream>

#include "sliar/errors.hpp"

namespace sliar {
namespace {

std::string fixed4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

constexpr std::array<std::string_view, 5> kSpcNames = {"barely_true_counts", "false_counts", "half_true_counts",
                                                       "mostly_true_counts", "pants_on_fire_counts"};

}  // namespace

std::string_view to_string(Group group) {
  switch (group) {
    case Group::Text: return "TEXT";
    case Group::Emo: return "EMO";
    case Group::Spc: return "SPC";
    case Group::Sen: return "SEN";
  }
  return "";
}

std::optional<Group> parse_group(std::string_view name) {
  for (auto g : kGroupOrder) {
    if (name == to_string(g)) return g;
  }
  return std::nullopt;
}

std::vector<Group> GroupSet::ordered() const {
  std::vector<Group> out;
  for (auto g : kGroupOrder) {
    if (contains(g)) out.push_back(g);
  }
  return out;
}

void FusionSpec::validate() const {
  if (!encoder_groups.contains(Group::Text)) throw ConfigError("TEXT must always feed the encoder");
  if (side_groups.contains(Group::Text)) throw ConfigError("TEXT cannot be a side group");
  if (!encoder_groups.intersect(side_groups).empty()) {
    throw ConfigError("a group cannot feed both the encoder and the side vector");
  }
}

FusionSpec make_fusion_spec(const std::vector<std::string>& encoder, const std::vector<std::string>& side,
                            bool normalize_spc) {
  FusionSpec spec;
  spec.encoder_groups = {};
  spec.normalize_spc = normalize_spc;
  const auto add = [](GroupSet& set, const std::string& name) {
    auto g = parse_group(name);
    if (!g) throw ConfigError("unknown attribute group '" + name + "'");
    set.insert(*g);
  };
  for (const auto& n : encoder) add(spec.encoder_groups, n);
  for (const auto& n : side) add(spec.side_groups, n);
  spec.validate();
  return spec;
}

NormalizationStats NormalizationStats::from_training(const std::vector<SentimentalRecord>& train) {
  NormalizationStats s;
  if (train.empty()) return s;
  s.min.fill(std::numeric_limits<double>::infinity());
  s.max.fill(-std::numeric_limits<double>::infinity());
  for (const auto& r : train) {
    const auto counts = r.claim.credit.as_array();
    for (std::size_t i = 0; i < counts.size(); ++i) {
      s.min[i] = std::min(s.min[i], static_cast<double>(counts[i]));
      s.max[i] = std::max(s.max[i], static_cast<double>(counts[i]));
    }
  }
  return s;
}

std::string serialize_for_encoder(const SentimentalRecord& record, const FusionSpec& spec) {
  std::string out = record.claim.statement;
  for (auto g : spec.encoder_groups.ordered()) {
    if (g == Group::Text) continue;
    out += kEncoderSeparator;
    switch (g) {
      case Group::Emo: {
        const auto v = record.emotions.as_array();
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ' ';
          out += std::string(EmotionVector::kColumns[i]) + ": " + fixed4(v[i]);
        }
        break;
      }
      case Group::Spc: {
        const auto c = record.claim.credit.as_array();
        for (std::size_t i = 0; i < c.size(); ++i) {
          if (i) out += ' ';
          out += std::string(kSpcNames[i]) + ": " + fixed4(static_cast<double>(c[i]));
        }
        break;
      }
      case Group::Sen:
        out += "sentiment: " + std::string(to_string(record.sentiment.label())) +
               " score: " + fixed4(record.sentiment.score());
        break;
      default:
        break;
    }
  }
  return out;
}

std::size_t side_width(const FusionSpec& spec) {
  std::size_t w = 0;
  for (auto g : spec.side_groups.ordered()) w += group_width(g);
  return w;
}

SideFeatureVector side_features(const SentimentalRecord& record, const FusionSpec& spec,
                                const NormalizationStats* stats) {
  SideFeatureVector v;
  v.values.resize(static_cast<Eigen::Index>(side_width(spec)));
  std::size_t offset = 0;
  for (auto g : spec.side_groups.ordered()) {
    const auto width = group_width(g);
    v.layout.push_back({g, offset, width});
    auto seg = v.values.segment(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(width));
    switch (g) {
      case Group::Emo: {
        const auto e = record.emotions.as_array();
        for (std::size_t i = 0; i < e.size(); ++i) seg(static_cast<Eigen::Index>(i)) = e[i];
        break;
      }
      case Group::Spc: {
        const auto c = record.claim.credit.as_array();
        if (spec.normalize_spc && !stats) throw ConfigError("SPC normalization requires training statistics");
        for (std::size_t i = 0; i < c.size(); ++i) {
          double x = static_cast<double>(c[i]);
          if (spec.normalize_spc) {
            const double range = stats->max[i] - stats->min[i];
            x = range > 0 ? std::clamp((x - stats->min[i]) / range, 0.0, 1.0) : 0.0;
          }
          seg(static_cast<Eigen::Index>(i)) = x;
        }
        break;
      }
      case Group::Sen:
        seg(0) = record.sentiment.score();
        break;
      default:
        break;
    }
    offset += width;
  }
  return v;
}

std::size_t fused_width(const FusionSpec& spec, std::size_t encoder_width) {
  return encoder_width + side_width(spec);
}

}  // namespace sliar
