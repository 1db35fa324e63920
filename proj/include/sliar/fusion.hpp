#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sliar/enrichment.hpp"

namespace sliar {

/// Attribute groups of an enriched record.
enum class Group : std::uint8_t { Text, Emo, Spc, Sen };

inline constexpr std::array<Group, 4> kGroupOrder = {Group::Text, Group::Emo, Group::Spc, Group::Sen};

std::string_view to_string(Group group);
std::optional<Group> parse_group(std::string_view name);

/// Number of side-vector components a group contributes (TEXT contributes none).
constexpr std::size_t group_width(Group group) {
  switch (group) {
    case Group::Emo: return 5;
    case Group::Spc: return 5;
    case Group::Sen: return 1;
    default: return 0;
  }
}

/// Small ordered set of groups; iteration follows kGroupOrder.
class GroupSet {
 public:
  GroupSet() = default;
  GroupSet(std::initializer_list<Group> groups) {
    for (auto g : groups) insert(g);
  }

  void insert(Group g) { bits_ |= mask(g); }
  bool contains(Group g) const { return (bits_ & mask(g)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<Group> ordered() const;
  GroupSet intersect(GroupSet other) const { return GroupSet(bits_ & other.bits_); }

  friend bool operator==(GroupSet, GroupSet) = default;

 private:
  explicit GroupSet(std::uint8_t bits) : bits_(bits) {}
  static constexpr std::uint8_t mask(Group g) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(g)); }
  std::uint8_t bits_ = 0;
};

/// Which groups are serialized into the encoder text and which are
/// concatenated to the pooled encoder output.
struct FusionSpec {
  GroupSet encoder_groups{Group::Text};
  GroupSet side_groups;
  bool normalize_spc = false;

  /// Throws ConfigError unless TEXT feeds the encoder, TEXT is not a side
  /// group, and no group feeds both paths.
  void validate() const;

  friend bool operator==(const FusionSpec&, const FusionSpec&) = default;
};

/// Builds a spec from group names such as {"TEXT", "EMO"}; validates it.
FusionSpec make_fusion_spec(const std::vector<std::string>& encoder, const std::vector<std::string>& side,
                            bool normalize_spc = false);

/// Per-SPC-column min/max over the training split.
struct NormalizationStats {
  std::array<double, 5> min{};
  std::array<double, 5> max{};

  static NormalizationStats from_training(const std::vector<SentimentalRecord>& train);
  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

struct SideSegment {
  Group group;
  std::size_t offset;
  std::size_t width;
};

/// Side vector with its layout (EMO, then SPC, then SEN).
struct SideFeatureVector {
  Eigen::VectorXd values;
  std::vector<SideSegment> layout;

  std::size_t width() const { return static_cast<std::size_t>(values.size()); }
};

inline constexpr std::string_view kEncoderSeparator = " [SEP] ";

/// Statement, then one " [SEP] "-prefixed "name: value" block per non-TEXT
/// encoder group. Numbers are printed with four decimals.
std::string serialize_for_encoder(const SentimentalRecord& record, const FusionSpec& spec);

std::size_t side_width(const FusionSpec& spec);

/// Requires stats when SPC is a normalized side group.
SideFeatureVector side_features(const SentimentalRecord& record, const FusionSpec& spec,
                                const NormalizationStats* stats = nullptr);

std::size_t fused_width(const FusionSpec& spec, std::size_t encoder_width);

}  // namespace sliar
