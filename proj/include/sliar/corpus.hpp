#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sliar {

enum class SixWayLabel : std::uint8_t {
  PantsFire,
  False,
  BarelyTrue,
  HalfTrue,
  MostlyTrue,
  True,
};

enum class BinaryLabel : std::uint8_t { False = 0, True = 1 };

inline constexpr std::array<SixWayLabel, 6> kSixWayLabels = {
    SixWayLabel::PantsFire, SixWayLabel::False,      SixWayLabel::BarelyTrue,
    SixWayLabel::HalfTrue,  SixWayLabel::MostlyTrue, SixWayLabel::True};

/// Canonical lowercase rendering ("pants-fire", "barely-true", ...).
std::string_view to_string(SixWayLabel label);
std::string_view to_string(BinaryLabel label);

/// Case-insensitive; spaces and underscores are treated as hyphens, so
/// "Pants on Fire" and "pants-fire" both parse. Returns nullopt otherwise.
std::optional<SixWayLabel> parse_six_way_label(std::string_view text);

/// Accepts 0/1 and false/true in any case.
std::optional<BinaryLabel> parse_binary_label(std::string_view text);

constexpr int to_index(BinaryLabel label) { return static_cast<int>(label); }

/// Everything except mostly-true and true collapses to FALSE.
constexpr BinaryLabel binarize_label(SixWayLabel label) {
  switch (label) {
    case SixWayLabel::MostlyTrue:
    case SixWayLabel::True:
      return BinaryLabel::True;
    default:
      return BinaryLabel::False;
  }
}

/// Per-speaker history of prior rulings (the SPC group).
struct SpeakerCredit {
  std::int64_t barely_true = 0;
  std::int64_t false_c = 0;
  std::int64_t half_true = 0;
  std::int64_t mostly_true = 0;
  std::int64_t pants_on_fire = 0;

  std::array<std::int64_t, 5> as_array() const {
    return {barely_true, false_c, half_true, mostly_true, pants_on_fire};
  }
  friend bool operator==(const SpeakerCredit&, const SpeakerCredit&) = default;
};

/// One raw LIAR row. `label` is absent for rows read back from a binarized
/// corpus file, where only `binary_label` survives.
struct ClaimRecord {
  std::string id;
  std::optional<SixWayLabel> label;
  std::optional<BinaryLabel> binary_label;
  std::string statement;
  std::string subject;
  std::string speaker;
  std::string speaker_job;
  std::string state_info;
  std::string party_affiliation;
  SpeakerCredit credit;
  std::string context;

  friend bool operator==(const ClaimRecord&, const ClaimRecord&) = default;
};

/// Speaker name -> "_<k>_" token, k by order of first appearance.
class SpeakerMap {
 public:
  /// Returns the existing token or assigns the next one.
  const std::string& assign(const std::string& name);
  std::optional<std::string> find(const std::string& name) const;

  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  /// (name, token) in assignment order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  static std::string token_for(std::size_t k);

 private:
  std::map<std::string, std::string> tokens_;
  std::vector<std::string> order_;
};

template <typename Record>
struct DatasetSplit {
  std::vector<Record> train;
  std::vector<Record> valid;
  std::vector<Record> test;
  std::uint64_t seed = 0;
};

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

struct LabelHistogram {
  std::array<std::size_t, 2> counts{};
  std::array<double, 2> fractions{};

  std::size_t total() const { return counts[0] + counts[1]; }
};

/// Parses LIAR's 14-column TSV. Empty cells become empty strings; empty count
/// cells become 0. Throws ParseError carrying the 1-based row number.
std::vector<ClaimRecord> parse_liar(std::istream& in);
std::vector<ClaimRecord> parse_liar_file(const std::string& path);

/// Writes LIAR TSV (the inverse of parse_liar). Requires the six-way label.
void write_liar(std::ostream& out, const std::vector<ClaimRecord>& records);

/// Fills `binary_label` from `label` on every record.
std::vector<ClaimRecord> binarize(std::vector<ClaimRecord> records);

/// Replaces speaker names with tokens. With a non-empty `existing` map,
/// names already present (including tokens issued by it) keep their token.
std::pair<std::vector<ClaimRecord>, SpeakerMap> anonymize_speakers(
    std::vector<ClaimRecord> records, SpeakerMap existing = {});

/// floor/floor/remainder sizes for `n` records.
SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios = {});

/// Deterministic Fisher-Yates permutation of [0, n) driven by mt19937_64.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

void validate_ratios(const SplitRatios& ratios);

template <typename Record>
DatasetSplit<Record> split_dataset(const std::vector<Record>& records,
                                   std::uint64_t seed,
                                   const SplitRatios& ratios = {}) {
  validate_ratios(ratios);
  const auto sizes = split_sizes(records.size(), ratios);
  const auto order = seeded_permutation(records.size(), seed);
  DatasetSplit<Record> split;
  split.seed = seed;
  split.train.reserve(sizes.train);
  split.valid.reserve(sizes.valid);
  split.test.reserve(sizes.test);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& record = records[order[i]];
    if (i < sizes.train) {
      split.train.push_back(record);
    } else if (i < sizes.train + sizes.valid) {
      split.valid.push_back(record);
    } else {
      split.test.push_back(record);
    }
  }
  return split;
}

/// Throws ValidationError on an empty input.
LabelHistogram label_distribution(const std::vector<BinaryLabel>& labels);
LabelHistogram label_distribution(const std::vector<ClaimRecord>& records);

/// Canonical binarized corpus: comma-separated, header row, statements quoted.
inline constexpr std::array<std::string_view, 14> kCanonicalColumns = {
    "id",
    "binary_label",
    "statement",
    "subject",
    "speaker_id",
    "speaker_job",
    "state_info",
    "party_affiliation",
    "barely_true_counts",
    "false_counts",
    "half_true_counts",
    "mostly_true_counts",
    "pants_on_fire_counts",
    "context"};

void write_canonical(std::ostream& out, const std::vector<ClaimRecord>& records);
std::vector<ClaimRecord> read_canonical(std::istream& in);

void write_speaker_map(std::ostream& out, const SpeakerMap& map);

}  // namespace sliar
