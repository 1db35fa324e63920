#include "sliar/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>

#include "sliar/csv.hpp"
#include "sliar/diagnostics.hpp"
#include "sliar/errors.hpp"

namespace sliar {
namespace {

constexpr std::size_t kLiarColumns = 14;

std::string normalize_label_text(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == ' ' || c == '_' || c == '-') {
      if (!out.empty() && out.back() != '-') out.push_back('-');
    } else if (c != '\r' && c != '\t') {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// LIAR stores counts as integers; some mirrors render them as "70.0".
std::int64_t parse_count(const std::string& cell, std::size_t row, std::string_view column) {
  if (cell.empty()) return 0;
  std::int64_t value = 0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc() && ptr == last && value >= 0) return value;
  double real = 0;
  auto [rptr, rec] = std::from_chars(first, last, real);
  if (rec == std::errc() && rptr == last && real >= 0 && std::floor(real) == real) {
    return static_cast<std::int64_t>(real);
  }
  throw ParseError(row, "non-integer count '" + cell + "' in column " + std::string(column));
}

}  // namespace

std::string_view to_string(SixWayLabel label) {
  switch (label) {
    case SixWayLabel::PantsFire: return "pants-fire";
    case SixWayLabel::False: return "false";
    case SixWayLabel::BarelyTrue: return "barely-true";
    case SixWayLabel::HalfTrue: return "half-true";
    case SixWayLabel::MostlyTrue: return "mostly-true";
    case SixWayLabel::True: return "true";
  }
  return "";
}

std::string_view to_string(BinaryLabel label) {
  return label == BinaryLabel::True ? "TRUE" : "FALSE";
}

std::optional<SixWayLabel> parse_six_way_label(std::string_view text) {
  const auto norm = normalize_label_text(text);
  if (norm == "pants-fire" || norm == "pants-on-fire") return SixWayLabel::PantsFire;
  for (auto label : kSixWayLabels) {
    if (norm == to_string(label)) return label;
  }
  return std::nullopt;
}

std::optional<BinaryLabel> parse_binary_label(std::string_view text) {
  const auto norm = normalize_label_text(text);
  if (norm == "0" || norm == "false") return BinaryLabel::False;
  if (norm == "1" || norm == "true") return BinaryLabel::True;
  return std::nullopt;
}

const std::string& SpeakerMap::assign(const std::string& name) {
  auto it = tokens_.find(name);
  if (it == tokens_.end()) {
    it = tokens_.emplace(name, token_for(order_.size())).first;
    order_.push_back(name);
  }
  return it->second;
}

std::optional<std::string> SpeakerMap::find(const std::string& name) const {
  if (auto it = tokens_.find(name); it != tokens_.end()) return it->second;
  return std::nullopt;
}

std::vector<std::pair<std::string, std::string>> SpeakerMap::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(order_.size());
  for (const auto& name : order_) out.emplace_back(name, tokens_.at(name));
  return out;
}

std::string SpeakerMap::token_for(std::size_t k) { return "_" + std::to_string(k) + "_"; }

std::vector<ClaimRecord> parse_liar(std::istream& in) {
  std::vector<ClaimRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != kLiarColumns) {
      throw ParseError(row, "expected " + std::to_string(kLiarColumns) + " tab-separated columns, found " +
                                std::to_string(cells.size()));
    }
    ClaimRecord r;
    r.id = std::move(cells[0]);
    r.label = parse_six_way_label(cells[1]);
    if (!r.label) throw ParseError(row, "unknown label '" + cells[1] + "'");
    r.statement = std::move(cells[2]);
    if (r.statement.empty()) throw ParseError(row, "empty statement");
    r.subject = std::move(cells[3]);
    r.speaker = std::move(cells[4]);
    r.speaker_job = std::move(cells[5]);
    r.state_info = std::move(cells[6]);
    r.party_affiliation = std::move(cells[7]);
    r.credit.barely_true = parse_count(cells[8], row, "barely_true_counts");
    r.credit.false_c = parse_count(cells[9], row, "false_counts");
    r.credit.half_true = parse_count(cells[10], row, "half_true_counts");
    r.credit.mostly_true = parse_count(cells[11], row, "mostly_true_counts");
    r.credit.pants_on_fire = parse_count(cells[12], row, "pants_on_fire_counts");
    r.context = std::move(cells[13]);
    if (!seen_ids.insert(r.id).second) warn("duplicate claim id '" + r.id + "' at row " + std::to_string(row));
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ClaimRecord> parse_liar_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open LIAR file '" + path + "'");
  return parse_liar(in);
}

void write_liar(std::ostream& out, const std::vector<ClaimRecord>& records) {
  for (const auto& r : records) {
    if (!r.label) throw ValidationError("record '" + r.id + "' has no six-way label");
    const auto c = r.credit;
    out << r.id << '\t' << to_string(*r.label) << '\t' << r.statement << '\t' << r.subject << '\t'
        << r.speaker << '\t' << r.speaker_job << '\t' << r.state_info << '\t' << r.party_affiliation
        << '\t' << c.barely_true << '\t' << c.false_c << '\t' << c.half_true << '\t' << c.mostly_true
        << '\t' << c.pants_on_fire << '\t' << r.context << '\n';
  }
}

std::vector<ClaimRecord> binarize(std::vector<ClaimRecord> records) {
  for (auto& r : records) {
    if (r.label) r.binary_label = binarize_label(*r.label);
    if (!r.binary_label) throw ValidationError("record '" + r.id + "' has no label to binarize");
  }
  return records;
}

std::pair<std::vector<ClaimRecord>, SpeakerMap> anonymize_speakers(std::vector<ClaimRecord> records,
                                                                   SpeakerMap existing) {
  std::set<std::string> issued;
  for (const auto& [name, token] : existing.entries()) issued.insert(token);
  for (auto& r : records) {
    if (issued.contains(r.speaker) && !existing.find(r.speaker)) continue;
    r.speaker = existing.assign(r.speaker);
    issued.insert(r.speaker);
  }
  return {std::move(records), std::move(existing)};
}

void validate_ratios(const SplitRatios& ratios) {
  if (!(ratios.train > 0 && ratios.valid > 0 && ratios.test > 0)) {
    throw ValidationError("split ratios must be positive");
  }
  const double sum = ratios.train + ratios.valid + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1, got " + std::to_string(sum));
  }
}

SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios) {
  validate_ratios(ratios);
  // The small epsilon keeps exact products such as 0.8 * 10 from landing on 7.999...
  const auto take = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  SplitSizes s;
  s.train = std::min(n, take(ratios.train));
  s.valid = std::min(n - s.train, take(ratios.valid));
  s.test = n - s.train - s.valid;
  return s;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates with rejection sampling: std::shuffle and
  // std::uniform_int_distribution are not portable across standard libraries.
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(order[i - 1], order[draw % bound]);
  }
  return order;
}

LabelHistogram label_distribution(const std::vector<BinaryLabel>& labels) {
  if (labels.empty()) throw ValidationError("label distribution of an empty record list is undefined");
  LabelHistogram h;
  for (auto l : labels) ++h.counts[to_index(l)];
  const auto total = static_cast<double>(labels.size());
  h.fractions = {static_cast<double>(h.counts[0]) / total, static_cast<double>(h.counts[1]) / total};
  return h;
}

LabelHistogram label_distribution(const std::vector<ClaimRecord>& records) {
  std::vector<BinaryLabel> labels;
  labels.reserve(records.size());
  for (const auto& r : records) {
    if (!r.binary_label) throw ValidationError("record '" + r.id + "' is not binarized");
    labels.push_back(*r.binary_label);
  }
  return label_distribution(labels);
}

void write_canonical(std::ostream& out, const std::vector<ClaimRecord>& records) {
  std::vector<std::string> header(kCanonicalColumns.begin(), kCanonicalColumns.end());
  csv::write_row(out, header);
  std::vector<bool> force(kCanonicalColumns.size(), false);
  force[2] = true;
  for (const auto& r : records) {
    if (!r.binary_label) throw ValidationError("record '" + r.id + "' is not binarized");
    const auto c = r.credit;
    csv::write_row(out,
                   {r.id, std::to_string(to_index(*r.binary_label)), r.statement, r.subject, r.speaker,
                    r.speaker_job, r.state_info, r.party_affiliation, std::to_string(c.barely_true),
                    std::to_string(c.false_c), std::to_string(c.half_true), std::to_string(c.mostly_true),
                    std::to_string(c.pants_on_fire), r.context},
                   force);
  }
}

std::vector<ClaimRecord> read_canonical(std::istream& in) {
  csv::Reader reader(in);
  auto header_row = reader.next();
  if (!header_row) return {};
  csv::Header header(std::move(*header_row));
  const auto col = [&](std::initializer_list<std::string_view> names) {
    auto i = header.find_any(names);
    if (!i) throw ParseError(1, "missing column '" + std::string(*names.begin()) + "'");
    return *i;
  };
  const auto id = col({"id", "ID"});
  const auto label = col({"binary_label", "label"});
  const auto statement = col({"statement"});
  const auto subject = col({"subject"});
  const auto speaker = col({"speaker_id", "speaker"});
  const auto job = col({"speaker_job"});
  const auto state = col({"state_info"});
  const auto party = col({"party_affiliation"});
  const auto bt = col({"barely_true_counts"});
  const auto fc = col({"false_counts"});
  const auto ht = col({"half_true_counts"});
  const auto mt = col({"mostly_true_counts"});
  const auto pf = col({"pants_on_fire_counts"});
  const auto context = col({"context"});

  std::vector<ClaimRecord> records;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;
    const auto n = reader.row();
    if (row->size() != header.names().size()) {
      throw ParseError(n, "expected " + std::to_string(header.names().size()) + " columns, found " +
                              std::to_string(row->size()));
    }
    auto& cells = *row;
    ClaimRecord r;
    r.id = cells[id];
    r.binary_label = parse_binary_label(cells[label]);
    if (!r.binary_label) {
      // A six-way label in the label column is binarized on the fly.
      auto six = parse_six_way_label(cells[label]);
      if (!six) throw ParseError(n, "unknown label '" + cells[label] + "'");
      r.label = six;
      r.binary_label = binarize_label(*six);
    }
    r.statement = cells[statement];
    if (r.statement.empty()) throw ParseError(n, "empty statement");
    r.subject = cells[subject];
    r.speaker = cells[speaker];
    r.speaker_job = cells[job];
    r.state_info = cells[state];
    r.party_affiliation = cells[party];
    r.credit.barely_true = parse_count(cells[bt], n, "barely_true_counts");
    r.credit.false_c = parse_count(cells[fc], n, "false_counts");
    r.credit.half_true = parse_count(cells[ht], n, "half_true_counts");
    r.credit.mostly_true = parse_count(cells[mt], n, "mostly_true_counts");
    r.credit.pants_on_fire = parse_count(cells[pf], n, "pants_on_fire_counts");
    r.context = cells[context];
    records.push_back(std::move(r));
  }
  return records;
}

void write_speaker_map(std::ostream& out, const SpeakerMap& map) {
  csv::write_row(out, {"speaker", "speaker_id"});
  for (const auto& [name, token] : map.entries()) csv::write_row(out, {name, token});
}

}  // namespace sliar
