#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sliar/corpus.hpp"
#include "sliar/diagnostics.hpp"
#include "sliar/enrichment.hpp"
#include "sliar/nn/tensor.hpp"

namespace sliar::testing {

inline const std::string kTable1Statement =
    "McCain opposed a requirement that the government buy American-made motorcycles. And he said all "
    "buy-American provisions were quote 'disgraceful.'";

/// The sample record shown for the enriched corpus.
inline SentimentalRecord table1_record() {
  SentimentalRecord r;
  r.claim.id = "1.json";
  r.claim.binary_label = BinaryLabel::False;
  r.claim.statement = kTable1Statement;
  r.claim.subject = "federal-budget";
  r.claim.speaker = "_2_";
  r.claim.speaker_job = "President";
  r.claim.state_info = "Illinois";
  r.claim.party_affiliation = "democrat";
  r.claim.credit = {70, 71, 160, 163, 9};
  r.claim.context = "";
  r.sentiment = SentimentResult(-0.7);
  r.emotions = EmotionVector{0.1353, 0.8253, 0.1419, 0.0157, 0.0236};
  return r;
}

/// Collects warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = set_warning_sink([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { set_warning_sink(previous_); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  bool contains(const std::string& needle) const {
    return std::any_of(messages.begin(), messages.end(),
                       [&](const std::string& m) { return m.find(needle) != std::string::npos; });
  }

  std::vector<std::string> messages;

 private:
  WarningSink previous_;
};

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(SLIAR_TEST_FIXTURES) / name;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sliar_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline const std::array<std::string, 8> kTrueWords = {"budget", "growth", "jobs", "school",
                                                      "record", "funding", "percent", "rate"};
inline const std::array<std::string, 8> kFalseWords = {"secret", "plot", "invasion", "hoax",
                                                       "banned", "million", "illegal", "always"};

/// Raw six-way-labelled claims with a few repeated speakers.
inline std::vector<ClaimRecord> synthetic_claims(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> label_pick(0, 5), word_pick(0, 7), speaker_pick(0, 9), count_pick(0, 60);
  std::vector<ClaimRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    ClaimRecord r;
    r.id = std::to_string(1000 + i) + ".json";
    r.label = kSixWayLabels[static_cast<std::size_t>(label_pick(rng))];
    const bool truthy = binarize_label(*r.label) == BinaryLabel::True;
    const auto& words = truthy ? kTrueWords : kFalseWords;
    for (int w = 0; w < 7; ++w) r.statement += (w ? " " : "") + words[static_cast<std::size_t>(word_pick(rng))];
    r.statement += ".";
    r.subject = truthy ? "economy" : "immigration";
    r.speaker = "Speaker " + std::to_string(speaker_pick(rng));
    r.speaker_job = i % 3 ? "Senator" : "";
    r.state_info = i % 4 ? "Ohio" : "";
    r.party_affiliation = i % 2 ? "republican" : "democrat";
    r.credit = {static_cast<std::int64_t>(count_pick(rng)), static_cast<std::int64_t>(count_pick(rng)),
                static_cast<std::int64_t>(count_pick(rng)), static_cast<std::int64_t>(count_pick(rng)),
                static_cast<std::int64_t>(count_pick(rng))};
    r.context = "a speech";
    out.push_back(std::move(r));
  }
  return out;
}

/// Enriched records whose label is recoverable from statement words,
/// sentiment sign and emotion profile. Values are rounded to 4 decimals so
/// they survive a file round trip unchanged.
inline std::vector<SentimentalRecord> synthetic_enriched(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5ull);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto r4 = [](double v) { return std::round(v * 1e4) / 1e4; };
  auto claims = binarize(synthetic_claims(n, seed));
  std::vector<SentimentalRecord> out;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    SentimentalRecord r;
    r.claim = claims[i];
    // balanced classes
    r.claim.binary_label = i % 2 ? BinaryLabel::True : BinaryLabel::False;
    r.claim.label.reset();  // the enriched format keeps only the binary label
    const bool truthy = r.claim.binary_label == BinaryLabel::True;
    r.claim.statement.clear();
    std::uniform_int_distribution<int> word_pick(0, 7);
    const auto& words = truthy ? kTrueWords : kFalseWords;
    for (int w = 0; w < 7; ++w) {
      r.claim.statement += (w ? " " : "") + words[static_cast<std::size_t>(word_pick(rng))];
    }
    r.claim.statement += " #" + std::to_string(i);
    r.sentiment = SentimentResult(r4(truthy ? 0.2 + 0.7 * u(rng) : -0.2 - 0.7 * u(rng)));
    r.emotions = truthy ? EmotionVector{r4(0.2 * u(rng)), r4(0.2 * u(rng)), r4(0.3 * u(rng)), r4(0.2 * u(rng)),
                                        r4(0.6 + 0.4 * u(rng))}
                        : EmotionVector{r4(0.4 + 0.5 * u(rng)), r4(0.5 + 0.5 * u(rng)), r4(0.3 * u(rng)),
                                        r4(0.3 + 0.5 * u(rng)), r4(0.1 * u(rng))};
    out.push_back(std::move(r));
  }
  return out;
}

/// Accuracy and macro F1 straight from label lists, no confusion matrix.
struct BruteForceMetrics {
  double accuracy = 0;
  double macro_f1 = 0;
};

inline BruteForceMetrics brute_force_metrics(const std::vector<int>& actual, const std::vector<int>& predicted) {
  BruteForceMetrics m;
  double correct = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) correct += actual[i] == predicted[i] ? 1 : 0;
  m.accuracy = correct / static_cast<double>(actual.size());
  double f1_sum = 0;
  for (int cls = 0; cls < 2; ++cls) {
    double tp = 0, predicted_pos = 0, actual_pos = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      if (predicted[i] == cls) predicted_pos += 1;
      if (actual[i] == cls) actual_pos += 1;
      if (predicted[i] == cls && actual[i] == cls) tp += 1;
    }
    const double p = predicted_pos > 0 ? tp / predicted_pos : 0.0;
    const double r = actual_pos > 0 ? tp / actual_pos : 0.0;
    f1_sum += (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  m.macro_f1 = f1_sum / 2.0;
  return m;
}

/// Central-difference check of `count` random coordinates drawn across
/// `params`. `loss` must recompute the loss from the current values; the
/// analytic gradients must already sit in `grad`. Returns the worst relative
/// error, using max(|a|, |n|, floor) as the denominator.
inline double max_gradient_error(const nn::ParameterList<double>& params, const std::function<double()>& loss,
                                 std::size_t count, std::uint64_t seed, double h = 1e-6, double floor = 1e-7) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<nn::Parameter<double>*, nn::Index>> coords;
  std::size_t total = 0;
  for (auto* p : params) total += static_cast<std::size_t>(p->size());
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t k = pick(rng);
    for (auto* p : params) {
      if (k < static_cast<std::size_t>(p->size())) {
        coords.emplace_back(p, static_cast<nn::Index>(k));
        break;
      }
      k -= static_cast<std::size_t>(p->size());
    }
  }
  double worst = 0;
  for (auto [p, k] : coords) {
    double& v = p->value.data()[k];
    const double original = v;
    v = original + h;
    const double up = loss();
    v = original - h;
    const double down = loss();
    v = original;
    const double numeric = (up - down) / (2 * h);
    const double analytic = p->grad.data()[k];
    const double err = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), floor});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace sliar::testing
