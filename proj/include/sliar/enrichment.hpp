#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sliar/corpus.hpp"

namespace sliar {

enum class SentimentLabel : std::uint8_t { Negative, Positive };

std::string_view to_string(SentimentLabel label);

/// Signed document sentiment (SEN). The label is derived: POSITIVE iff score > 0.
class SentimentResult {
 public:
  SentimentResult() = default;
  /// Clamps into [-1, 1]; `warn_on_clamp` reports out-of-range inputs.
  explicit SentimentResult(double score, bool warn_on_clamp = false);

  double score() const { return score_; }
  SentimentLabel label() const { return score_ > 0 ? SentimentLabel::Positive : SentimentLabel::Negative; }

  friend bool operator==(const SentimentResult&, const SentimentResult&) = default;

 private:
  double score_ = 0.0;
};

/// Five emotion intensities (EMO) in [0, 1], vectorized in the fixed order
/// anger, disgust, sadness, fear, joy.
struct EmotionVector {
  double anger = 0.0;
  double disgust = 0.0;
  double sadness = 0.0;
  double fear = 0.0;
  double joy = 0.0;

  static constexpr std::size_t kWidth = 5;
  /// File column names, in vector order.
  static constexpr std::array<std::string_view, kWidth> kColumns = {"anger", "disgust", "sad", "fear",
                                                                    "joy"};

  std::array<double, kWidth> as_array() const { return {anger, disgust, sadness, fear, joy}; }
  static EmotionVector from_array(const std::array<double, kWidth>& v);

  /// Clamps every component into [0, 1], warning per clamped component when asked.
  EmotionVector clamped(bool warn_on_clamp = false) const;
  bool in_range() const;

  friend bool operator==(const EmotionVector&, const EmotionVector&) = default;
};

/// Claim with binary label, anonymized speaker, SEN and EMO attached.
struct SentimentalRecord {
  ClaimRecord claim;
  SentimentResult sentiment;
  EmotionVector emotions;

  BinaryLabel label() const { return claim.binary_label.value_or(BinaryLabel::False); }
  friend bool operator==(const SentimentalRecord&, const SentimentalRecord&) = default;
};

// ---------------------------------------------------------------------------
// Analyzer backends

/// Remote failure that may succeed on retry.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int attempts, std::chrono::milliseconds next_backoff)
      : std::runtime_error(what), attempts_(attempts), next_backoff_(next_backoff) {}
  int attempts() const { return attempts_; }
  std::chrono::milliseconds next_backoff() const { return next_backoff_; }

 private:
  int attempts_;
  std::chrono::milliseconds next_backoff_;
};

/// Thrown by a single remote attempt when a retry may help (timeouts, 429, 5xx).
class RetryableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SentimentAnalyzer {
 public:
  virtual ~SentimentAnalyzer() = default;
  /// Stable identifier used as part of the cache key.
  virtual std::string id() const = 0;
  virtual SentimentResult analyze(std::string_view text) = 0;
  virtual bool is_remote() const { return false; }
  /// Number of backend invocations so far (HTTP requests for remote clients).
  virtual std::size_t call_count() const = 0;
};

class EmotionAnalyzer {
 public:
  virtual ~EmotionAnalyzer() = default;
  virtual std::string id() const = 0;
  virtual EmotionVector analyze(std::string_view text) = 0;
  virtual bool is_remote() const { return false; }
  virtual std::size_t call_count() const = 0;
};

/// Both entry points validate `text` and the result contract around a backend.
SentimentResult analyze_sentiment(std::string_view text, SentimentAnalyzer& analyzer);
EmotionVector analyze_emotions(std::string_view text, EmotionAnalyzer& analyzer);

/// Word list with a signed sentiment weight and emotion tags per entry.
struct Lexicon {
  struct Entry {
    double sentiment = 0.0;
    std::array<bool, EmotionVector::kWidth> emotions{};
  };
  std::string version;
  std::map<std::string, Entry, std::less<>> words;

  /// Tab-separated: word, weight, then five 0/1 flags (anger disgust sadness
  /// fear joy). Lines starting with '#' are comments; "# version: X" names it.
  static Lexicon parse(std::istream& in);
  static Lexicon load(const std::filesystem::path& path);
};

/// Lowercased alphanumeric/apostrophe word tokens.
std::vector<std::string> lexicon_words(std::string_view text);

/// Offline scoring, a pure function of the text and lexicon:
///   sentiment = tanh(sum of word weights / word count)
///   emotion_e = (words tagged e) / word count
SentimentResult lexicon_sentiment(std::string_view text, const Lexicon& lexicon);
EmotionVector lexicon_emotions(std::string_view text, const Lexicon& lexicon);

class LexiconSentimentAnalyzer final : public SentimentAnalyzer {
 public:
  explicit LexiconSentimentAnalyzer(std::shared_ptr<const Lexicon> lexicon) : lexicon_(std::move(lexicon)) {}
  std::string id() const override { return "local-lexicon-sentiment/" + lexicon_->version; }
  SentimentResult analyze(std::string_view text) override;
  std::size_t call_count() const override { return calls_.load(); }

 private:
  std::shared_ptr<const Lexicon> lexicon_;
  std::atomic<std::size_t> calls_{0};
};

class LexiconEmotionAnalyzer final : public EmotionAnalyzer {
 public:
  explicit LexiconEmotionAnalyzer(std::shared_ptr<const Lexicon> lexicon) : lexicon_(std::move(lexicon)) {}
  std::string id() const override { return "local-lexicon-emotion/" + lexicon_->version; }
  EmotionVector analyze(std::string_view text) override;
  std::size_t call_count() const override { return calls_.load(); }

 private:
  std::shared_ptr<const Lexicon> lexicon_;
  std::atomic<std::size_t> calls_{0};
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds timeout{30000};
};

/// Minimal HTTP seam so clients can be pointed at a local server in tests.
struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws std::runtime_error when no response arrives.
  virtual HttpResponse post_json(const std::string& base_url, const std::string& path,
                                 const std::string& body,
                                 const std::vector<std::pair<std::string, std::string>>& headers,
                                 std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<HttpTransport> make_http_transport();

/// Google Cloud Natural Language `documents:analyzeSentiment`.
class GoogleSentimentClient final : public SentimentAnalyzer {
 public:
  static constexpr std::string_view kDefaultBaseUrl = "https://language.googleapis.com";

  GoogleSentimentClient(std::string api_key, std::string base_url = std::string(kDefaultBaseUrl),
                        RetryPolicy retry = {}, std::unique_ptr<HttpTransport> transport = nullptr);

  std::string id() const override { return "google-nlp/v1"; }
  SentimentResult analyze(std::string_view text) override;
  bool is_remote() const override { return true; }
  std::size_t call_count() const override { return calls_.load(); }

 private:
  std::string api_key_;
  std::string base_url_;
  RetryPolicy retry_;
  std::unique_ptr<HttpTransport> transport_;
  std::atomic<std::size_t> calls_{0};
};

/// IBM Watson Natural Language Understanding `/v1/analyze` with the emotion feature.
class WatsonEmotionClient final : public EmotionAnalyzer {
 public:
  static constexpr std::string_view kDefaultBaseUrl =
      "https://api.us-south.natural-language-understanding.watson.cloud.ibm.com";

  WatsonEmotionClient(std::string api_key, std::string base_url = std::string(kDefaultBaseUrl),
                      RetryPolicy retry = {}, std::unique_ptr<HttpTransport> transport = nullptr);

  std::string id() const override { return "ibm-nlu/2022-04-07"; }
  EmotionVector analyze(std::string_view text) override;
  bool is_remote() const override { return true; }
  std::size_t call_count() const override { return calls_.load(); }

 private:
  std::string api_key_;
  std::string base_url_;
  RetryPolicy retry_;
  std::unique_ptr<HttpTransport> transport_;
  std::atomic<std::size_t> calls_{0};
};

/// Runs `attempt` with up to `policy.max_retries` retries and exponential
/// backoff, retrying only on RetryableError; exhaustion throws TransportError.
/// `sleep` is injectable for tests.
std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt,
                         const std::function<void(std::chrono::milliseconds)>& sleep = {});

// ---------------------------------------------------------------------------
// Cache

/// Hex SHA-256 of the exact statement bytes.
std::string content_key(std::string_view text);

struct CacheEntry {
  std::string key;
  std::string analyzer_id;
  std::optional<SentimentResult> sentiment;
  std::optional<EmotionVector> emotions;
  std::int64_t timestamp = 0;  // seconds since epoch
};

/// Single-file JSON-lines store keyed by (content hash, analyzer id). A file
/// that fails to parse is discarded and rebuilt. Writes are serialized.
class AnalysisCache {
 public:
  AnalysisCache() = default;  // in-memory only
  explicit AnalysisCache(std::filesystem::path path);

  std::optional<CacheEntry> find(const std::string& key, const std::string& analyzer_id) const;
  void put(CacheEntry entry);

  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  void append_to_file(const CacheEntry& entry);
  // Fills in the fields `entry` carries; caller holds the lock.
  void merge(CacheEntry entry);

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, CacheEntry> entries_;
};

// ---------------------------------------------------------------------------
// Enrichment

struct EnrichOptions {
  std::size_t parallelism = 1;
  /// Minimum spacing between fresh remote calls, per backend. Zero disables.
  std::chrono::milliseconds min_call_interval{0};
};

struct EnrichStats {
  std::size_t records = 0;
  std::size_t cache_hits = 0;
  std::size_t fresh_analyses = 0;
  std::size_t remote_calls = 0;
};

/// Some records could not be enriched even after retries.
class PartialEnrichmentError : public std::runtime_error {
 public:
  PartialEnrichmentError(std::vector<std::string> failed_ids, std::vector<SentimentalRecord> partial);
  const std::vector<std::string>& failed_ids() const { return failed_ids_; }
  /// Successfully enriched records, input order preserved.
  const std::vector<SentimentalRecord>& partial() const { return partial_; }

 private:
  std::vector<std::string> failed_ids_;
  std::vector<SentimentalRecord> partial_;
};

/// Attaches SEN and EMO to binarized claims. The cache is consulted first;
/// output order equals input order.
std::vector<SentimentalRecord> enrich(const std::vector<ClaimRecord>& records,
                                      SentimentAnalyzer& sentiment, EmotionAnalyzer& emotions,
                                      AnalysisCache& cache, const EnrichOptions& options = {},
                                      EnrichStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Enriched corpus files

/// Canonical columns followed by sentiment, sentiment_score, anger, disgust, sad, fear, joy.
std::vector<std::string> enriched_columns();

void write_enriched(std::ostream& out, const std::vector<SentimentalRecord>& records);

/// Reads an enriched corpus, validating every value range. Columns are located
/// by header name; unknown extra columns are ignored.
std::vector<SentimentalRecord> load_precomputed(std::istream& in);
std::vector<SentimentalRecord> load_precomputed_file(const std::filesystem::path& path);

}  // namespace sliar
