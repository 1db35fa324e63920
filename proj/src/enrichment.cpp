#include "sliar/enrichment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "sliar/csv.hpp"
#include "sliar/diagnostics.hpp"
#include "sliar/errors.hpp"

namespace sliar {
namespace {

using json = nlohmann::json;

std::string format_fixed4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  auto s = os.str();
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::string format_shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_real(const std::string& cell, std::size_t row, std::string_view column) {
  double v = 0;
  const auto* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(row, "invalid number '" + cell + "' in column " + std::string(column));
  }
  return v;
}

// Rate limit shared by all workers calling one backend.
class CallSpacer {
 public:
  explicit CallSpacer(std::chrono::milliseconds interval) : interval_(interval) {}
  void wait() {
    if (interval_.count() <= 0) return;
    std::unique_lock lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    const auto slot = std::max(now, next_);
    next_ = slot + interval_;
    lock.unlock();
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::milliseconds interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

}  // namespace

std::string_view to_string(SentimentLabel label) {
  return label == SentimentLabel::Positive ? "POSITIVE" : "NEGATIVE";
}

SentimentResult::SentimentResult(double score, bool warn_on_clamp) {
  if (!std::isfinite(score)) throw ValidationError("sentiment score is not finite");
  score_ = std::clamp(score, -1.0, 1.0);
  if (warn_on_clamp && score_ != score) {
    warn("sentiment score " + format_shortest(score) + " clamped to " + format_shortest(score_));
  }
}

EmotionVector EmotionVector::from_array(const std::array<double, kWidth>& v) {
  return {v[0], v[1], v[2], v[3], v[4]};
}

EmotionVector EmotionVector::clamped(bool warn_on_clamp) const {
  auto v = as_array();
  for (std::size_t i = 0; i < kWidth; ++i) {
    if (!std::isfinite(v[i])) throw ValidationError("emotion score is not finite");
    const double c = std::clamp(v[i], 0.0, 1.0);
    if (warn_on_clamp && c != v[i]) {
      warn("emotion " + std::string(kColumns[i]) + " = " + format_shortest(v[i]) + " clamped to " +
           format_shortest(c));
    }
    v[i] = c;
  }
  return from_array(v);
}

bool EmotionVector::in_range() const {
  const auto v = as_array();
  return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
}

SentimentResult analyze_sentiment(std::string_view text, SentimentAnalyzer& analyzer) {
  if (text.empty()) throw ValidationError("cannot analyze empty text");
  return analyzer.analyze(text);
}

EmotionVector analyze_emotions(std::string_view text, EmotionAnalyzer& analyzer) {
  if (text.empty()) throw ValidationError("cannot analyze empty text");
  return analyzer.analyze(text).clamped(true);
}

// ---------------------------------------------------------------------------
// Lexicon

Lexicon Lexicon::parse(std::istream& in) {
  Lexicon lex;
  lex.version = "unversioned";
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view tag = "# version:";
      if (line.starts_with(tag)) {
        auto v = line.substr(tag.size());
        v.erase(0, v.find_first_not_of(' '));
        lex.version = v;
      }
      continue;
    }
    std::istringstream fields(line);
    std::string word;
    Entry entry;
    int flags[EmotionVector::kWidth];
    if (!(fields >> word >> entry.sentiment)) throw ParseError(row, "lexicon line needs a word and a weight");
    for (std::size_t i = 0; i < EmotionVector::kWidth; ++i) {
      if (!(fields >> flags[i]) || (flags[i] != 0 && flags[i] != 1)) {
        throw ParseError(row, "lexicon line needs five 0/1 emotion flags");
      }
      entry.emotions[i] = flags[i] == 1;
    }
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    lex.words.insert_or_assign(std::move(word), entry);
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open lexicon '" + path.string() + "'");
  return parse(in);
}

std::vector<std::string> lexicon_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || ch == '\'' || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  for (auto& w : words) {
    while (!w.empty() && w.front() == '\'') w.erase(0, 1);
    while (!w.empty() && w.back() == '\'') w.pop_back();
  }
  std::erase_if(words, [](const std::string& w) { return w.empty(); });
  return words;
}

SentimentResult lexicon_sentiment(std::string_view text, const Lexicon& lexicon) {
  const auto words = lexicon_words(text);
  if (words.empty()) return SentimentResult(0.0);
  double sum = 0;
  for (const auto& w : words) {
    if (auto it = lexicon.words.find(w); it != lexicon.words.end()) sum += it->second.sentiment;
  }
  return SentimentResult(std::tanh(sum / static_cast<double>(words.size())));
}

EmotionVector lexicon_emotions(std::string_view text, const Lexicon& lexicon) {
  const auto words = lexicon_words(text);
  std::array<double, EmotionVector::kWidth> hits{};
  if (words.empty()) return {};
  for (const auto& w : words) {
    auto it = lexicon.words.find(w);
    if (it == lexicon.words.end()) continue;
    for (std::size_t i = 0; i < EmotionVector::kWidth; ++i) hits[i] += it->second.emotions[i] ? 1.0 : 0.0;
  }
  for (auto& h : hits) h /= static_cast<double>(words.size());
  return EmotionVector::from_array(hits);
}

SentimentResult LexiconSentimentAnalyzer::analyze(std::string_view text) {
  ++calls_;
  return lexicon_sentiment(text, *lexicon_);
}

EmotionVector LexiconEmotionAnalyzer::analyze(std::string_view text) {
  ++calls_;
  return lexicon_emotions(text, *lexicon_);
}

// ---------------------------------------------------------------------------
// Remote clients

std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt,
                         const std::function<void(std::chrono::milliseconds)>& sleep) {
  auto backoff = policy.initial_backoff;
  std::string last_error;
  const int attempts = 1 + std::max(0, policy.max_retries);
  for (int i = 1; i <= attempts; ++i) {
    try {
      return attempt();
    } catch (const RetryableError& e) {
      last_error = e.what();
    }
    if (i == attempts) break;
    if (sleep) {
      sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff *= 2;
  }
  throw TransportError("remote call failed after " + std::to_string(attempts) + " attempts: " + last_error,
                       attempts, backoff);
}

namespace {

std::string request_with_policy(HttpTransport& transport, const RetryPolicy& policy, const std::string& base,
                                const std::string& path, const std::string& body,
                                const std::vector<std::pair<std::string, std::string>>& headers,
                                std::atomic<std::size_t>& calls) {
  return with_retries(policy, [&]() -> std::string {
    ++calls;
    HttpResponse response;
    try {
      response = transport.post_json(base, path, body, headers, policy.timeout);
    } catch (const std::exception& e) {
      throw RetryableError(e.what());
    }
    if (response.status == 429 || response.status >= 500) {
      throw RetryableError("HTTP " + std::to_string(response.status));
    }
    if (response.status < 200 || response.status >= 300) {
      // Client errors (bad key, malformed request) do not improve on retry.
      throw std::runtime_error("HTTP " + std::to_string(response.status) + ": " + response.body.substr(0, 200));
    }
    return std::move(response.body);
  });
}

std::string base64(std::string_view raw) {
  std::string out(4 * ((raw.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace

GoogleSentimentClient::GoogleSentimentClient(std::string api_key, std::string base_url, RetryPolicy retry,
                                             std::unique_ptr<HttpTransport> transport)
    : api_key_(std::move(api_key)),
      base_url_(std::move(base_url)),
      retry_(retry),
      transport_(transport ? std::move(transport) : make_http_transport()) {
  if (api_key_.empty()) throw ConfigError("Google NLP client needs an API key (GOOGLE_NLP_KEY)");
}

SentimentResult GoogleSentimentClient::analyze(std::string_view text) {
  const json request = {{"document", {{"type", "PLAIN_TEXT"}, {"content", std::string(text)}}},
                        {"encodingType", "UTF8"}};
  const auto body = request_with_policy(*transport_, retry_, base_url_,
                                        "/v1/documents:analyzeSentiment?key=" + api_key_, request.dump(),
                                        {}, calls_);
  const auto reply = json::parse(body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("documentSentiment") ||
      !reply["documentSentiment"].contains("score") || !reply["documentSentiment"]["score"].is_number()) {
    throw std::runtime_error("Google NLP response lacks documentSentiment.score");
  }
  return SentimentResult(reply["documentSentiment"]["score"].get<double>(), true);
}

WatsonEmotionClient::WatsonEmotionClient(std::string api_key, std::string base_url, RetryPolicy retry,
                                         std::unique_ptr<HttpTransport> transport)
    : api_key_(std::move(api_key)),
      base_url_(std::move(base_url)),
      retry_(retry),
      transport_(transport ? std::move(transport) : make_http_transport()) {
  if (api_key_.empty()) throw ConfigError("IBM NLU client needs an API key (IBM_NLU_KEY)");
}

EmotionVector WatsonEmotionClient::analyze(std::string_view text) {
  const json request = {{"text", std::string(text)}, {"features", {{"emotion", json::object()}}}};
  const auto body = request_with_policy(*transport_, retry_, base_url_, "/v1/analyze?version=2022-04-07",
                                        request.dump(),
                                        {{"Authorization", "Basic " + base64("apikey:" + api_key_)}}, calls_);
  const auto reply = json::parse(body, nullptr, false);
  const json* scores = nullptr;
  if (!reply.is_discarded()) {
    const auto ptr = json::json_pointer("/emotion/document/emotion");
    if (reply.contains(ptr) && reply.at(ptr).is_object()) scores = &reply.at(ptr);
  }
  if (!scores) throw std::runtime_error("IBM NLU response lacks emotion.document.emotion");
  // Watson names sadness "sadness"; the file column is "sad".
  static constexpr std::array<std::string_view, EmotionVector::kWidth> kWatsonNames = {"anger", "disgust",
                                                                                     "sadness", "fear", "joy"};
  std::array<double, EmotionVector::kWidth> values{};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string name(kWatsonNames[i]);
    if (scores->contains(name) && (*scores)[name].is_number()) {
      values[i] = (*scores)[name].get<double>();
    } else {
      warn("IBM NLU response is missing emotion '" + name + "'; using 0.0");
    }
  }
  return EmotionVector::from_array(values).clamped(true);
}

// ---------------------------------------------------------------------------
// Cache

std::string content_key(std::string_view text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

json to_json(const CacheEntry& e) {
  json j = {{"key", e.key}, {"analyzer", e.analyzer_id}, {"timestamp", e.timestamp}};
  if (e.sentiment) j["sentiment_score"] = e.sentiment->score();
  if (e.emotions) j["emotions"] = e.emotions->as_array();
  return j;
}

CacheEntry entry_from_json(const json& j) {
  CacheEntry e;
  e.key = j.at("key").get<std::string>();
  e.analyzer_id = j.at("analyzer").get<std::string>();
  e.timestamp = j.at("timestamp").get<std::int64_t>();
  if (j.contains("sentiment_score")) e.sentiment = SentimentResult(j.at("sentiment_score").get<double>());
  if (j.contains("emotions")) {
    e.emotions = EmotionVector::from_array(j.at("emotions").get<std::array<double, EmotionVector::kWidth>>());
    if (!e.emotions->in_range()) throw std::out_of_range("cached emotion out of range");
  }
  if (e.key.size() != 64) throw std::invalid_argument("bad cache key");
  return e;
}

}  // namespace

AnalysisCache::AnalysisCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t row = 0;
  try {
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      merge(entry_from_json(json::parse(line)));
    }
  } catch (const std::exception& ex) {
    warn("analysis cache '" + path_.string() + "' is corrupt at line " + std::to_string(row) + " (" + ex.what() +
         "); rebuilding from scratch");
    entries_.clear();
    in.close();
    std::ofstream truncate(path_, std::ios::trunc);
  }
}

std::optional<CacheEntry> AnalysisCache::find(const std::string& key, const std::string& analyzer_id) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find({key, analyzer_id}); it != entries_.end()) return it->second;
  return std::nullopt;
}

void AnalysisCache::put(CacheEntry entry) {
  std::lock_guard lock(mutex_);
  if (!path_.empty()) append_to_file(entry);
  merge(std::move(entry));
}

void AnalysisCache::merge(CacheEntry entry) {
  auto k = std::make_pair(entry.key, entry.analyzer_id);
  auto [it, inserted] = entries_.try_emplace(std::move(k), entry);
  if (inserted) return;
  if (entry.sentiment) it->second.sentiment = entry.sentiment;
  if (entry.emotions) it->second.emotions = entry.emotions;
  it->second.timestamp = entry.timestamp;
}

std::size_t AnalysisCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void AnalysisCache::append_to_file(const CacheEntry& entry) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot write analysis cache '" + path_.string() + "'");
  out << to_json(entry).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Enrichment

PartialEnrichmentError::PartialEnrichmentError(std::vector<std::string> failed_ids,
                                               std::vector<SentimentalRecord> partial)
    : std::runtime_error("enrichment failed for " + std::to_string(failed_ids.size()) + " record(s)"),
      failed_ids_(std::move(failed_ids)),
      partial_(std::move(partial)) {}

std::vector<SentimentalRecord> enrich(const std::vector<ClaimRecord>& records, SentimentAnalyzer& sentiment,
                                      EmotionAnalyzer& emotions, AnalysisCache& cache,
                                      const EnrichOptions& options, EnrichStats* stats) {
  const auto remote_before = (sentiment.is_remote() ? sentiment.call_count() : 0) +
                             (emotions.is_remote() ? emotions.call_count() : 0);

  // Identical statements are analyzed once.
  std::vector<std::string> keys(records.size());
  std::vector<std::size_t> unique_of(records.size());
  std::vector<std::size_t> representatives;
  std::unordered_map<std::string, std::size_t> slot_of_key;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].statement.empty()) throw ValidationError("record '" + records[i].id + "' has an empty statement");
    if (!records[i].binary_label) throw ValidationError("record '" + records[i].id + "' is not binarized");
    keys[i] = content_key(records[i].statement);
    auto [it, fresh] = slot_of_key.emplace(keys[i], representatives.size());
    if (fresh) representatives.push_back(i);
    unique_of[i] = it->second;
  }

  struct Outcome {
    std::optional<SentimentResult> sentiment;
    std::optional<EmotionVector> emotions;
    std::string error;
  };
  std::vector<Outcome> outcomes(representatives.size());
  std::atomic<std::size_t> next{0}, hits{0}, fresh_count{0};
  CallSpacer sentiment_spacer(sentiment.is_remote() ? options.min_call_interval : std::chrono::milliseconds(0));
  CallSpacer emotion_spacer(emotions.is_remote() ? options.min_call_interval : std::chrono::milliseconds(0));
  std::mutex backend_mutex;  // local analyzers are not required to be thread-safe
  const std::string sentiment_id = sentiment.id();
  const std::string emotion_id = emotions.id();

  const auto now_seconds = [] {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };

  const auto worker = [&] {
    for (;;) {
      const auto u = next++;
      if (u >= representatives.size()) return;
      const auto& statement = records[representatives[u]].statement;
      const auto& key = keys[representatives[u]];
      auto& out = outcomes[u];
      try {
        if (auto hit = cache.find(key, sentiment_id); hit && hit->sentiment) {
          out.sentiment = hit->sentiment;
          ++hits;
        } else {
          sentiment_spacer.wait();
          SentimentResult result;
          if (sentiment.is_remote()) {
            result = analyze_sentiment(statement, sentiment);
          } else {
            std::lock_guard lock(backend_mutex);
            result = analyze_sentiment(statement, sentiment);
          }
          cache.put({key, sentiment_id, result, std::nullopt, now_seconds()});
          out.sentiment = result;
          ++fresh_count;
        }
        if (auto hit = cache.find(key, emotion_id); hit && hit->emotions) {
          out.emotions = hit->emotions;
          ++hits;
        } else {
          emotion_spacer.wait();
          EmotionVector result;
          if (emotions.is_remote()) {
            result = analyze_emotions(statement, emotions);
          } else {
            std::lock_guard lock(backend_mutex);
            result = analyze_emotions(statement, emotions);
          }
          cache.put({key, emotion_id, std::nullopt, result, now_seconds()});
          out.emotions = result;
          ++fresh_count;
        }
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };

  const auto threads = std::max<std::size_t>(1, std::min(options.parallelism, representatives.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<SentimentalRecord> enriched;
  std::vector<std::string> failed;
  enriched.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& o = outcomes[unique_of[i]];
    if (!o.sentiment || !o.emotions) {
      failed.push_back(records[i].id);
      continue;
    }
    enriched.push_back({records[i], *o.sentiment, *o.emotions});
  }

  if (stats) {
    stats->records = records.size();
    stats->cache_hits = hits.load();
    stats->fresh_analyses = fresh_count.load();
    stats->remote_calls = (sentiment.is_remote() ? sentiment.call_count() : 0) +
                          (emotions.is_remote() ? emotions.call_count() : 0) - remote_before;
  }
  if (!failed.empty()) throw PartialEnrichmentError(std::move(failed), std::move(enriched));
  return enriched;
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::string> enriched_columns() {
  std::vector<std::string> cols(kCanonicalColumns.begin(), kCanonicalColumns.end());
  cols.emplace_back("sentiment");
  cols.emplace_back("sentiment_score");
  for (auto c : EmotionVector::kColumns) cols.emplace_back(c);
  return cols;
}

void write_enriched(std::ostream& out, const std::vector<SentimentalRecord>& records) {
  const auto cols = enriched_columns();
  csv::write_row(out, cols);
  std::vector<bool> force(cols.size(), false);
  force[2] = true;
  for (const auto& rec : records) {
    const auto& r = rec.claim;
    if (!r.binary_label) throw ValidationError("record '" + r.id + "' is not binarized");
    const auto c = r.credit;
    std::vector<std::string> row = {r.id,
                                    std::to_string(to_index(*r.binary_label)),
                                    r.statement,
                                    r.subject,
                                    r.speaker,
                                    r.speaker_job,
                                    r.state_info,
                                    r.party_affiliation,
                                    std::to_string(c.barely_true),
                                    std::to_string(c.false_c),
                                    std::to_string(c.half_true),
                                    std::to_string(c.mostly_true),
                                    std::to_string(c.pants_on_fire),
                                    r.context,
                                    std::string(to_string(rec.sentiment.label())),
                                    format_shortest(rec.sentiment.score())};
    for (double e : rec.emotions.as_array()) row.push_back(format_fixed4(e));
    csv::write_row(out, row, force);
  }
}

std::vector<SentimentalRecord> load_precomputed(std::istream& in) {
  // Parse the claim columns through the canonical reader by buffering the
  // text once; the enrichment columns are read alongside.
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::istringstream claim_stream(text);
  auto claims = read_canonical(claim_stream);

  std::istringstream extra_stream(text);
  csv::Reader reader(extra_stream);
  auto header_row = reader.next();
  if (!header_row) return {};
  csv::Header header(std::move(*header_row));
  const auto score_col = header.find("sentiment_score");
  if (!score_col) throw ParseError(1, "missing column 'sentiment_score'");
  const auto label_col = header.find("sentiment");
  std::array<std::size_t, EmotionVector::kWidth> emotion_cols{};
  for (std::size_t i = 0; i < EmotionVector::kWidth; ++i) {
    auto c = EmotionVector::kColumns[i] == "sad" ? header.find_any({"sad", "sadness"})
                                                  : header.find(EmotionVector::kColumns[i]);
    if (!c) throw ParseError(1, "missing column '" + std::string(EmotionVector::kColumns[i]) + "'");
    emotion_cols[i] = *c;
  }

  std::vector<SentimentalRecord> records;
  records.reserve(claims.size());
  std::size_t next_claim = 0;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;
    const auto n = reader.row();
    const auto& cells = *row;
    const double score = parse_real(cells[*score_col], n, "sentiment_score");
    if (score < -1.0 || score > 1.0) {
      throw ValidationError("row " + std::to_string(n) + ": sentiment_score " + cells[*score_col] +
                            " outside [-1, 1]");
    }
    std::array<double, EmotionVector::kWidth> emo{};
    for (std::size_t i = 0; i < emo.size(); ++i) {
      emo[i] = parse_real(cells[emotion_cols[i]], n, EmotionVector::kColumns[i]);
      if (emo[i] < 0.0 || emo[i] > 1.0) {
        throw ValidationError("row " + std::to_string(n) + ": " + std::string(EmotionVector::kColumns[i]) + " " +
                              cells[emotion_cols[i]] + " outside [0, 1]");
      }
    }
    SentimentResult sentiment(score);
    if (label_col && !cells[*label_col].empty()) {
      std::string label = cells[*label_col];
      std::transform(label.begin(), label.end(), label.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      if (label != to_string(sentiment.label())) {
        warn("row " + std::to_string(n) + ": sentiment label '" + cells[*label_col] +
             "' disagrees with score; using the score");
      }
    }
    records.push_back({std::move(claims.at(next_claim++)), sentiment, EmotionVector::from_array(emo)});
  }
  return records;
}

std::vector<SentimentalRecord> load_precomputed_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open enriched corpus '" + path.string() + "'");
  return load_precomputed(in);
}

}  // namespace sliar
