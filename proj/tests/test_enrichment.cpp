#include <doctest.h>

// Eigen before httplib: <resolv.h> defines a _res macro.
#include "sliar/enrichment.hpp"
#include "sliar/errors.hpp"
#include "support.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

using namespace sliar;
using nlohmann::json;

namespace {

/// Local HTTP server standing in for the remote services.
class MockServer {
 public:
  MockServer() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockServer() {
    server.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  httplib::Server server;

 private:
  int port_ = 0;
  std::thread thread_;
};

RetryPolicy fast_retry() {
  RetryPolicy p;
  p.initial_backoff = std::chrono::milliseconds(1);
  p.timeout = std::chrono::milliseconds(2000);
  return p;
}

std::shared_ptr<const Lexicon> bundled_lexicon() {
  return std::make_shared<const Lexicon>(Lexicon::load(SLIAR_LEXICON));
}

Lexicon small_lexicon() {
  std::istringstream in(
      "# version: t1\n"
      "good\t1.0\t0\t0\t0\t0\t1\n"
      "awful\t-1.0\t1\t1\t0\t0\t0\n"
      "scary\t-0.5\t0\t0\t0\t1\t0\n");
  return Lexicon::parse(in);
}

// Counts analyses; results depend only on the text length.
class CountingSentiment final : public SentimentAnalyzer {
 public:
  std::string id() const override { return "counting"; }
  SentimentResult analyze(std::string_view text) override {
    ++calls;
    return SentimentResult(text.size() % 2 ? 0.5 : -0.5);
  }
  bool is_remote() const override { return true; }
  std::size_t call_count() const override { return calls.load(); }
  std::atomic<std::size_t> calls{0};
};

class CountingEmotion final : public EmotionAnalyzer {
 public:
  std::string id() const override { return "counting"; }
  EmotionVector analyze(std::string_view text) override {
    ++calls;
    if (fail_on && text == *fail_on) throw TransportError("down", 4, std::chrono::milliseconds(8));
    return EmotionVector{0.1, 0.2, 0.3, 0.4, static_cast<double>(text.size() % 10) / 10.0};
  }
  bool is_remote() const override { return true; }
  std::size_t call_count() const override { return calls.load(); }
  std::atomic<std::size_t> calls{0};
  std::optional<std::string> fail_on;
};

std::vector<ClaimRecord> claims(std::initializer_list<std::string> statements) {
  std::vector<ClaimRecord> out;
  int i = 0;
  for (const auto& s : statements) {
    ClaimRecord r;
    r.id = "c" + std::to_string(i++);
    r.statement = s;
    r.binary_label = BinaryLabel::True;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("enrichment") {

TEST_CASE("sentiment label is POSITIVE iff score > 0") {
  CHECK(SentimentResult(-0.7).label() == SentimentLabel::Negative);
  CHECK(SentimentResult(0.0).label() == SentimentLabel::Negative);
  CHECK(SentimentResult(1e-9).label() == SentimentLabel::Positive);
  CHECK(SentimentResult(3.0).score() == 1.0);
  CHECK(SentimentResult(-3.0).score() == -1.0);
  for (int i = -20; i <= 20; ++i) {
    const SentimentResult r(i / 10.0);
    CHECK((r.score() > 0) == (r.label() == SentimentLabel::Positive));
    CHECK(r.score() >= -1.0);
    CHECK(r.score() <= 1.0);
  }
}

TEST_CASE("emotion clamping warns per component") {
  testing::WarningCapture warnings;
  const auto e = EmotionVector{0.1, -0.2, 0.5, 0.0, 1.7}.clamped(true);
  CHECK(e == EmotionVector{0.1, 0.0, 0.5, 0.0, 1.0});
  CHECK(warnings.messages.size() == 2);
  CHECK(e.in_range());
}

TEST_CASE("analyze entry points reject empty text") {
  auto lex = bundled_lexicon();
  LexiconSentimentAnalyzer s(lex);
  LexiconEmotionAnalyzer e(lex);
  CHECK_THROWS_AS(analyze_sentiment("", s), ValidationError);
  CHECK_THROWS_AS(analyze_emotions("", e), ValidationError);
}

TEST_CASE("local analyzer follows the lexicon formulas") {
  const auto lex = small_lexicon();
  CHECK(lex.version == "t1");
  // 4 words: good(+1) awful(-1) scary(-0.5) plain
  const auto s = lexicon_sentiment("Good, awful and scary!", lex);
  CHECK(s.score() == doctest::Approx(std::tanh(-0.5 / 4.0)));
  const auto e = lexicon_emotions("Good, awful and scary!", lex);
  CHECK(e.anger == doctest::Approx(0.25));
  CHECK(e.disgust == doctest::Approx(0.25));
  CHECK(e.sadness == 0.0);
  CHECK(e.fear == doctest::Approx(0.25));
  CHECK(e.joy == doctest::Approx(0.25));

  SUBCASE("empty lexicon gives all-zero emotions") {
    Lexicon empty;
    CHECK(lexicon_emotions("anything at all", empty) == EmotionVector{});
    CHECK(lexicon_sentiment("anything at all", empty).score() == 0.0);
  }
  SUBCASE("repeated calls are identical") {
    LexiconSentimentAnalyzer a(bundled_lexicon());
    const auto first = analyze_sentiment("good good good", a);
    for (int i = 0; i < 100; ++i) CHECK(analyze_sentiment("good good good", a) == first);
    CHECK(first.label() == SentimentLabel::Positive);
    CHECK(a.call_count() == 101);
  }
  SUBCASE("lexicon parse errors carry the line") {
    std::istringstream bad("# version: x\ngood\t1.0\t0\t0\t0\t0\n");
    CHECK_THROWS_AS(Lexicon::parse(bad), ParseError);
  }
}

TEST_CASE("bundled lexicon is versioned and non-trivial") {
  const auto lex = bundled_lexicon();
  CHECK(lex->version == "1");
  CHECK(lex->words.size() >= 150);
  LexiconEmotionAnalyzer e(lex);
  CHECK(analyze_emotions(testing::kTable1Statement, e).in_range());
}

TEST_CASE("content key is SHA-256 of the statement bytes") {
  CHECK(content_key("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(content_key("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(content_key("abc ") != content_key("abc"));
}

TEST_CASE("Google client parses the score and clamps out-of-range values") {
  MockServer mock;
  std::atomic<int> hits{0};
  std::string seen_key, seen_body;
  double reply_score = -0.7;
  mock.server.Post("/v1/documents:analyzeSentiment", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    seen_key = req.get_param_value("key");
    seen_body = req.body;
    res.set_content(json{{"documentSentiment", {{"score", reply_score}, {"magnitude", 0.7}}}}.dump(),
                    "application/json");
  });
  GoogleSentimentClient client("secret-key", mock.url(), fast_retry());
  const auto r = analyze_sentiment(testing::kTable1Statement, client);
  CHECK(r.score() == doctest::Approx(-0.7));
  CHECK(r.label() == SentimentLabel::Negative);
  CHECK(seen_key == "secret-key");
  CHECK(json::parse(seen_body)["document"]["content"] == testing::kTable1Statement);
  CHECK(client.call_count() == 1);

  testing::WarningCapture warnings;
  reply_score = 1.5;
  CHECK(client.analyze("x").score() == 1.0);
  CHECK_FALSE(warnings.messages.empty());
}

TEST_CASE("Watson client maps emotions, fills missing ones and clamps") {
  MockServer mock;
  std::string auth;
  json emotion = {{"anger", 0.1353}, {"disgust", 0.8253}, {"sadness", 0.1419}, {"fear", 0.0157}, {"joy", 0.0236}};
  mock.server.Post("/v1/analyze", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    CHECK(req.get_param_value("version") == "2022-04-07");
    res.set_content(json{{"emotion", {{"document", {{"emotion", emotion}}}}}}.dump(), "application/json");
  });
  WatsonEmotionClient client("k", mock.url(), fast_retry());
  const auto e = analyze_emotions(testing::kTable1Statement, client);
  CHECK(e == EmotionVector{0.1353, 0.8253, 0.1419, 0.0157, 0.0236});
  CHECK(auth == "Basic YXBpa2V5Oms=");  // base64("apikey:k")

  testing::WarningCapture warnings;
  emotion = {{"anger", 0.2}, {"disgust", 0.1}, {"fear", 0.0}, {"joy", 1.7}};
  const auto clamped = client.analyze("x");
  CHECK(clamped.sadness == 0.0);
  CHECK(clamped.joy == 1.0);
  CHECK(warnings.contains("sadness"));
  CHECK(warnings.contains("joy"));
}

TEST_CASE("remote clients retry 5xx and 429, not 4xx") {
  MockServer mock;
  std::atomic<int> hits{0};
  int fail_first = 2;
  int fail_status = 503;
  mock.server.Post("/v1/documents:analyzeSentiment", [&](const httplib::Request&, httplib::Response& res) {
    if (hits++ < fail_first) {
      res.status = fail_status;
      return;
    }
    res.set_content(R"({"documentSentiment":{"score":0.25}})", "application/json");
  });

  SUBCASE("recovers after transient failures") {
    GoogleSentimentClient client("k", mock.url(), fast_retry());
    CHECK(client.analyze("x").score() == 0.25);
    CHECK(hits == 3);
    CHECK(client.call_count() == 3);
  }
  SUBCASE("429 is retried") {
    fail_status = 429;
    GoogleSentimentClient client("k", mock.url(), fast_retry());
    CHECK(client.analyze("x").score() == 0.25);
  }
  SUBCASE("gives up after three retries") {
    fail_first = 100;
    GoogleSentimentClient client("k", mock.url(), fast_retry());
    try {
      client.analyze("x");
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      CHECK(e.attempts() == 4);
      CHECK(e.next_backoff() == std::chrono::milliseconds(8));
    }
    CHECK(hits == 4);
  }
  SUBCASE("client errors fail immediately") {
    fail_status = 403;
    GoogleSentimentClient client("k", mock.url(), fast_retry());
    CHECK_THROWS_AS(client.analyze("x"), std::runtime_error);
    CHECK(hits == 1);
  }
}

TEST_CASE("unreachable endpoint surfaces as TransportError") {
  RetryPolicy p = fast_retry();
  p.max_retries = 1;
  p.timeout = std::chrono::milliseconds(200);
  GoogleSentimentClient client("k", "http://127.0.0.1:1", p);
  CHECK_THROWS_AS(client.analyze("x"), TransportError);
}

TEST_CASE("with_retries backs off exponentially from the initial delay") {
  std::vector<std::chrono::milliseconds> sleeps;
  int attempts = 0;
  RetryPolicy p;
  CHECK_THROWS_AS(with_retries(
                      p, [&]() -> std::string { ++attempts; throw RetryableError("nope"); },
                      [&](std::chrono::milliseconds d) { sleeps.push_back(d); }),
                  TransportError);
  CHECK(attempts == 4);
  REQUIRE(sleeps.size() == 3);
  CHECK(sleeps[0] == std::chrono::milliseconds(1000));
  CHECK(sleeps[1] == std::chrono::milliseconds(2000));
  CHECK(sleeps[2] == std::chrono::milliseconds(4000));
  CHECK(p.timeout == std::chrono::milliseconds(30000));
}

TEST_CASE("clients refuse empty credentials") {
  CHECK_THROWS_AS(GoogleSentimentClient(""), ConfigError);
  CHECK_THROWS_AS(WatsonEmotionClient(""), ConfigError);
}

TEST_CASE("enrich dedupes by content, keeps order and uses the cache") {
  const auto dir = testing::scratch_dir("enrich_cache");
  const auto cache_path = dir / "cache.jsonl";
  const auto records = claims({"same text", "other text", "same text"});
  CountingSentiment s;
  CountingEmotion e;
  std::vector<SentimentalRecord> first;
  {
    AnalysisCache cache(cache_path);
    EnrichStats stats;
    first = enrich(records, s, e, cache, {}, &stats);
    CHECK(stats.records == 3);
    CHECK(stats.remote_calls == 4);
  }
  CHECK(s.calls == 2);
  CHECK(e.calls == 2);
  REQUIRE(first.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(first[i].claim.id == records[i].id);
  CHECK(first[0].sentiment == first[2].sentiment);

  AnalysisCache warm(cache_path);
  EnrichStats stats;
  const auto second = enrich(records, s, e, warm, {}, &stats);
  CHECK(stats.remote_calls == 0);
  CHECK(s.calls == 2);
  CHECK(e.calls == 2);
  CHECK(second == first);

  std::stringstream a, b;
  write_enriched(a, first);
  write_enriched(b, second);
  CHECK(a.str() == b.str());
}

TEST_CASE("parallel enrichment matches sequential output order") {
  std::vector<ClaimRecord> records;
  for (int i = 0; i < 60; ++i) {
    ClaimRecord r;
    r.id = std::to_string(i);
    r.statement = "statement number " + std::to_string(i % 40) + std::string(static_cast<std::size_t>(i % 7), '!');
    r.binary_label = BinaryLabel::False;
    records.push_back(r);
  }
  CountingSentiment s1, s2;
  CountingEmotion e1, e2;
  AnalysisCache c1, c2;
  const auto sequential = enrich(records, s1, e1, c1);
  EnrichOptions options;
  options.parallelism = 4;
  options.min_call_interval = std::chrono::milliseconds(1);
  const auto parallel = enrich(records, s2, e2, c2, options);
  CHECK(parallel == sequential);
  CHECK(s2.calls == s1.calls);
}

TEST_CASE("failed records are reported with the partial result") {
  CountingSentiment s;
  CountingEmotion e;
  e.fail_on = "bad";
  AnalysisCache cache;
  try {
    enrich(claims({"fine", "bad", "also fine"}), s, e, cache);
    FAIL("expected PartialEnrichmentError");
  } catch (const PartialEnrichmentError& err) {
    CHECK(err.failed_ids() == std::vector<std::string>{"c1"});
    REQUIRE(err.partial().size() == 2);
    CHECK(err.partial()[0].claim.id == "c0");
    CHECK(err.partial()[1].claim.id == "c2");
  }
}

TEST_CASE("corrupt cache is rebuilt with a warning") {
  const auto dir = testing::scratch_dir("corrupt_cache");
  const auto path = dir / "cache.jsonl";
  {
    std::ofstream out(path);
    out << "{\"analyzer\":\"x\",\"key\":\"k\",\"sentiment_score\":0.5,\"timestamp\":1}\n{not json\n";
  }
  testing::WarningCapture warnings;
  AnalysisCache cache(path);
  CHECK(cache.size() == 0);
  CHECK(warnings.contains("corrupt"));
  const auto key = content_key("some text");
  cache.put({key, "x", SentimentResult(0.25), std::nullopt, 1});
  AnalysisCache reread(path);
  CHECK(reread.size() == 1);
  CHECK(reread.find(key, "x")->sentiment->score() == 0.25);
}

TEST_CASE("cache keeps sentiment and emotions for one analyzer id") {
  AnalysisCache cache;
  cache.put({"k", "same", SentimentResult(0.5), std::nullopt, 1});
  cache.put({"k", "same", std::nullopt, EmotionVector{0.1, 0.2, 0.3, 0.4, 0.5}, 2});
  const auto hit = cache.find("k", "same");
  REQUIRE(hit.has_value());
  CHECK(hit->sentiment.has_value());
  CHECK(hit->emotions.has_value());
  CHECK_FALSE(cache.find("k", "other").has_value());
}

TEST_CASE("precomputed loader reads the sample record") {
  const auto records = load_precomputed_file(testing::fixture("table1_enriched.csv"));
  REQUIRE(records.size() == 1);
  const auto expected = testing::table1_record();
  CHECK(records[0] == expected);
  CHECK(records[0].sentiment.score() == -0.7);
  CHECK(records[0].sentiment.label() == SentimentLabel::Negative);
}

TEST_CASE("precomputed loader validates ranges with row numbers") {
  std::stringstream good;
  write_enriched(good, {testing::table1_record()});
  const std::string text = good.str();

  SUBCASE("emotion 1.3") {
    std::string bad = text;
    bad.replace(bad.find("0.8253"), 6, "1.3");
    std::istringstream in(bad);
    try {
      load_precomputed(in);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  SUBCASE("sentiment -1.5") {
    std::string bad = text;
    bad.replace(bad.find(",-0.7,"), 6, ",-1.5,");
    std::istringstream in(bad);
    CHECK_THROWS_AS(load_precomputed(in), ValidationError);
  }
  SUBCASE("header only") {
    std::istringstream in(text.substr(0, text.find('\n') + 1));
    CHECK(load_precomputed(in).empty());
  }
  SUBCASE("sadness column alias") {
    std::string renamed = text;
    renamed.replace(renamed.find(",sad,"), 5, ",sadness,");
    std::istringstream in(renamed);
    CHECK(load_precomputed(in).at(0).emotions.sadness == 0.1419);
  }
}

TEST_CASE("load_precomputed after write_enriched is the identity") {
  const auto records = testing::synthetic_enriched(80, 17);
  std::stringstream buffer;
  write_enriched(buffer, records);
  const std::string first = buffer.str();
  const auto back = load_precomputed(buffer);
  CHECK(back == records);
  std::stringstream again;
  write_enriched(again, back);
  CHECK(again.str() == first);
}

}  // TEST_SUITE
