#include "sliar/tokenizer.hpp"

#include <cctype>
#include <fstream>

#include "sliar/errors.hpp"

namespace sliar {
namespace {

constexpr std::string_view kSepLiteral = "[SEP]";

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::vector<std::string> basic_pieces(std::string_view text) {
  std::vector<std::string> pieces;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) pieces.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (text.substr(i, kSepLiteral.size()) == kSepLiteral) {
      flush();
      pieces.emplace_back(kSepLiteral);
      i += kSepLiteral.size() - 1;
    } else if (std::isspace(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      pieces.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  flush();
  return pieces;
}

std::vector<TokenId> Tokenizer::encode(std::string_view text, std::size_t max_tokens) const {
  if (max_tokens <= 2) throw ConfigError("max_tokens must leave room for [CLS] and [SEP]");
  std::vector<TokenId> ids{cls_id()};
  const std::size_t limit = max_tokens - 1;
  std::vector<TokenId> piece_ids;
  for (const auto& piece : basic_pieces(text)) {
    piece_ids.clear();
    if (piece == kSepLiteral) {
      piece_ids.push_back(sep_id());
    } else {
      append_ids(piece, piece_ids);
    }
    for (auto id : piece_ids) {
      if (ids.size() == limit) break;
      ids.push_back(id);
    }
    if (ids.size() == limit) break;
  }
  ids.push_back(sep_id());
  return ids;
}

HashTokenizer::HashTokenizer(std::size_t buckets) : buckets_(buckets) {
  if (buckets == 0) throw ConfigError("hash tokenizer needs at least one bucket");
}

void HashTokenizer::append_ids(const std::string& piece, std::vector<TokenId>& out) const {
  out.push_back(static_cast<TokenId>(4 + fnv1a(piece) % buckets_));
}

nlohmann::json HashTokenizer::to_json() const { return {{"kind", "hash"}, {"buckets", buckets_}}; }

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) ids_.emplace(vocab_[i], static_cast<TokenId>(i));
  unk_ = require("[UNK]");
  cls_ = require("[CLS]");
  sep_ = require("[SEP]");
}

WordPieceTokenizer WordPieceTokenizer::load(const std::filesystem::path& vocab_txt) {
  std::ifstream in(vocab_txt);
  if (!in) throw LoadError("cannot open vocabulary '" + vocab_txt.string() + "'");
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return WordPieceTokenizer(std::move(vocab));
}

TokenId WordPieceTokenizer::require(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) throw LoadError("vocabulary lacks " + token);
  return it->second;
}

void WordPieceTokenizer::append_ids(const std::string& piece, std::vector<TokenId>& out) const {
  constexpr std::size_t kMaxChars = 100;
  if (piece.size() > kMaxChars) {
    out.push_back(unk_);
    return;
  }
  std::vector<TokenId> sub;
  std::size_t start = 0;
  while (start < piece.size()) {
    std::size_t end = piece.size();
    TokenId found = -1;
    while (start < end) {
      std::string candidate = piece.substr(start, end - start);
      if (start > 0) candidate = "##" + candidate;
      if (auto it = ids_.find(candidate); it != ids_.end()) {
        found = it->second;
        break;
      }
      --end;
    }
    if (found < 0) {
      out.push_back(unk_);
      return;
    }
    sub.push_back(found);
    start = end;
  }
  out.insert(out.end(), sub.begin(), sub.end());
}

nlohmann::json WordPieceTokenizer::to_json() const { return {{"kind", "wordpiece"}, {"vocab", vocab_}}; }

std::shared_ptr<const Tokenizer> tokenizer_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "hash") return std::make_shared<HashTokenizer>(j.at("buckets").get<std::size_t>());
  if (kind == "wordpiece") return std::make_shared<WordPieceTokenizer>(j.at("vocab").get<std::vector<std::string>>());
  throw LoadError("unknown tokenizer kind '" + kind + "'");
}

}  // namespace sliar
