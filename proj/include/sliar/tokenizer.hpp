#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace sliar {

using TokenId = std::int32_t;

/// Lowercases ASCII and splits on whitespace and punctuation; a literal
/// "[SEP]" survives as one piece.
std::vector<std::string> basic_pieces(std::string_view text);

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  /// [CLS] + at most max_tokens - 2 pieces + [SEP]. Requires max_tokens > 2.
  std::vector<TokenId> encode(std::string_view text, std::size_t max_tokens) const;

  virtual std::size_t vocab_size() const = 0;
  virtual TokenId cls_id() const = 0;
  virtual TokenId sep_id() const = 0;
  /// Token ids for one basic piece (WordPiece may split a word).
  virtual void append_ids(const std::string& piece, std::vector<TokenId>& out) const = 0;

  /// Self-contained description, enough to rebuild the tokenizer.
  virtual nlohmann::json to_json() const = 0;
};

/// Desk-scale tokenizer: every word lands in one of `buckets` hashed symbols
/// (FNV-1a, stable across runs). Ids: 0 [PAD], 1 [UNK], 2 [CLS], 3 [SEP], then buckets.
class HashTokenizer final : public Tokenizer {
 public:
  explicit HashTokenizer(std::size_t buckets = 8);

  std::size_t vocab_size() const override { return 4 + buckets_; }
  TokenId cls_id() const override { return 2; }
  TokenId sep_id() const override { return 3; }
  void append_ids(const std::string& piece, std::vector<TokenId>& out) const override;
  nlohmann::json to_json() const override;

  std::size_t buckets() const { return buckets_; }

 private:
  std::size_t buckets_;
};

/// Greedy longest-match WordPiece over a BERT vocabulary (one token per line).
class WordPieceTokenizer final : public Tokenizer {
 public:
  explicit WordPieceTokenizer(std::vector<std::string> vocab);
  static WordPieceTokenizer load(const std::filesystem::path& vocab_txt);

  std::size_t vocab_size() const override { return vocab_.size(); }
  TokenId cls_id() const override { return cls_; }
  TokenId sep_id() const override { return sep_; }
  void append_ids(const std::string& piece, std::vector<TokenId>& out) const override;
  nlohmann::json to_json() const override;

 private:
  TokenId require(const std::string& token) const;

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> ids_;
  TokenId unk_ = 0, cls_ = 0, sep_ = 0;
};

std::shared_ptr<const Tokenizer> tokenizer_from_json(const nlohmann::json& j);

}  // namespace sliar
