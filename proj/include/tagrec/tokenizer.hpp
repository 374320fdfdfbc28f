#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tagrec {

using TokenId = std::int32_t;

enum class Truncation { head_only, tail_only };

std::string to_string(Truncation t);
Truncation truncation_from_string(const std::string& name);

// Fixed-length model input: [CLS] content... [SEP] PAD...
struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;  // 1 = real token, a prefix of the sequence

  std::size_t length() const noexcept { return ids.size(); }
  std::size_t real_length() const noexcept;
};

// Byte-level BPE. Ids 0..255 are raw bytes, 256..259 the special tokens and
// 260.. the learned merges in the order they were learned.
class Tokenizer {
 public:
  static constexpr TokenId kCls = 256;
  static constexpr TokenId kSep = 257;
  static constexpr TokenId kPad = 258;
  static constexpr TokenId kUnk = 259;
  static constexpr TokenId kFirstMerge = 260;
  static constexpr std::size_t kMinVocabSize = 260;

  Tokenizer();
  explicit Tokenizer(std::vector<std::pair<TokenId, TokenId>> merges);

  std::size_t vocab_size() const noexcept { return token_bytes_.size(); }
  const std::vector<std::pair<TokenId, TokenId>>& merges() const noexcept { return merges_; }

  // Subword ids of `text`, no special tokens.
  std::vector<TokenId> tokenize(std::string_view text) const;

  TokenSequence encode(std::string_view text, std::size_t max_len,
                       Truncation strategy = Truncation::head_only) const;

  // Concatenated bytes of the ids. Special tokens are skipped; ids outside
  // the vocabulary decode as U+FFFD.
  std::string decode(const std::vector<TokenId>& ids) const;

  const std::string& token_bytes(TokenId id) const { return token_bytes_.at(static_cast<std::size_t>(id)); }

  std::string to_json() const;
  static Tokenizer from_json(const std::string& text);
  void save(const std::string& path) const;
  static Tokenizer load(const std::string& path);
  std::uint64_t content_hash() const;

 private:
  std::vector<std::pair<TokenId, TokenId>> merges_;
  std::vector<std::string> token_bytes_;
  std::unordered_map<std::uint64_t, TokenId> merge_rank_;  // (left,right) -> merge index
};

// Splits text into the pieces merges may not cross: an optional leading
// space plus a run of word bytes, a run of other whitespace, or a single
// punctuation byte. Pieces are capped at 64 bytes.
std::vector<std::string_view> pretokenize(std::string_view text);

// Greedy BPE: repeatedly merge the most frequent adjacent pair (ties by the
// byte strings of the pair), stopping at `vocab_size` or when no pair occurs
// at least twice.
Tokenizer train_tokenizer(const std::vector<std::string>& corpus_text, std::size_t vocab_size);

}  // namespace tagrec
