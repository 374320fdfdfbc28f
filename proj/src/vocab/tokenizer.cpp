#include "tagrec/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tagrec/errors.hpp"
#include "tagrec/tag_vocab.hpp"

namespace tagrec {
namespace {

constexpr std::size_t kMaxPiece = 64;

std::uint64_t pair_key(TokenId a, TokenId b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         c >= 0x80;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Replaces every non-overlapping (a, b) in `syms` with `merged`, left to right.
void merge_pair(std::vector<TokenId>& syms, TokenId a, TokenId b, TokenId merged) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i + 1 < syms.size() && syms[i] == a && syms[i + 1] == b) {
      syms[out++] = merged;
      ++i;
    } else {
      syms[out++] = syms[i];
    }
  }
  syms.resize(out);
}

}  // namespace

std::string to_string(Truncation t) { return t == Truncation::head_only ? "head_only" : "tail_only"; }

Truncation truncation_from_string(const std::string& name) {
  if (name == "head_only") return Truncation::head_only;
  if (name == "tail_only") return Truncation::tail_only;
  throw ConfigError("unknown truncation strategy '" + name + "'");
}

std::size_t TokenSequence::real_length() const noexcept {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> pieces;
  auto emit = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; p += kMaxPiece) {
      pieces.push_back(text.substr(p, std::min(kMaxPiece, end - p)));
    }
  };
  const auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const unsigned char c = at(i);
    std::size_t j = i + 1;
    if (c == ' ' && j < n && is_word_byte(at(j))) {
      while (j < n && is_word_byte(at(j))) ++j;
    } else if (is_word_byte(c)) {
      while (j < n && is_word_byte(at(j))) ++j;
    } else if (is_space(c)) {
      while (j < n && is_space(at(j))) ++j;
      // Leave a final ' ' to lead the following word.
      if (j < n && j - i > 1 && at(j - 1) == ' ' && is_word_byte(at(j))) --j;
    }
    emit(i, j);
    i = j;
  }
  return pieces;
}

Tokenizer::Tokenizer() : Tokenizer(std::vector<std::pair<TokenId, TokenId>>{}) {}

Tokenizer::Tokenizer(std::vector<std::pair<TokenId, TokenId>> merges) : merges_(std::move(merges)) {
  token_bytes_.reserve(kMinVocabSize + merges_.size());
  for (int b = 0; b < 256; ++b) token_bytes_.emplace_back(1, static_cast<char>(b));
  for (int s = 0; s < 4; ++s) token_bytes_.emplace_back();
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto [a, b] = merges_[r];
    const auto known = [&](TokenId id) {
      return id >= 0 && static_cast<std::size_t>(id) < token_bytes_.size() &&
             (id < kCls || id >= kFirstMerge);
    };
    if (!known(a) || !known(b)) {
      throw ArtifactError("tokenizer: merge " + std::to_string(r) + " references an unknown id");
    }
    if (!merge_rank_.emplace(pair_key(a, b), static_cast<TokenId>(r)).second) {
      throw ArtifactError("tokenizer: duplicate merge " + std::to_string(r));
    }
    token_bytes_.push_back(token_bytes_[static_cast<std::size_t>(a)] +
                           token_bytes_[static_cast<std::size_t>(b)]);
  }
}

std::vector<TokenId> Tokenizer::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  std::vector<TokenId> syms;
  for (const std::string_view piece : pretokenize(text)) {
    syms.assign(piece.size(), 0);
    for (std::size_t i = 0; i < piece.size(); ++i) syms[i] = static_cast<unsigned char>(piece[i]);
    while (syms.size() > 1) {
      TokenId best = std::numeric_limits<TokenId>::max();
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const auto it = merge_rank_.find(pair_key(syms[i], syms[i + 1]));
        if (it != merge_rank_.end()) best = std::min(best, it->second);
      }
      if (best == std::numeric_limits<TokenId>::max()) break;
      const auto [a, b] = merges_[static_cast<std::size_t>(best)];
      merge_pair(syms, a, b, kFirstMerge + best);
    }
    out.insert(out.end(), syms.begin(), syms.end());
  }
  return out;
}

TokenSequence Tokenizer::encode(std::string_view text, std::size_t max_len,
                                Truncation strategy) const {
  if (max_len < 2) throw UsageError("encode: max_len must be >= 2");
  const std::vector<TokenId> tokens = tokenize(text);
  const std::size_t keep = std::min(tokens.size(), max_len - 2);
  const auto first = strategy == Truncation::head_only
                         ? tokens.begin()
                         : tokens.end() - static_cast<std::ptrdiff_t>(keep);
  TokenSequence seq;
  seq.ids.assign(max_len, kPad);
  seq.mask.assign(max_len, 0);
  seq.ids[0] = kCls;
  std::copy(first, first + static_cast<std::ptrdiff_t>(keep), seq.ids.begin() + 1);
  seq.ids[keep + 1] = kSep;
  std::fill(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(keep + 2), 1);
  return seq;
}

std::string Tokenizer::decode(const std::vector<TokenId>& ids) const {
  std::string out;
  for (const TokenId id : ids) {
    if (id == kCls || id == kSep || id == kPad) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= token_bytes_.size() || id == kUnk) {
      out += "\xEF\xBF\xBD";
      continue;
    }
    out += token_bytes_[static_cast<std::size_t>(id)];
  }
  return out;
}

std::string Tokenizer::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "tagrec-bpe";
  j["version"] = 1;
  j["alphabet"] = {{"kind", "bytes"}, {"size", 256}};
  j["special"] = {{"cls", kCls}, {"sep", kSep}, {"pad", kPad}, {"unk", kUnk}};
  auto merges = nlohmann::ordered_json::array();
  for (const auto& [a, b] : merges_) merges.push_back({a, b});
  j["merges"] = std::move(merges);
  return j.dump();
}

Tokenizer Tokenizer::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "tagrec-bpe") throw ArtifactError("not a tokenizer file");
    if (j.at("version") != 1) throw ArtifactError("unsupported tokenizer version");
    const auto& special = j.at("special");
    if (special.at("cls") != kCls || special.at("sep") != kSep || special.at("pad") != kPad ||
        special.at("unk") != kUnk || j.at("alphabet").at("size") != 256) {
      throw ArtifactError("tokenizer: unexpected special-token layout");
    }
    std::vector<std::pair<TokenId, TokenId>> merges;
    for (const auto& m : j.at("merges")) {
      merges.emplace_back(m.at(0).get<TokenId>(), m.at(1).get<TokenId>());
    }
    return Tokenizer(std::move(merges));
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("tokenizer: ") + e.what());
  }
}

void Tokenizer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path);
  out << to_json() << '\n';
}

Tokenizer Tokenizer::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open tokenizer " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::uint64_t Tokenizer::content_hash() const { return fnv1a64(to_json()); }

Tokenizer train_tokenizer(const std::vector<std::string>& corpus_text, std::size_t vocab_size) {
  if (vocab_size < Tokenizer::kMinVocabSize) {
    throw ConfigError("vocab_size must be at least " + std::to_string(Tokenizer::kMinVocabSize));
  }
  std::map<std::string_view, std::int64_t> piece_counts;
  for (const auto& text : corpus_text) {
    for (const auto piece : pretokenize(text)) ++piece_counts[piece];
  }
  if (piece_counts.empty()) throw UsageError("train_tokenizer: empty corpus text");

  struct Word {
    std::vector<TokenId> syms;
    std::int64_t freq;
  };
  std::vector<Word> words;
  words.reserve(piece_counts.size());
  for (const auto& [piece, count] : piece_counts) {
    Word w{{}, count};
    for (unsigned char c : piece) w.syms.push_back(c);
    words.push_back(std::move(w));
  }

  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where;
  for (std::uint32_t w = 0; w < words.size(); ++w) {
    const auto& syms = words[w].syms;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const auto key = pair_key(syms[i], syms[i + 1]);
      counts[key] += words[w].freq;
      where[key].push_back(w);
    }
  }

  std::vector<std::string> bytes;
  for (int b = 0; b < 256; ++b) bytes.emplace_back(1, static_cast<char>(b));
  bytes.resize(Tokenizer::kMinVocabSize);
  std::vector<std::pair<TokenId, TokenId>> merges;

  while (bytes.size() < vocab_size) {
    std::uint64_t best_key = 0;
    std::int64_t best_count = 1;
    for (const auto& [key, count] : counts) {
      if (count < best_count) continue;
      if (count == best_count) {
        if (best_count < 2) continue;
        const auto a = static_cast<std::size_t>(key >> 32), b = static_cast<std::size_t>(key & 0xffffffffu);
        const auto ba = static_cast<std::size_t>(best_key >> 32),
                   bb = static_cast<std::size_t>(best_key & 0xffffffffu);
        if (std::tie(bytes[a], bytes[b]) >= std::tie(bytes[ba], bytes[bb])) continue;
      }
      best_key = key;
      best_count = count;
    }
    if (best_count < 2) break;

    const auto left = static_cast<TokenId>(best_key >> 32);
    const auto right = static_cast<TokenId>(best_key & 0xffffffffu);
    const auto merged = static_cast<TokenId>(bytes.size());
    bytes.push_back(bytes[static_cast<std::size_t>(left)] + bytes[static_cast<std::size_t>(right)]);
    merges.emplace_back(left, right);

    std::vector<std::uint32_t> affected = std::move(where[best_key]);
    where.erase(best_key);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    for (const std::uint32_t w : affected) {
      auto& syms = words[w].syms;
      const std::int64_t freq = words[w].freq;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const auto key = pair_key(syms[i], syms[i + 1]);
        if ((counts[key] -= freq) == 0) counts.erase(key);
      }
      merge_pair(syms, left, right, merged);
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const auto key = pair_key(syms[i], syms[i + 1]);
        counts[key] += freq;
        if (syms[i] == merged || syms[i + 1] == merged) where[key].push_back(w);
      }
    }
  }
  return Tokenizer(std::move(merges));
}

}  // namespace tagrec
