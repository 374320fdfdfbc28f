#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <stdexcept>

namespace tagrec::testing {
namespace {

constexpr std::array<const char*, 40> kTags = {
    "python", "java", "c++", "javascript", "c#", "php", "android", "jquery", "html", "css",
    "sql", "ios", "mysql", "r", "node.js", "arrays", "c", "json", "swift", "django",
    "pandas", "excel", "angular", "regex", "ruby", "linux", "spring", "reactjs", "git", "bash",
    "docker", "numpy", "typescript", "go", "rust", "kotlin", "scala", "haskell", "perl", "lua"};

constexpr std::array<const char*, 40> kKeywords = {
    "zorblax", "quindle", "frobnic", "marplex", "tovundo", "glimber", "sprock", "vantrel",
    "dobrick", "pelquin", "yurnath", "klempto", "bazzimo", "trevolk", "ondrizz", "hapsule",
    "wumbrix", "celdora", "fintaro", "gozzlep", "rimbault", "skovenn", "plinthar", "ustrova",
    "mezzrik", "dravolt", "quazzle", "nimbrot", "jestran", "oxliver", "pommelt", "traxxel",
    "vireola", "blunket", "corvesh", "ziggurn", "halvint", "sordane", "kwibble", "lothmar"};

constexpr std::array<const char*, 24> kFiller = {
    "the", "value", "when", "after", "error", "works", "returns", "list", "but", "never",
    "method", "object", "loop", "string", "result", "output", "should", "update", "again",
    "problem", "file", "number", "data", "call"};

std::string filler(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  const std::size_t n = lo + rng() % (hi - lo + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += kFiller[rng() % kFiller.size()];
  }
  return out;
}

}  // namespace

std::vector<DecomposedPost> synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.num_tags > kTags.size() || spec.tags_per_post > spec.num_tags || spec.tags_per_post < 1) {
    throw std::invalid_argument("synthetic_corpus: bad spec");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<DecomposedPost> out;
  std::vector<std::size_t> pool(spec.num_tags);
  for (std::size_t p = 0; p < spec.posts; ++p) {
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t i = 0; i < spec.tags_per_post; ++i) {
      std::swap(pool[i], pool[i + rng() % (pool.size() - i)]);
    }
    std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.tags_per_post));

    DecomposedPost post;
    post.id = spec.first_id + static_cast<std::int64_t>(p);
    post.created_at = 1'500'000'000'000LL + static_cast<std::int64_t>(p) * 60'000;
    post.date = "2017-07-14T02:40:00.000";
    for (const auto t : chosen) post.tags.emplace_back(kTags[t]);

    std::string code;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const std::string kw = kKeywords[chosen[i]];
      code += rng() % 2 == 0 ? "import " + kw + "\n" : kw + "()\n";
    }
    post.code = code;
    if (spec.signal == Signal::all_components) {
      post.title = "How do I use " + std::string(kKeywords[chosen[0]]) + " with " + kKeywords[chosen[1]] + "?";
      std::string desc = "I am working with";
      for (const auto t : chosen) desc += std::string(" ") + kKeywords[t];
      post.description = desc + " and " + filler(rng, 3, 8);
    } else {
      post.title = filler(rng, 4, 8);
      post.description = filler(rng, 8, 16);
    }
    out.push_back(std::move(post));
  }
  return out;
}

std::vector<std::string> corpus_text(const std::vector<DecomposedPost>& corpus) {
  std::vector<std::string> out;
  for (const auto& p : corpus) {
    out.push_back(p.title);
    out.push_back(p.description);
    out.push_back(p.code);
  }
  return out;
}

std::string byte_document(std::size_t tokens) {
  // Cycles through letters; a byte tokenizer maps each byte to one token.
  std::string out;
  for (std::size_t i = 0; i < tokens; ++i) out += static_cast<char>('a' + i % 26);
  return out;
}

DistinctDocument distinct_token_document(std::size_t tokens) {
  if (tokens > 26 * 26) throw std::invalid_argument("distinct_token_document: at most 676 tokens");
  std::vector<std::pair<TokenId, TokenId>> merges;
  for (TokenId a = 0; a < 26; ++a) merges.emplace_back(TokenId{' '}, TokenId{'a'} + a);
  for (TokenId a = 0; a < 26; ++a) {
    for (TokenId b = 0; b < 26; ++b) merges.emplace_back(Tokenizer::kFirstMerge + a, TokenId{'a'} + b);
  }
  DistinctDocument doc{Tokenizer(std::move(merges)), {}};
  for (std::size_t j = 0; j < tokens; ++j) {
    doc.text += ' ';
    doc.text += static_cast<char>('a' + j / 26);
    doc.text += static_cast<char>('a' + j % 26);
  }
  return doc;
}

}  // namespace tagrec::testing
