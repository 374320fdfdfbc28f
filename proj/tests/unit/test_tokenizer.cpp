#include <doctest.h>

#include <filesystem>
#include <random>

#include "synthetic.hpp"
#include "tagrec/errors.hpp"
#include "tagrec/tokenizer.hpp"

using namespace tagrec;

TEST_SUITE("tokenizer") {
  TEST_CASE("'aaaa' with room for one merge learns exactly (a, a)") {
    const auto tok = train_tokenizer({"aaaa"}, 261);
    REQUIRE(tok.merges().size() == 1);
    CHECK(tok.merges()[0] == std::pair<TokenId, TokenId>{'a', 'a'});
    CHECK(tok.vocab_size() == 261);
    CHECK(tok.tokenize("aaaa") == std::vector<TokenId>{260, 260});
  }

  TEST_CASE("minimum vocabulary learns no merges") {
    const auto tok = train_tokenizer({"aaaa", "abab abab"}, 260);
    CHECK(tok.merges().empty());
    CHECK(tok.tokenize("ab") == std::vector<TokenId>{'a', 'b'});
  }

  TEST_CASE("training stops when no pair repeats") {
    const auto tok = train_tokenizer({"abcdef"}, 1000);
    CHECK(tok.merges().empty());
  }

  TEST_CASE("a merge never crosses a pretokenizer boundary") {
    const auto tok = train_tokenizer({"a.a.a.a.a.a"}, 300);
    for (const auto& [l, r] : tok.merges()) {
      CHECK(tok.token_bytes(l).find('.') == std::string::npos);
      CHECK(tok.token_bytes(r).find('.') == std::string::npos);
    }
  }

  TEST_CASE("pretokenizer pieces") {
    const auto pieces = pretokenize("Hi there, x+=1\n\n  y");
    const std::vector<std::string_view> expected = {"Hi", " there", ",", " x", "+", "=", "1", "\n\n ", " y"};
    CHECK(pieces == expected);
  }

  TEST_CASE("decode inverts tokenize on arbitrary bytes") {
    std::mt19937_64 rng(3);
    std::vector<std::string> corpus;
    for (int d = 0; d < 50; ++d) {
      std::string s;
      for (int i = 0; i < 200; ++i) s += static_cast<char>("ab cd\n.(){}x"[rng() % 12]);
      corpus.push_back(s);
    }
    const auto tok = train_tokenizer(corpus, 400);
    CHECK(tok.vocab_size() > 260);
    std::string bytes;
    for (int i = 0; i < 1000; ++i) bytes += static_cast<char>(rng() % 256);
    CHECK(tok.decode(tok.tokenize(bytes)) == bytes);
    for (const auto& doc : corpus) CHECK(tok.decode(tok.tokenize(doc)) == doc);
  }

  TEST_CASE("encode frames content with CLS, SEP and PAD") {
    const Tokenizer tok;
    const auto seq = tok.encode("abc", 8);
    CHECK(seq.ids == std::vector<TokenId>{Tokenizer::kCls, 'a', 'b', 'c', Tokenizer::kSep, Tokenizer::kPad,
                                          Tokenizer::kPad, Tokenizer::kPad});
    CHECK(seq.mask == std::vector<std::uint8_t>{1, 1, 1, 1, 1, 0, 0, 0});
    CHECK(seq.real_length() == 5);
    CHECK(tok.encode("", 4).real_length() == 2);
    CHECK_THROWS_AS(tok.encode("x", 1), UsageError);
  }

  TEST_CASE("600-token document truncated to 512: head keeps 1-510, tail keeps 91-600") {
    const auto doc = testing::distinct_token_document(600);
    const auto tokens = doc.tokenizer.tokenize(doc.text);
    REQUIRE(tokens.size() == 600);
    for (std::size_t i = 0; i < 600; ++i) REQUIRE(tokens[i] == testing::kFirstDistinctToken + TokenId(i));

    const auto head = doc.tokenizer.encode(doc.text, 512, Truncation::head_only);
    const auto tail = doc.tokenizer.encode(doc.text, 512, Truncation::tail_only);
    REQUIRE(head.length() == 512);
    REQUIRE(tail.length() == 512);
    CHECK(head.ids.front() == Tokenizer::kCls);
    CHECK(head.ids.back() == Tokenizer::kSep);
    CHECK(tail.ids.front() == Tokenizer::kCls);
    CHECK(tail.ids.back() == Tokenizer::kSep);
    for (std::size_t p = 1; p <= 510; ++p) {
      // Token numbers are 1-based positions in the untruncated document.
      CHECK(head.ids[p] == tokens[p - 1]);
      CHECK(tail.ids[p] == tokens[90 + p - 1]);
    }
    CHECK(head.real_length() == 512);
  }

  TEST_CASE("json round-trip and save/load") {
    const auto tok = train_tokenizer(testing::corpus_text(testing::synthetic_corpus({})), 400);
    const auto back = Tokenizer::from_json(tok.to_json());
    CHECK(back.merges() == tok.merges());
    CHECK(back.content_hash() == tok.content_hash());
    const auto path = std::filesystem::temp_directory_path() / "tagrec_tok_test.json";
    tok.save(path.string());
    CHECK(Tokenizer::load(path.string()).merges() == tok.merges());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(Tokenizer::from_json("{\"merges\": [[1]]}"), ArtifactError);
    CHECK_THROWS_AS(Tokenizer::from_json("[[999, 1]]"), ArtifactError);
  }

  TEST_CASE("training is deterministic") {
    const auto text = testing::corpus_text(testing::synthetic_corpus({}));
    CHECK(train_tokenizer(text, 500).merges() == train_tokenizer(text, 500).merges());
  }
}
