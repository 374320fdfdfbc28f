// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Usage: acceptance [criterion numbers...]; no arguments runs all of them.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gradcheck.hpp"
#include "synthetic.hpp"
#include "tagrec/ingest.hpp"
#include "tagrec/latency.hpp"
#include "tagrec/metrics.hpp"
#include "tagrec/stats.hpp"
#include "tagrec/checkpoint.hpp"
#include "tagrec/train.hpp"

using namespace tagrec;

namespace {

// Tolerances and budgets.
constexpr double kMetricTolerance = 1e-12;
constexpr double kMetricBudgetSeconds = 5.0;
constexpr double kGradStep = 1e-4;
constexpr double kGradRelTolerance = 1e-4;
constexpr double kGradAbsFloor = 1e-6;
constexpr double kGradBudgetSeconds = 60.0;
constexpr double kLearnabilityTarget = 0.95;
constexpr double kLearnabilityBudgetSeconds = 300.0;
constexpr std::size_t kLearnabilityMaxSteps = 300;
constexpr double kCodeOnlyFullTarget = 0.9;
constexpr double kCodeOnlyNoCodeCeiling = 0.3;
constexpr double kPaddingTolerance = 1e-6;

// Training recipe shared by the two learning criteria. The library default
// (lr 7e-5, batch 64) is tuned for large corpora and is far too slow here.
constexpr double kAcceptanceLr = 1e-3;
constexpr std::size_t kAcceptanceBatch = 16;
constexpr std::uint64_t kModelSeed = 7;
constexpr std::uint64_t kShuffleSeed = 3;
constexpr std::size_t kTokenizerVocab = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Set arithmetic over the top-k prefix, written without the library.
std::array<double, 3> brute_force_scores(const EvalInstance& inst, std::size_t k) {
  const std::set<std::string> gt(inst.ground_truth.begin(), inst.ground_truth.end());
  double hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += gt.count(inst.ranked_prediction[i]) ? 1 : 0;
  const double p = hits / double(k);
  const double r = hits / double(std::min(k, gt.size()));
  return {p, r, p + r == 0 ? 0.0 : 2 * p * r / (p + r)};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(2024);
  std::vector<std::string> vocab;
  for (int i = 0; i < 50; ++i) vocab.push_back("t" + std::to_string(i));
  std::vector<EvalInstance> instances(1000);
  for (auto& inst : instances) {
    auto v = vocab;
    std::shuffle(v.begin(), v.end(), rng);
    inst.ground_truth.assign(v.begin(), v.begin() + 1 + static_cast<std::ptrdiff_t>(rng() % 5));
    std::shuffle(v.begin(), v.end(), rng);
    std::vector<std::string> pred;
    for (const auto& t : inst.ground_truth) {
      if (rng() % 2) pred.push_back(t);
    }
    for (const auto& t : v) {
      if (pred.size() == 5) break;
      if (std::find(pred.begin(), pred.end(), t) == pred.end()) pred.push_back(t);
    }
    std::shuffle(pred.begin(), pred.end(), rng);
    inst.ranked_prediction = pred;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = evaluate_corpus(instances);
  double worst = 0;
  for (std::size_t k = 1; k <= 5; ++k) {
    std::array<double, 3> sum{};
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto s = brute_force_scores(instances[i], k);
      const auto& got = report.per_instance[i][k - 1];
      worst = std::max({worst, std::abs(got.precision - s[0]), std::abs(got.recall - s[1]),
                        std::abs(got.f1 - s[2])});
      for (int m = 0; m < 3; ++m) sum[m] += s[m];
    }
    const auto& mean = report.at(k);
    worst = std::max({worst, std::abs(mean.precision - sum[0] / 1000), std::abs(mean.recall - sum[1] / 1000),
                      std::abs(mean.f1 - sum[2] / 1000)});
  }
  const double secs = seconds_since(t0);
  return {worst <= kMetricTolerance && secs < kMetricBudgetSeconds,
          fmt("max |diff| %.3g over 1000 instances, %.2f s", worst, secs)};
}

Outcome worked_example() {
  const EvalInstance inst{{"python", "machine-learning", "neural-network", "tensorflow", "keras"},
                          {"python", "pytorch", "neural-network", "tensorflow", "keras"},
                          0};
  const double p = precision_at_k(inst, 5), r = recall_at_k(inst, 5), f = f1_at_k(inst, 5);
  const bool ok = std::abs(p - 0.8) <= 1e-15 && std::abs(r - 0.8) <= 1e-15 && std::abs(f - 0.8) <= 1e-15;
  return {ok, fmt("P@5 %.17g, R@5 %.17g, F1@5 %.17g", p, r, f)};
}

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto setup = testing::tiny_setup(11);
  const auto report = testing::check_gradients(setup.config, setup.params, setup.examples, kGradStep,
                                               kGradRelTolerance, kGradAbsFloor);
  const double secs = seconds_since(t0);
  const bool ok = report.failures == 0 && report.checked == setup.params.parameter_count() &&
                  secs < kGradBudgetSeconds;
  return {ok, fmt("%.0f entries, %.0f failures, worst relative error %.3g", double(report.checked),
                  double(report.failures), report.worst_relative) +
                  " at " + report.worst_name + fmt(", max |diff| %.3g, %.1f s", report.worst_absolute, secs)};
}

TrainConfig acceptance_training(std::size_t steps) {
  TrainConfig tc;
  tc.batch_size = kAcceptanceBatch;
  tc.initial_lr = kAcceptanceLr;
  tc.max_steps = steps;
  tc.seed = kShuffleSeed;
  return tc;
}

Outcome learnability() {
  testing::SyntheticSpec spec;  // 64 posts, 20 tags
  const auto corpus = testing::synthetic_corpus(spec);
  const auto vocab = build_tag_vocab(corpus, 1);
  const auto tok = train_tokenizer(testing::corpus_text(corpus), kTokenizerVocab);
  ModelConfig cfg;  // default desk-scale encoder
  cfg.num_tags = vocab.size();
  cfg.encoder.vocab_size = tok.vocab_size();
  const auto t0 = std::chrono::steady_clock::now();
  TagModel model(cfg, vocab, kModelSeed);
  train(model, make_examples(tok, corpus, vocab, model.config()), acceptance_training(kLearnabilityMaxSteps));
  const double f1 = evaluate_corpus(predict_corpus(model, tok, corpus)).at(5).f1;
  const double secs = seconds_since(t0);
  return {vocab.size() == 20 && f1 >= kLearnabilityTarget && secs < kLearnabilityBudgetSeconds,
          fmt("train F1@5 %.4f after %.0f steps, %.1f s", f1, double(kLearnabilityMaxSteps), secs)};
}

Outcome code_only_ablation() {
  testing::SyntheticSpec spec;
  spec.posts = 600;
  spec.num_tags = 40;
  spec.signal = testing::Signal::code_only;
  const auto [train_set, test_set] = chronological_split(testing::synthetic_corpus(spec), 100);
  const auto vocab = build_tag_vocab(train_set, 1);
  const auto tok = train_tokenizer(testing::corpus_text(train_set), kTokenizerVocab);
  const auto t0 = std::chrono::steady_clock::now();
  const auto score = [&](std::vector<Component> components) {
    ModelConfig cfg;
    cfg.components = std::move(components);
    cfg.num_tags = vocab.size();
    cfg.encoder.vocab_size = tok.vocab_size();
    TagModel model(cfg, vocab, kModelSeed);
    train(model, make_examples(tok, train_set, vocab, model.config()), acceptance_training(900));
    return evaluate_corpus(predict_corpus(model, tok, test_set)).at(5).f1;
  };
  const double full = score({Component::title, Component::description, Component::code});
  const double no_code = score({Component::title, Component::description});
  return {full >= kCodeOnlyFullTarget && no_code <= kCodeOnlyNoCodeCeiling,
          fmt("held-out F1@5: full %.4f, NoCode %.4f, %.1f s", full, no_code, seconds_since(t0))};
}

Outcome truncation() {
  const auto doc = testing::distinct_token_document(600);
  const auto tokens = doc.tokenizer.tokenize(doc.text);
  bool ok = tokens.size() == 600;
  for (std::size_t i = 0; ok && i < 600; ++i) ok = tokens[i] == testing::kFirstDistinctToken + TokenId(i);
  const auto head = doc.tokenizer.encode(doc.text, 512, Truncation::head_only);
  const auto tail = doc.tokenizer.encode(doc.text, 512, Truncation::tail_only);
  std::size_t mismatches = 0;
  for (std::size_t p = 1; ok && p <= 510; ++p) {
    mismatches += head.ids[p] != tokens[p - 1];
    mismatches += tail.ids[p] != tokens[90 + p - 1];
  }
  ok = ok && mismatches == 0 && head.ids[0] == Tokenizer::kCls && head.ids[511] == Tokenizer::kSep &&
       tail.ids[0] == Tokenizer::kCls && tail.ids[511] == Tokenizer::kSep;
  return {ok, fmt("%.0f token mismatches; head keeps 1-510, tail keeps 91-600", double(mismatches))};
}

Outcome padding_invariance() {
  EncoderConfig cfg;
  auto params = make_encoder_params<float>(cfg);
  std::mt19937_64 rng(5);
  init_encoder_params(params, rng);
  const Tokenizer tok;
  double worst = 0;
  for (const char* text : {"x", "sort a dict?", "int main() {}"}) {  // each fits in 14 tokens
    const auto short_form = tok.encode(text, 16);
    const auto long_form = tok.encode(text, 512);
    for (const auto pooling : {Pooling::mean, Pooling::cls_first, Pooling::max}) {
      Tape<float> tape(false);
      const auto a =
          tape.value(encode_component<float>(tape, cfg, params, nullptr, short_form, pooling, PaddingMode::full)).data;
      const auto b =
          tape.value(encode_component<float>(tape, cfg, params, nullptr, long_form, pooling, PaddingMode::full)).data;
      for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, double(std::abs(a[j] - b[j])));
    }
  }
  return {worst <= kPaddingTolerance, fmt("max |diff| %.3g between lengths 16 and 512", worst)};
}

Outcome ingestion_golden() {
  const std::string dir = TAGREC_FIXTURES;
  std::ifstream xml(dir + "/posts20.xml", std::ios::binary);
  std::ostringstream jsonl;
  const auto stats = ingest_dump(xml, jsonl, IngestOptions{2, 5});
  const std::string golden = slurp(dir + "/posts20.golden.jsonl");
  const bool identical = !golden.empty() && jsonl.str() == golden;

  std::vector<DecomposedPost> corpus;
  const auto add = [&](const std::string& tag, int n) {
    for (int i = 0; i < n; ++i) {
      DecomposedPost p;
      p.id = static_cast<std::int64_t>(corpus.size());
      p.tags = {tag};
      corpus.push_back(p);
    }
  };
  add("fifty", 50);
  add("forty-nine", 49);
  const auto vocab = build_tag_vocab(corpus, 50);
  const bool boundary = vocab.contains("fifty") && !vocab.contains("forty-nine") &&
                        filter_posts(corpus, vocab).size() == 50;
  return {identical && boundary && stats.rows == 20,
          std::string(identical ? "byte-identical" : "DIFFERS from") + " golden JSONL (" +
              std::to_string(stats.questions) + " questions of " + std::to_string(stats.rows) +
              " rows); theta 50 " + (boundary ? "keeps 50, drops 49" : "boundary wrong")};
}

Outcome statistics() {
  std::vector<double> a, b;
  for (int i = 1; i <= 10; ++i) {
    b.push_back(0.1 * i);
    a.push_back(0.1 * i + 0.01 * i);
  }
  const auto w = wilcoxon_signed_rank(a, b);
  const bool exact_ok = w.exact && w.p_value == 2.0 / 1024.0;
  const std::map<double, std::string> table = {
      {0.0, "Negligible"}, {0.1, "Negligible"}, {0.2, "Small"}, {0.4, "Medium"}, {0.6, "Large"}};
  bool labels_ok = true;
  std::string labels;
  for (const auto& [delta, expected] : table) {
    const auto got = to_string(magnitude_for(delta));
    labels_ok = labels_ok && got == expected;
    labels += (labels.empty() ? "" : ", ") + fmt("%.1f", delta) + "->" + got;
  }
  return {exact_ok && labels_ok, fmt("Wilcoxon p %.17g (2/1024 = %.17g); ", w.p_value, 2.0 / 1024.0) + labels};
}

Outcome latency() {
  testing::SyntheticSpec spec;
  spec.posts = 200;
  const auto corpus = testing::synthetic_corpus(spec);
  const auto vocab = build_tag_vocab(corpus, 1);
  const auto tok = train_tokenizer(testing::corpus_text(corpus), kTokenizerVocab);
  ModelConfig big;
  big.num_tags = vocab.size();
  big.encoder.vocab_size = tok.vocab_size();
  ModelConfig small = big;
  small.encoder.layers = 1;
  small.encoder.model_dim = 64;
  small.encoder.ffn_dim = 256;
  const LatencyOptions options{40, 3, 1};
  const auto big_stats = latency_bench(TagModel(big, vocab, 1), tok, corpus, options);
  const auto small_stats = latency_bench(TagModel(small, vocab, 1), tok, corpus, options);
  const auto j = nlohmann::ordered_json::parse(small_stats.to_json());
  bool keys_ok = true;
  for (const char* key : {"std", "min", "25%", "50%", "75%", "max", "mean"}) keys_ok = keys_ok && j.contains(key);
  return {small_stats.mean < big_stats.mean && keys_ok,
          fmt("mean %.2f ms (default) vs %.2f ms (1 layer, d=64); ", big_stats.mean, small_stats.mean) +
              "report keys " + (keys_ok ? "complete" : "MISSING")};
}

Outcome checkpoint_round_trip() {
  testing::SyntheticSpec spec;
  spec.posts = 100;
  spec.seed = 42;
  const auto corpus = testing::synthetic_corpus(spec);
  const auto vocab = build_tag_vocab(corpus, 1);
  const auto tok = train_tokenizer(testing::corpus_text(corpus), kTokenizerVocab);
  ModelConfig cfg;
  cfg.num_tags = vocab.size();
  cfg.encoder.vocab_size = tok.vocab_size();
  TagModel model(cfg, vocab, 3);
  train(model, make_examples(tok, corpus, vocab, model.config()), acceptance_training(4));
  const std::string path = "acceptance_roundtrip.ckpt";
  save_checkpoint(model, path);
  const TagModel back = load_checkpoint(path, vocab);
  std::remove(path.c_str());
  std::size_t differing = 0;
  for (const auto& post : corpus) {
    const auto input = encode_post(tok, post, cfg);
    differing += model.predict(input).probabilities != back.predict(input).probabilities;
  }
  return {differing == 0, fmt("%.0f of 100 posts differ after save/load", double(differing))};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "metric oracle equivalence", metric_oracle},
      {2, "five-tag worked example", worked_example},
      {3, "gradient check", gradient_check},
      {4, "end-to-end learnability", learnability},
      {5, "code-only ablation", code_only_ablation},
      {6, "truncation contract", truncation},
      {7, "padding invariance", padding_invariance},
      {8, "ingestion golden test", ingestion_golden},
      {9, "statistics", statistics},
      {10, "latency of a smaller model", latency},
      {11, "checkpoint round-trip", checkpoint_round_trip},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.number)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", c.number, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
