#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "tagrec/checkpoint.hpp"
#include "tagrec/cli.hpp"
#include "tagrec/errors.hpp"
#include "tagrec/latency.hpp"
#include "tagrec/metrics.hpp"
#include "tagrec/stats.hpp"
#include "tagrec/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace tagrec {
namespace {

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path().empty() ? fs::path(".") : file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + file.string());
  out << text;
  if (!out) throw ArtifactError("write failed for " + file.string());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Setting> common_settings() {
  return {{"seed", json(0u), "seed for every random choice"},
          {"workers", json(1u), "threads for ingestion and encoding"}};
}

std::vector<Setting> model_settings() {
  return {
      {"components", json("title,description,code"), "comma-separated subset of title,description,code"},
      {"layers", json(2u), "transformer blocks per encoder"},
      {"heads", json(4u), "attention heads"},
      {"model_dim", json(128u), "hidden size d"},
      {"ffn_dim", json(512u), "feed-forward inner size"},
      {"max_positions", json(512u), "learned position embeddings"},
      {"share_weights", json(false), "one encoder shared by all components"},
      {"max_len_title", json(100u), "title budget in tokens, CLS and SEP included"},
      {"max_len_description", json(512u), "description budget in tokens"},
      {"max_len_code", json(512u), "code budget in tokens"},
      {"truncation", json("head_only"), "head_only or tail_only"},
      {"pooling", json("mean"), "mean, cls_first or max"},
  };
}

std::vector<Setting> train_settings() {
  return {
      {"batch_size", json(64u), "mini-batch size"},
      {"lr", json(7e-5), "initial learning rate, decayed linearly to zero"},
      {"epochs", json(1u), "passes over the training set"},
      {"max_steps", json(0u), "optimizer steps; 0 derives them from epochs"},
      {"beta1", json(0.9), "Adam beta1"},
      {"beta2", json(0.999), "Adam beta2"},
      {"adam_eps", json(1e-8), "Adam epsilon"},
      {"weight_decay", json(0.0), "L2 penalty added to the Adam update"},
      {"clip_norm", json(0.0), "global gradient-norm clip; 0 disables"},
      {"warmup_steps", json(0u), "linear warmup steps"},
  };
}

std::vector<Setting> concat(std::initializer_list<std::vector<Setting>> parts) {
  std::vector<Setting> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Component> parse_components(const std::string& text) {
  std::vector<Component> out;
  std::istringstream in(text);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (!name.empty()) out.push_back(component_from_string(name));
  }
  if (out.empty()) throw ConfigError("components: at least one of title,description,code is required");
  return out;
}

ModelConfig model_config(const RunConfig& rc, const TagVocabulary& vocab, const Tokenizer& tokenizer) {
  ModelConfig c;
  c.components = parse_components(rc.get<std::string>("components"));
  c.encoder.layers = rc.get<std::size_t>("layers");
  c.encoder.heads = rc.get<std::size_t>("heads");
  c.encoder.model_dim = rc.get<std::size_t>("model_dim");
  c.encoder.ffn_dim = rc.get<std::size_t>("ffn_dim");
  c.encoder.max_positions = rc.get<std::size_t>("max_positions");
  c.encoder.vocab_size = tokenizer.vocab_size();
  c.share_weights = rc.get<bool>("share_weights");
  c.num_tags = vocab.size();
  c.max_len = {rc.get<std::size_t>("max_len_title"), rc.get<std::size_t>("max_len_description"),
               rc.get<std::size_t>("max_len_code")};
  c.truncation = truncation_from_string(rc.get<std::string>("truncation"));
  c.pooling = pooling_from_string(rc.get<std::string>("pooling"));
  c.normalize();
  return c;
}

TrainConfig train_config(const RunConfig& rc) {
  TrainConfig t;
  t.batch_size = rc.get<std::size_t>("batch_size");
  t.initial_lr = rc.get<double>("lr");
  t.epochs = rc.get<std::size_t>("epochs");
  t.max_steps = rc.get<std::size_t>("max_steps");
  t.seed = rc.get<std::uint64_t>("seed");
  t.beta1 = rc.get<double>("beta1");
  t.beta2 = rc.get<double>("beta2");
  t.adam_eps = rc.get<double>("adam_eps");
  t.weight_decay = rc.get<double>("weight_decay");
  t.clip_norm = rc.get<double>("clip_norm");
  t.warmup_steps = rc.get<std::size_t>("warmup_steps");
  t.validate();
  return t;
}

int workers(const RunConfig& rc) { return static_cast<int>(std::max<std::size_t>(1, rc.get<std::size_t>("workers"))); }

TagModel fit(const RunConfig& rc, ModelConfig config, const TagVocabulary& vocab,
             const Tokenizer& tokenizer, const std::vector<DecomposedPost>& corpus,
             std::vector<LossRecord>* trace,
             const std::function<void(const TagModel&, std::size_t)>& on_checkpoint = {},
             std::size_t checkpoint_every = 0) {
  const TrainConfig tc = train_config(rc);
  TagModel model(std::move(config), vocab, tc.seed);
  const auto examples = make_examples(tokenizer, corpus, vocab, model.config(), workers(rc));
  const std::size_t steps = total_steps(tc, examples.size());
  logging::info("train.start", {{"posts", examples.size()},
                                {"steps", steps},
                                {"parameters", model.params().parameter_count()},
                                {"components", json::parse(model.config().to_json())["components"]}});
  auto records = train(model, examples, tc, [&](const LossRecord& r) {
    if (r.step % 10 == 0 || r.step + 1 == steps) {
      logging::info("train.step", {{"step", r.step}, {"lr", r.lr}, {"loss", r.loss}});
    }
    if (checkpoint_every > 0 && (r.step + 1) % checkpoint_every == 0 && r.step + 1 < steps && on_checkpoint) {
      on_checkpoint(model, r.step + 1);
    }
  });
  if (trace != nullptr) *trace = std::move(records);
  return model;
}

void write_report(const fs::path& dir, const MetricsReport& report,
                  const std::vector<EvalInstance>& instances) {
  write_text(dir / "metrics.json", report.to_json());
  write_text(dir / "metrics.txt", report.to_table());
  std::ostringstream csv;
  report.write_instances_csv(csv);
  write_text(dir / "instances.csv", csv.str());
  json missed = json::array();
  const auto f1 = report.column(std::min<std::size_t>(5, report.ks.back()), "f1");
  for (const auto& [tag, count] : missed_tag_analysis(instances, f1)) {
    missed.push_back({{"tag", tag}, {"count", count}});
  }
  write_text(dir / "missed_tags.json", missed.dump(2) + "\n");
}

std::vector<std::size_t> ks_for(const TagVocabulary& vocab) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= std::min(kMaxK, vocab.size()); ++k) ks.push_back(k);
  return ks;
}

// ---- commands ----

struct Command {
  std::string name;
  std::string description;
  std::vector<Setting> settings;
  std::function<void(const RunConfig&)> run;
};

void cmd_ingest(const RunConfig& rc) {
  const fs::path out = rc.path("out");
  const std::string input = rc.path("input");
  std::ifstream xml(input, std::ios::binary);
  if (!xml) throw ArtifactError("cannot open dump " + input);
  fs::create_directories(out);
  rc.echo(out);
  std::ostringstream jsonl;
  IngestOptions opts;
  opts.workers = workers(rc);
  opts.chunk_rows = rc.get<std::size_t>("chunk_rows");
  const IngestStats stats = ingest_dump(xml, jsonl, opts, [](const std::string& w) {
    logging::warn("ingest.skip", {{"reason", w}});
  });
  write_text(out / "posts.jsonl", jsonl.str());
  const json s = {{"rows", stats.rows},
                  {"questions", stats.questions},
                  {"non_questions", stats.non_questions},
                  {"untagged", stats.untagged},
                  {"missing_fields", stats.missing_fields},
                  {"bad_tags", stats.bad_tags}};
  write_text(out / "ingest.stats.json", s.dump(2) + "\n");
  logging::info("ingest.done", s);
}

void cmd_build_vocab(const RunConfig& rc) {
  const fs::path out = rc.path("out");
  const auto corpus = read_corpus_file(rc.path("corpus"));
  rc.echo(out);
  const TagVocabulary vocab = build_tag_vocab(corpus, rc.get<std::uint64_t>("theta"));
  const auto kept = filter_posts(corpus, vocab);
  auto [train_set, test_set] = chronological_split(kept, rc.get<std::size_t>("test_count"));
  vocab.save((out / "tags.json").string());
  write_corpus_file((out / "train.jsonl").string(), train_set);
  write_corpus_file((out / "test.jsonl").string(), test_set);
  logging::info("build_vocab.done", {{"posts", corpus.size()},
                                     {"kept", kept.size()},
                                     {"tags", vocab.size()},
                                     {"train", train_set.size()},
                                     {"test", test_set.size()}});
}

void cmd_tokenizer_train(const RunConfig& rc) {
  const fs::path out = rc.path("out");
  const auto corpus = read_corpus_file(rc.path("corpus"));
  rc.echo(out);
  std::vector<std::string> text;
  text.reserve(corpus.size() * 3);
  for (const auto& p : corpus) {
    text.push_back(p.title);
    text.push_back(p.description);
    text.push_back(p.code);
  }
  const Tokenizer tok = train_tokenizer(text, rc.get<std::size_t>("vocab_size"));
  tok.save((out / "tokenizer.json").string());
  logging::info("tokenizer.done", {{"vocab_size", tok.vocab_size()}, {"merges", tok.merges().size()}});
}

void cmd_train(const RunConfig& rc) {
  const fs::path out = rc.path("out");
  const auto corpus = read_corpus_file(rc.path("corpus"));
  const auto vocab = TagVocabulary::load(rc.path("tags"));
  const auto tokenizer = Tokenizer::load(rc.path("tokenizer"));
  ModelConfig config = model_config(rc, vocab, tokenizer);
  rc.echo(out);
  std::vector<LossRecord> trace;
  const TagModel model = fit(
      rc, std::move(config), vocab, tokenizer, corpus, &trace,
      [&](const TagModel& m, std::size_t step) {
        save_checkpoint(m, (out / ("model.step" + std::to_string(step) + ".ckpt")).string());
      },
      rc.get<std::size_t>("checkpoint_every"));
  save_checkpoint(model, (out / "model.ckpt").string());
  std::ostringstream csv;
  write_loss_trace(csv, trace);
  write_text(out / "loss.csv", csv.str());
  logging::info("train.done", {{"steps", trace.size()}, {"final_loss", trace.empty() ? 0.0 : trace.back().loss}});
}

void cmd_evaluate(const RunConfig& rc) {
  const fs::path out = rc.path("out");
  const auto corpus = read_corpus_file(rc.path("corpus"));
  const auto vocab = TagVocabulary::load(rc.path("tags"));
  const auto tokenizer = Tokenizer::load(rc.path("tokenizer"));
  const TagModel model = load_checkpoint(rc.path("checkpoint"), vocab);
  rc.echo(out);
  const auto instances = predict_corpus(model, tokenizer, corpus, workers(rc));
  const auto report = evaluate_corpus(instances, ks_for(vocab));
  write_report(out, report, instances);
  logging::info("evaluate.done", {{"n", report.n}, {"f1@5", report.mean.back().f1}});
}

// Scores ready-made (ground truth, prediction) pairs without a model.
void cmd_evaluate_instances(const RunConfig& rc) {
  const fs::path out = rc.path("out");
  const std::string path = rc.path("instances");
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open " + path);
  rc.echo(out);
  std::vector<EvalInstance> instances;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      EvalInstance inst;
      inst.id = j.value("id", static_cast<std::int64_t>(line_no));
      inst.ground_truth = j.at("ground_truth").get<std::vector<std::string>>();
      inst.ranked_prediction = j.at("prediction").get<std::vector<std::string>>();
      instances.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      throw ArtifactError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::size_t max_k = kMaxK;
  for (const auto& inst : instances) max_k = std::min(max_k, inst.ranked_prediction.size());
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= max_k; ++k) ks.push_back(k);
  const auto report = evaluate_corpus(instances, ks);
  write_report(out, report, instances);
  logging::info("evaluate.done", {{"n", report.n}});
}

void cmd_predict(const RunConfig& rc) {
  const auto vocab = TagVocabulary::load(rc.path("tags"));
  const auto tokenizer = Tokenizer::load(rc.path("tokenizer"));
  const TagModel model = load_checkpoint(rc.path("checkpoint"), vocab);
  std::string title = rc.get<std::string>("title");
  std::string description = rc.get<std::string>("description");
  std::string code = rc.get<std::string>("code");
  if (const auto post = rc.get<std::string>("post"); !post.empty()) {
    try {
      const auto j = json::parse(read_text(post));
      title = j.value("title", "");
      description = j.value("description", "");
      code = j.value("code", "");
    } catch (const nlohmann::json::exception& e) {
      throw ArtifactError("post file " + post + ": " + e.what());
    }
  }
  const auto k = rc.get<std::size_t>("k");
  const Prediction p = model.predict(encode_post(tokenizer, title, description, code, model.config()));
  const auto tags = predict_top_k(p, k, vocab);
  json result = json::array();
  for (std::size_t i = 0; i < k; ++i) {
    result.push_back({{"tag", tags[i]}, {"probability", p.probabilities[p.ranked[i]]}});
  }
  std::cout << json{{"tags", result}}.dump(2) << std::endl;
}

void cmd_ablate(const RunConfig& rc) {
  const fs::path out = rc.path("out");
  const auto train_set = read_corpus_file(rc.path("corpus"));
  const auto test_set = read_corpus_file(rc.path("test"));
  const auto vocab = TagVocabulary::load(rc.path("tags"));
  const auto tokenizer = Tokenizer::load(rc.path("tokenizer"));
  const ModelConfig full = model_config(rc, vocab, tokenizer);
  rc.echo(out);

  struct Variant {
    std::string name;
    ModelConfig config;
  };
  std::vector<Variant> variants = {{"full", full}};
  if (full.components.size() > 1) {
    for (const Component drop : full.components) {
      ModelConfig c = full;
      c.components.erase(std::find(c.components.begin(), c.components.end(), drop));
      std::string name = to_string(drop);
      name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
      variants.push_back({"No" + name, c});
    }
  }
  const auto ks = ks_for(vocab);
  json rows = json::array();
  std::vector<Scores> full_scores;
  std::ostringstream table;
  table << std::left << std::setw(16) << "model";
  for (const auto k : ks) table << std::right << std::setw(10) << ("F1@" + std::to_string(k));
  table << std::setw(12) << "dF1@" + std::to_string(ks.back()) << "\n";
  for (const auto& v : variants) {
    logging::info("ablate.variant", {{"name", v.name}});
    const TagModel model = fit(rc, v.config, vocab, tokenizer, train_set, nullptr);
    const auto instances = predict_corpus(model, tokenizer, test_set, workers(rc));
    const auto report = evaluate_corpus(instances, ks);
    write_report(out / v.name, report, instances);
    if (full_scores.empty()) full_scores = report.mean;
    json row = {{"model", v.name}};
    auto comps = json::array();
    for (const auto c : v.config.components) comps.push_back(to_string(c));
    row["components"] = comps;
    table << std::left << std::setw(16) << v.name << std::right << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const std::string k = std::to_string(ks[i]);
      row["precision@" + k] = report.mean[i].precision;
      row["recall@" + k] = report.mean[i].recall;
      row["f1@" + k] = report.mean[i].f1;
      row["delta_f1@" + k] = report.mean[i].f1 - full_scores[i].f1;
      table << std::setw(10) << report.mean[i].f1;
    }
    table << std::setw(12) << std::showpos << report.mean.back().f1 - full_scores.back().f1
          << std::noshowpos << "\n";
    rows.push_back(std::move(row));
  }
  write_text(out / "ablation.json", rows.dump(2) + "\n");
  write_text(out / "ablation.txt", table.str());
  if (!logging::quiet()) std::cerr << table.str();
}

void cmd_bench(const RunConfig& rc) {
  const fs::path out = rc.path("out");
  const auto corpus = read_corpus_file(rc.path("corpus"));
  const auto vocab = TagVocabulary::load(rc.path("tags"));
  const auto tokenizer = Tokenizer::load(rc.path("tokenizer"));
  const std::string ckpt = rc.get<std::string>("checkpoint");
  // Timing does not depend on weight values, so an untrained model of the
  // requested shape is enough when no checkpoint is given.
  const TagModel model = ckpt.empty()
                             ? TagModel(model_config(rc, vocab, tokenizer), vocab, rc.get<std::uint64_t>("seed"))
                             : load_checkpoint(ckpt, vocab);
  rc.echo(out);
  LatencyOptions opts;
  opts.sample_n = rc.get<std::size_t>("sample_n");
  opts.repeats = rc.get<std::size_t>("repeats");
  opts.seed = rc.get<std::uint64_t>("seed");
  const LatencyStats stats = latency_bench(model, tokenizer, corpus, opts);
  write_text(out / "latency.json", stats.to_json());
  logging::info("bench.done", json::parse(stats.to_json()));
}

void cmd_compare(const RunConfig& rc) {
  const std::string column = rc.get<std::string>("metric");
  const auto read = [&](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("cannot open " + path);
    return read_instance_column(in, column);
  };
  const auto [ids_a, a] = read(rc.path("a"));
  const auto [ids_b, b] = read(rc.path("b"));
  if (ids_a != ids_b) throw ArtifactError("compare: the two files do not list the same instances in the same order");
  const WilcoxonResult w = wilcoxon_signed_rank(a, b);
  const EffectSize e = cliffs_delta(a, b);
  const json result = {{"metric", column},
                       {"n", a.size()},
                       {"wilcoxon", {{"statistic", w.statistic}, {"nonzero_pairs", w.n},
                                     {"p_value", w.p_value}, {"exact", w.exact},
                                     {"significant", w.p_value < 0.05}}},
                       {"cliffs_delta", {{"delta", e.delta}, {"magnitude", to_string(e.magnitude)}}}};
  const std::string out = rc.get<std::string>("out");
  if (!out.empty()) {
    rc.echo(fs::path(out));
    write_text(fs::path(out) / "compare.json", result.dump(2) + "\n");
  }
  std::cout << result.dump(2) << std::endl;
}

std::vector<Command> commands() {
  const Setting out{"out", json(""), "output directory"};
  const Setting corpus{"corpus", json(""), "corpus JSONL"};
  const Setting tags{"tags", json(""), "tag vocabulary JSON"};
  const Setting tokenizer{"tokenizer", json(""), "tokenizer JSON"};
  const Setting checkpoint{"checkpoint", json(""), "model checkpoint"};
  return {
      {"ingest", "Parse a Posts.xml dump into decomposed posts (posts.jsonl)",
       concat({common_settings(),
               {{"input", json(""), "Posts.xml dump"}, out,
                {"chunk_rows", json(1024u), "rows decomposed per parallel chunk"}}}),
       cmd_ingest},
      {"build-vocab", "Count tags over the full corpus, drop rare ones, split chronologically",
       concat({common_settings(),
               {corpus, out, {"theta", json(50u), "tags occurring fewer times are rare"},
                {"test_count", json(0u), "newest posts held out as test.jsonl"}}}),
       cmd_build_vocab},
      {"tokenizer-train", "Learn byte-level BPE merges from a corpus",
       concat({common_settings(), {corpus, out, {"vocab_size", json(8192u), "ids including bytes and specials"}}}),
       cmd_tokenizer_train},
      {"train", "Train a tag model",
       concat({common_settings(), {corpus, tags, tokenizer, out,
                                   {"checkpoint_every", json(0u), "extra checkpoint every N steps; 0 disables"}},
               model_settings(), train_settings()}),
       cmd_train},
      {"evaluate", "Score a checkpoint on a corpus",
       concat({common_settings(), {corpus, tags, tokenizer, checkpoint, out}}), cmd_evaluate},
      {"evaluate-instances", "Score (ground truth, prediction) pairs from a JSONL file",
       concat({common_settings(), {{"instances", json(""), "JSONL of {id, ground_truth, prediction}"}, out}}),
       cmd_evaluate_instances},
      {"predict", "Print the top-k tags of one post",
       concat({common_settings(),
               {tags, tokenizer, checkpoint, {"post", json(""), "JSON file with title, description, code"},
                {"title", json(""), "post title"}, {"description", json(""), "post description"},
                {"code", json(""), "post code"}, {"k", json(5u), "tags to print (1-5)"}}}),
       cmd_predict},
      {"ablate", "Train the full model and one twin per dropped component, then compare",
       concat({common_settings(), {corpus, {"test", json(""), "test corpus JSONL"}, tags, tokenizer, out},
               model_settings(), train_settings()}),
       cmd_ablate},
      {"bench", "Measure single-post inference latency",
       concat({common_settings(),
               {corpus, tags, tokenizer, {"checkpoint", json(""), "model checkpoint; untrained model if empty"}, out,
                {"sample_n", json(2000u), "posts sampled without replacement"},
                {"repeats", json(5u), "passes over the sample"}},
               model_settings()}),
       cmd_bench},
      {"compare", "Wilcoxon signed-rank test and Cliff's delta on two per-instance CSVs",
       concat({common_settings(),
               {{"a", json(""), "per-instance CSV of system A"}, {"b", json(""), "per-instance CSV of system B"},
                {"metric", json("f1@5"), "column to compare"},
                {"out", json(""), "optional output directory"}}}),
       cmd_compare},
  };
}

int fail(int code, const std::string& kind, const std::string& message) {
  const json err = {{"error", kind}, {"message", message}};
  std::cerr << err.dump(-1, ' ', false, json::error_handler_t::replace) << std::endl;
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"tagrec: tag recommendation for Stack Overflow posts", "tagrec"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress informational logging");

  auto table = commands();
  std::vector<std::unique_ptr<RunConfig>> configs;
  std::vector<CLI::App*> subs;
  for (auto& c : table) {
    auto* sub = app.add_subcommand(c.name, c.description);
    sub->add_flag("-q,--quiet", quiet, "suppress informational logging");
    configs.push_back(std::make_unique<RunConfig>(c.name, c.settings));
    configs.back()->add_to(*sub);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }
  logging::set_quiet(quiet);

  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      configs[i]->resolve();
      table[i].run(*configs[i]);
      return 0;
    } catch (const CheckpointError& e) {
      return fail(2, "checkpoint", e.what());
    } catch (const XmlParseError& e) {
      return fail(2, "xml", e.what());
    } catch (const ArtifactError& e) {
      return fail(2, "artifact", e.what());
    } catch (const ConfigError& e) {
      return fail(2, "config", e.what());
    } catch (const UsageError& e) {
      return fail(2, "usage", e.what());
    } catch (const std::exception& e) {
      return fail(1, "internal", e.what());
    }
  }
  return fail(2, "usage", "no command given");
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tagrec
