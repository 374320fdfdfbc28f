#include "tagrec/metrics.hpp"

#include <algorithm>
#include <exception>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "tagrec/errors.hpp"

namespace tagrec {
namespace {

void check(const EvalInstance& inst, std::size_t k) {
  if (k < 1 || k > kMaxK) throw UsageError("k must be in [1, 5], got " + std::to_string(k));
  if (inst.ground_truth.empty()) throw UsageError("instance " + std::to_string(inst.id) + " has no ground truth");
  if (inst.ranked_prediction.size() < k) {
    throw UsageError("instance " + std::to_string(inst.id) + " has " +
                     std::to_string(inst.ranked_prediction.size()) + " predictions, k = " +
                     std::to_string(k));
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (inst.ranked_prediction[i] == inst.ranked_prediction[j]) {
        throw UsageError("instance " + std::to_string(inst.id) + " predicts '" +
                         inst.ranked_prediction[i] + "' twice");
      }
    }
  }
}

std::size_t hits(const EvalInstance& inst, std::size_t k) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (std::find(inst.ground_truth.begin(), inst.ground_truth.end(), inst.ranked_prediction[i]) !=
        inst.ground_truth.end()) {
      ++n;
    }
  }
  return n;
}

Scores score(const EvalInstance& inst, std::size_t k) {
  check(inst, k);
  const auto h = static_cast<double>(hits(inst, k));
  Scores s;
  s.precision = h / static_cast<double>(k);
  s.recall = h / static_cast<double>(std::min(k, inst.ground_truth.size()));
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

std::string format(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

double precision_at_k(const EvalInstance& inst, std::size_t k) { return score(inst, k).precision; }
double recall_at_k(const EvalInstance& inst, std::size_t k) { return score(inst, k).recall; }
double f1_at_k(const EvalInstance& inst, std::size_t k) { return score(inst, k).f1; }

const Scores& MetricsReport::at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return mean[i];
  }
  throw UsageError("report has no k = " + std::to_string(k));
}

std::vector<double> MetricsReport::column(std::size_t k, const std::string& metric) const {
  const auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw UsageError("report has no k = " + std::to_string(k));
  const auto idx = static_cast<std::size_t>(it - ks.begin());
  std::vector<double> out;
  out.reserve(n);
  for (const auto& row : per_instance) {
    if (metric == "precision") out.push_back(row[idx].precision);
    else if (metric == "recall") out.push_back(row[idx].recall);
    else if (metric == "f1") out.push_back(row[idx].f1);
    else throw UsageError("unknown metric '" + metric + "'");
  }
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  auto metrics = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    metrics.push_back({{"k", ks[i]},
                       {"precision", mean[i].precision},
                       {"recall", mean[i].recall},
                       {"f1", mean[i].f1}});
  }
  j["metrics"] = std::move(metrics);
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out << "n = " << n << "\n";
  out << std::left << std::setw(4) << "k" << std::right << std::setw(12) << "precision"
      << std::setw(12) << "recall" << std::setw(12) << "f1" << "\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    out << std::left << std::setw(4) << ks[i] << std::right << std::setw(12) << mean[i].precision
        << std::setw(12) << mean[i].recall << std::setw(12) << mean[i].f1 << "\n";
  }
  return out.str();
}

void MetricsReport::write_instances_csv(std::ostream& out) const {
  out << "id";
  for (const std::size_t k : ks) out << ",precision@" << k << ",recall@" << k << ",f1@" << k;
  out << "\n";
  for (std::size_t r = 0; r < per_instance.size(); ++r) {
    out << ids[r];
    for (const auto& s : per_instance[r]) {
      out << ',' << format(s.precision) << ',' << format(s.recall) << ',' << format(s.f1);
    }
    out << "\n";
  }
}

MetricsReport evaluate_corpus(const std::vector<EvalInstance>& instances,
                              const std::vector<std::size_t>& ks) {
  if (instances.empty()) throw UsageError("evaluate_corpus: empty corpus");
  if (ks.empty()) throw UsageError("evaluate_corpus: no k values");
  MetricsReport report;
  report.ks = ks;
  report.n = instances.size();
  report.per_instance.assign(instances.size(), std::vector<Scores>(ks.size()));
  report.ids.resize(instances.size());

  const auto n = static_cast<std::ptrdiff_t>(instances.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& inst = instances[static_cast<std::size_t>(i)];
      report.ids[static_cast<std::size_t>(i)] = inst.id;
      for (std::size_t j = 0; j < ks.size(); ++j) {
        report.per_instance[static_cast<std::size_t>(i)][j] = score(inst, ks[j]);
      }
    } catch (...) {
#pragma omp critical(tagrec_evaluate)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  // Sequential sums keep the means independent of the thread count.
  report.mean.assign(ks.size(), Scores{});
  for (const auto& row : report.per_instance) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      report.mean[j].precision += row[j].precision;
      report.mean[j].recall += row[j].recall;
      report.mean[j].f1 += row[j].f1;
    }
  }
  const auto count = static_cast<double>(instances.size());
  for (auto& m : report.mean) {
    m.precision /= count;
    m.recall /= count;
    m.f1 /= count;
  }
  return report;
}

std::pair<std::vector<std::int64_t>, std::vector<double>> read_instance_column(
    std::istream& in, const std::string& column) {
  std::string line;
  if (!std::getline(in, line)) throw ArtifactError("per-instance CSV is empty");
  std::vector<std::string> header;
  {
    std::istringstream fields(line);
    std::string f;
    while (std::getline(fields, f, ',')) header.push_back(f);
  }
  if (header.empty() || header[0] != "id") throw ArtifactError("per-instance CSV: first column must be 'id'");
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw ArtifactError("per-instance CSV has no column '" + column + "'");
  const auto col = static_cast<std::size_t>(it - header.begin());

  std::pair<std::vector<std::int64_t>, std::vector<double>> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string f;
    while (std::getline(row, f, ',')) fields.push_back(f);
    if (fields.size() != header.size()) {
      throw ArtifactError("per-instance CSV line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields");
    }
    try {
      out.first.push_back(std::stoll(fields[0]));
      out.second.push_back(std::stod(fields[col]));
    } catch (const std::exception&) {
      throw ArtifactError("per-instance CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> missed_tag_analysis(
    const std::vector<EvalInstance>& instances, const std::vector<double>& f1_at_5) {
  if (instances.size() != f1_at_5.size()) {
    throw UsageError("missed_tag_analysis: " + std::to_string(instances.size()) + " instances but " +
                     std::to_string(f1_at_5.size()) + " scores");
  }
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (f1_at_5[i] != 0.0) continue;
    for (const auto& tag : instances[i].ground_truth) ++counts[tag];
  }
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<EvalInstance> predict_corpus(const TagModel& model, const Tokenizer& tokenizer,
                                         const std::vector<DecomposedPost>& corpus, int workers) {
  const std::size_t k = std::min(kMaxK, model.vocab().size());
  std::vector<EvalInstance> out(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4) num_threads(std::max(workers, 1))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& post = corpus[static_cast<std::size_t>(i)];
      auto& inst = out[static_cast<std::size_t>(i)];
      inst.id = post.id;
      inst.ground_truth = post.tags;
      inst.ranked_prediction =
          predict_top_k(model.predict(encode_post(tokenizer, post, model.config())), k, model.vocab());
    } catch (...) {
#pragma omp critical(tagrec_predict_corpus)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace tagrec
