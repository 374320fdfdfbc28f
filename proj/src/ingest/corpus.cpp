#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "tagrec/errors.hpp"
#include "tagrec/ingest.hpp"

namespace tagrec {

std::pair<std::vector<DecomposedPost>, std::vector<DecomposedPost>> chronological_split(
    std::vector<DecomposedPost> posts, std::size_t test_count) {
  if (test_count > posts.size()) {
    throw ConfigError("test_count " + std::to_string(test_count) + " exceeds corpus size " +
                      std::to_string(posts.size()));
  }
  std::stable_sort(posts.begin(), posts.end(), [](const auto& a, const auto& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
  });
  const auto cut = posts.end() - static_cast<std::ptrdiff_t>(test_count);
  std::vector<DecomposedPost> test(std::make_move_iterator(cut),
                                   std::make_move_iterator(posts.end()));
  posts.erase(cut, posts.end());
  return {std::move(posts), std::move(test)};
}

std::string to_json_line(const DecomposedPost& post) {
  nlohmann::ordered_json j;
  j["id"] = post.id;
  j["date"] = post.date;
  j["title"] = post.title;
  j["description"] = post.description;
  j["code"] = post.code;
  j["tags"] = post.tags;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

DecomposedPost from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  DecomposedPost post;
  post.id = j.at("id").get<std::int64_t>();
  post.date = j.at("date").get<std::string>();
  const auto ts = parse_timestamp(post.date);
  if (!ts) throw ArtifactError("post " + std::to_string(post.id) + ": invalid date " + post.date);
  post.created_at = *ts;
  post.title = j.at("title").get<std::string>();
  post.description = j.at("description").get<std::string>();
  post.code = j.at("code").get<std::string>();
  post.tags = j.at("tags").get<std::vector<std::string>>();
  if (post.tags.empty() || post.tags.size() > 5) {
    throw ArtifactError("post " + std::to_string(post.id) + ": expected 1-5 tags");
  }
  return post;
}

void write_corpus(std::ostream& out, const std::vector<DecomposedPost>& posts) {
  for (const auto& post : posts) out << to_json_line(post) << '\n';
}

std::vector<DecomposedPost> read_corpus(std::istream& in) {
  std::vector<DecomposedPost> posts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      posts.push_back(from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw ArtifactError("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ArtifactError& e) {
      throw ArtifactError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return posts;
}

std::vector<DecomposedPost> read_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open corpus " + path);
  return read_corpus(in);
}

void write_corpus_file(const std::string& path, const std::vector<DecomposedPost>& posts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path);
  write_corpus(out, posts);
}

IngestStats ingest_dump(std::istream& xml, std::ostream& jsonl, const IngestOptions& options,
                        DumpReader::WarningSink on_warning) {
  DumpReader reader(xml, std::move(on_warning));
  const std::size_t chunk = std::max<std::size_t>(options.chunk_rows, 1);
  std::vector<RawPost> raw;
  std::vector<std::string> lines;
  raw.reserve(chunk);
  bool done = false;
  while (!done) {
    raw.clear();
    while (raw.size() < chunk) {
      auto post = reader.next();
      if (!post) {
        done = true;
        break;
      }
      raw.push_back(std::move(*post));
    }
    lines.assign(raw.size(), {});
    const auto n = static_cast<std::ptrdiff_t>(raw.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(std::max(options.workers, 1))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      lines[static_cast<std::size_t>(i)] = to_json_line(decompose(raw[static_cast<std::size_t>(i)]));
    }
    for (const auto& line : lines) jsonl << line << '\n';
  }
  return reader.stats();
}

}  // namespace tagrec
