#include "tagrec/tag_vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "tagrec/errors.hpp"

namespace tagrec {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

TagVocabulary::TagVocabulary(std::vector<std::string> tags, std::vector<std::uint64_t> counts,
                             std::uint64_t theta)
    : tags_(std::move(tags)), counts_(std::move(counts)), theta_(theta) {
  if (tags_.size() != counts_.size()) throw ArtifactError("tag vocabulary: tags/counts length differ");
  if (theta_ < 1) throw ConfigError("theta must be >= 1");
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (counts_[i] < theta_) {
      throw ArtifactError("tag vocabulary: '" + tags_[i] + "' has count below theta");
    }
    if (!index_.emplace(tags_[i], i).second) {
      throw ArtifactError("tag vocabulary: duplicate tag '" + tags_[i] + "'");
    }
  }
}

std::optional<std::size_t> TagVocabulary::index(const std::string& tag) const {
  const auto it = index_.find(tag);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string TagVocabulary::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "tagrec-tags";
  j["version"] = 1;
  j["theta"] = theta_;
  j["tags"] = tags_;
  j["counts"] = counts_;
  return j.dump(2);
}

TagVocabulary TagVocabulary::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "tagrec-tags") throw ArtifactError("not a tag vocabulary file");
    if (j.at("version") != 1) throw ArtifactError("unsupported tag vocabulary version");
    return TagVocabulary(j.at("tags").get<std::vector<std::string>>(),
                         j.at("counts").get<std::vector<std::uint64_t>>(),
                         j.at("theta").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("tag vocabulary: ") + e.what());
  }
}

void TagVocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path);
  out << to_json() << '\n';
}

TagVocabulary TagVocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open tag vocabulary " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::uint64_t TagVocabulary::content_hash() const { return fnv1a64(to_json()); }

TagVocabulary build_tag_vocab(const std::vector<DecomposedPost>& corpus, std::uint64_t theta) {
  if (corpus.empty()) throw UsageError("build_tag_vocab: empty corpus");
  if (theta < 1) throw ConfigError("theta must be >= 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& post : corpus) {
    const std::set<std::string> unique(post.tags.begin(), post.tags.end());
    for (const auto& tag : unique) ++counts[tag];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tag, count] : counts) {
    if (count >= theta) kept.emplace_back(tag, count);
  }
  if (kept.empty()) {
    throw ConfigError("empty label space: every tag occurs fewer than " + std::to_string(theta) +
                      " times");
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tags;
  std::vector<std::uint64_t> tag_counts;
  for (auto& [tag, count] : kept) {
    tags.push_back(tag);
    tag_counts.push_back(count);
  }
  return TagVocabulary(std::move(tags), std::move(tag_counts), theta);
}

std::vector<DecomposedPost> filter_posts(const std::vector<DecomposedPost>& corpus,
                                         const TagVocabulary& vocab) {
  std::vector<DecomposedPost> out;
  out.reserve(corpus.size());
  for (const auto& post : corpus) {
    DecomposedPost kept = post;
    std::erase_if(kept.tags, [&](const std::string& t) { return !vocab.contains(t); });
    if (!kept.tags.empty()) out.push_back(std::move(kept));
  }
  return out;
}

}  // namespace tagrec
