#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagrec/ingest.hpp"

namespace tagrec {

// Closed label space. Tags are indexed by descending corpus count, then name.
class TagVocabulary {
 public:
  TagVocabulary() = default;
  TagVocabulary(std::vector<std::string> tags, std::vector<std::uint64_t> counts,
                std::uint64_t theta);

  std::size_t size() const noexcept { return tags_.size(); }
  const std::vector<std::string>& tags() const noexcept { return tags_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t theta() const noexcept { return theta_; }

  const std::string& name(std::size_t index) const { return tags_.at(index); }
  std::optional<std::size_t> index(const std::string& tag) const;
  bool contains(const std::string& tag) const { return index(tag).has_value(); }

  std::string to_json() const;
  static TagVocabulary from_json(const std::string& text);
  void save(const std::string& path) const;
  static TagVocabulary load(const std::string& path);

  // FNV-1a over the canonical JSON form; pins checkpoints to a label space.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> tags_;
  std::vector<std::uint64_t> counts_;
  std::map<std::string, std::size_t> index_;
  std::uint64_t theta_ = 1;
};

// A tag is rare when it occurs in fewer than `theta` posts.
TagVocabulary build_tag_vocab(const std::vector<DecomposedPost>& corpus, std::uint64_t theta);

// Drops rare tags from every post, then drops posts left without tags.
std::vector<DecomposedPost> filter_posts(const std::vector<DecomposedPost>& corpus,
                                         const TagVocabulary& vocab);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace tagrec
