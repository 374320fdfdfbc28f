#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tagrec {

// Milliseconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;

// Parses the dump's CreationDate form, "YYYY-MM-DDTHH:MM:SS" with an optional
// fractional part. Returns nullopt on anything else.
std::optional<Timestamp> parse_timestamp(const std::string& text);

struct RawPost {
  std::int64_t id = 0;
  int post_type = 0;
  std::string creation_date;  // as written in the dump
  Timestamp created_at = 0;
  std::string title;
  std::string body;  // HTML
  std::vector<std::string> tags;
};

struct DecomposedPost {
  std::int64_t id = 0;
  std::string date;
  Timestamp created_at = 0;
  std::string title;
  std::string description;
  std::string code;
  std::vector<std::string> tags;

  bool operator==(const DecomposedPost&) const = default;
};

// Splits the `<t1><t2>...` tag encoding. Returns nullopt when the attribute
// does not follow that shape.
std::optional<std::vector<std::string>> parse_tag_list(const std::string& encoded);

struct IngestStats {
  std::uint64_t rows = 0;
  std::uint64_t questions = 0;         // emitted
  std::uint64_t non_questions = 0;     // PostTypeId != 1
  std::uint64_t untagged = 0;          // question without a Tags attribute
  std::uint64_t missing_fields = 0;    // Id, Body or CreationDate absent or invalid
  std::uint64_t bad_tags = 0;          // Tags malformed or more than five entries
};

// Streaming reader over a Stack Exchange Posts.xml dump. Yields questions in
// file order; memory use does not grow with the dump.
class DumpReader {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  explicit DumpReader(std::istream& in, WarningSink on_warning = {});
  ~DumpReader();
  DumpReader(const DumpReader&) = delete;
  DumpReader& operator=(const DumpReader&) = delete;

  std::optional<RawPost> next();
  const IngestStats& stats() const noexcept { return stats_; }

 private:
  class XmlRows;
  std::unique_ptr<XmlRows> rows_;
  WarningSink on_warning_;
  IngestStats stats_;
};

std::vector<RawPost> parse_dump(std::istream& in, IngestStats* stats = nullptr);

// Code blocks are the captures of <pre><code>([\s\S]*?)</code></pre>, joined
// by '\n' in document order; Description is what remains of the body.
DecomposedPost decompose(const RawPost& post);

// Oldest posts go to train; the `test_count` most recent (ties: higher id)
// to test. Both halves come back in chronological order.
std::pair<std::vector<DecomposedPost>, std::vector<DecomposedPost>> chronological_split(
    std::vector<DecomposedPost> posts, std::size_t test_count);

// JSONL corpus, one object per line: {id, date, title, description, code, tags}.
std::string to_json_line(const DecomposedPost& post);
DecomposedPost from_json_line(const std::string& line);
void write_corpus(std::ostream& out, const std::vector<DecomposedPost>& posts);
std::vector<DecomposedPost> read_corpus(std::istream& in);
std::vector<DecomposedPost> read_corpus_file(const std::string& path);
void write_corpus_file(const std::string& path, const std::vector<DecomposedPost>& posts);

struct IngestOptions {
  int workers = 1;
  std::size_t chunk_rows = 1024;
};

// Posts.xml -> JSONL, decomposing chunks of rows in parallel while keeping
// file order. Returns the row statistics.
IngestStats ingest_dump(std::istream& xml, std::ostream& jsonl, const IngestOptions& options,
                        DumpReader::WarningSink on_warning = {});

}  // namespace tagrec
