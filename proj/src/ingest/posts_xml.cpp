#include <algorithm>
#include <cctype>
#include <chrono>
#include <istream>
#include <streambuf>

#include "tagrec/errors.hpp"
#include "tagrec/html.hpp"
#include "tagrec/ingest.hpp"

namespace tagrec {

using Attributes = std::vector<std::pair<std::string, std::string>>;

// Pull parser for the `<posts><row .../>...</posts>` document shape. Accepts
// an XML declaration, processing instructions and comments around the rows;
// anything else is reported as malformed with the byte offset where it was
// detected.
class DumpReader::XmlRows {
 public:
  explicit XmlRows(std::istream& in) : buf_(in.rdbuf()) {}

  std::optional<Attributes> next() {
    if (state_ == State::prolog) read_prolog();
    while (state_ == State::in_root) {
      skip_space();
      const int c = get();
      if (c == eof) fail("unexpected end of input inside <" + root_ + ">");
      if (c != '<') fail("unexpected character data inside <" + root_ + ">");
      const int n = peek();
      if (n == '!') {
        get();
        skip_comment_body();
      } else if (n == '?') {
        get();
        skip_processing_instruction();
      } else if (n == '/') {
        get();
        const std::string name = read_name();
        if (name != root_) fail("mismatched end tag </" + name + ">");
        skip_space();
        expect('>');
        state_ = State::epilog;
        read_epilog();
      } else {
        const std::string name = read_name();
        if (name != "row") fail("unexpected element <" + name + ">");
        Attributes attrs = read_attributes();
        if (peek() == '/') {
          get();
          expect('>');
        } else {
          expect('>');
          skip_space();
          expect('<');
          expect('/');
          if (read_name() != "row") fail("expected </row>");
          skip_space();
          expect('>');
        }
        return attrs;
      }
    }
    return std::nullopt;
  }

 private:
  enum class State { prolog, in_root, epilog };
  static constexpr int eof = std::char_traits<char>::eof();

  int peek() { return buf_->sgetc(); }

  int get() {
    const int c = buf_->sbumpc();
    if (c != eof) ++offset_;
    return c;
  }

  [[noreturn]] void fail(const std::string& what) const { throw XmlParseError(offset_, what); }

  void expect(char want) {
    const int c = get();
    if (c != static_cast<unsigned char>(want)) {
      fail(std::string("expected '") + want + "'" +
           (c == eof ? std::string(" before end of input") : std::string()));
    }
  }

  void skip_space() {
    for (int c = peek(); c == ' ' || c == '\t' || c == '\n' || c == '\r'; c = peek()) get();
  }

  static bool name_start(int c) {
    return c != eof && (std::isalpha(c) || c == '_' || c == ':' || c >= 0x80);
  }
  static bool name_char(int c) {
    return name_start(c) || (c != eof && (std::isdigit(c) || c == '-' || c == '.'));
  }

  std::string read_name() {
    if (!name_start(peek())) fail("expected a name");
    std::string name;
    while (name_char(peek())) name.push_back(static_cast<char>(get()));
    return name;
  }

  // After "<!".
  void skip_comment_body() {
    if (get() != '-' || get() != '-') fail("unsupported markup declaration");
    int dashes = 0;
    for (;;) {
      const int c = get();
      if (c == eof) fail("unterminated comment");
      if (c == '>' && dashes >= 2) return;
      dashes = c == '-' ? dashes + 1 : 0;
    }
  }

  // After "<?".
  void skip_processing_instruction() {
    int prev = 0;
    for (;;) {
      const int c = get();
      if (c == eof) fail("unterminated processing instruction");
      if (c == '>' && prev == '?') return;
      prev = c;
    }
  }

  void read_prolog() {
    if (peek() == 0xEF) {
      get();
      if (get() != 0xBB || get() != 0xBF) fail("invalid byte order mark");
    }
    for (;;) {
      skip_space();
      const int c = get();
      if (c == eof) fail("no root element");
      if (c != '<') fail("unexpected character data before root element");
      const int n = peek();
      if (n == '?') {
        get();
        skip_processing_instruction();
      } else if (n == '!') {
        get();
        skip_comment_body();
      } else {
        root_ = read_name();
        read_attributes();
        if (peek() == '/') {
          get();
          expect('>');
          state_ = State::epilog;
          read_epilog();
        } else {
          expect('>');
          state_ = State::in_root;
        }
        return;
      }
    }
  }

  void read_epilog() {
    for (;;) {
      skip_space();
      const int c = get();
      if (c == eof) return;
      if (c != '<') fail("content after root element");
      const int n = get();
      if (n == '!') {
        skip_comment_body();
      } else if (n == '?') {
        skip_processing_instruction();
      } else {
        fail("second root element");
      }
    }
  }

  void read_reference(std::string& out) {
    std::string name;
    for (;;) {
      const int c = get();
      if (c == eof) fail("unterminated entity reference");
      if (c == ';') break;
      if (name.size() > 10) fail("entity reference too long");
      name.push_back(static_cast<char>(c));
    }
    const std::string raw = "&" + name + ";";
    const std::string decoded = html::decode_entities(raw);
    if (decoded == raw) fail("unknown entity " + raw);
    out += decoded;
  }

  Attributes read_attributes() {
    Attributes attrs;
    for (;;) {
      skip_space();
      const int c = peek();
      if (c == '/' || c == '>') return attrs;
      if (c == eof) fail("unexpected end of input inside a tag");
      std::string name = read_name();
      skip_space();
      expect('=');
      skip_space();
      const int quote = get();
      if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
      std::string value;
      for (;;) {
        const int v = get();
        if (v == eof) fail("unterminated attribute value");
        if (v == quote) break;
        if (v == '<') fail("'<' in attribute value");
        if (v == '&') {
          read_reference(value);
        } else if (v == '\t' || v == '\n' || v == '\r') {
          value.push_back(' ');
        } else {
          value.push_back(static_cast<char>(v));
        }
      }
      const bool duplicate = std::any_of(attrs.begin(), attrs.end(),
                                         [&](const auto& kv) { return kv.first == name; });
      if (duplicate) fail("duplicate attribute " + name);
      attrs.emplace_back(std::move(name), std::move(value));
    }
  }

  std::streambuf* buf_;
  std::uint64_t offset_ = 0;
  State state_ = State::prolog;
  std::string root_;
};

namespace {

const std::string* find_attr(const Attributes& attrs, std::string_view name) {
  for (const auto& [key, value] : attrs) {
    if (key == name) return &value;
  }
  return nullptr;
}

std::optional<std::int64_t> parse_positive(const std::string& s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  if (v <= 0) return std::nullopt;
  return v;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(const std::string& text) {
  // YYYY-MM-DDTHH:MM:SS[.fff...]
  if (text.size() < 19) return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len, int& out) {
    out = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return false;
      out = out * 10 + (text[i] - '0');
    }
    return true;
  };
  int y, mo, d, h, mi, s;
  if (!digits(0, 4, y) || text[4] != '-' || !digits(5, 2, mo) || text[7] != '-' ||
      !digits(8, 2, d) || text[10] != 'T' || !digits(11, 2, h) || text[13] != ':' ||
      !digits(14, 2, mi) || text[16] != ':' || !digits(17, 2, s)) {
    return std::nullopt;
  }
  int millis = 0;
  if (text.size() > 19) {
    if (text[19] != '.' || text.size() == 20) return std::nullopt;
    int scale = 100;
    for (std::size_t i = 20; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      millis += (text[i] - '0') * scale;
      scale /= 10;
    }
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(mo)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return ((static_cast<Timestamp>(days) * 24 + h) * 60 + mi) * 60000 +
         static_cast<Timestamp>(s) * 1000 + millis;
}

std::optional<std::vector<std::string>> parse_tag_list(const std::string& encoded) {
  std::vector<std::string> tags;
  std::size_t i = 0;
  while (i < encoded.size()) {
    if (encoded[i] != '<') return std::nullopt;
    const std::size_t close = encoded.find('>', i + 1);
    if (close == std::string::npos || close == i + 1) return std::nullopt;
    std::string tag = encoded.substr(i + 1, close - i - 1);
    if (tag.find('<') != std::string::npos) return std::nullopt;
    tags.push_back(std::move(tag));
    i = close + 1;
  }
  return tags;
}

DumpReader::DumpReader(std::istream& in, WarningSink on_warning)
    : rows_(std::make_unique<XmlRows>(in)), on_warning_(std::move(on_warning)) {}

DumpReader::~DumpReader() = default;

std::optional<RawPost> DumpReader::next() {
  while (auto attrs = rows_->next()) {
    ++stats_.rows;
    const std::string* type = find_attr(*attrs, "PostTypeId");
    if (type == nullptr || *type != "1") {
      ++stats_.non_questions;
      continue;
    }
    const std::string* tags = find_attr(*attrs, "Tags");
    if (tags == nullptr || tags->empty()) {
      ++stats_.untagged;
      continue;
    }
    const std::string* id = find_attr(*attrs, "Id");
    const std::string* body = find_attr(*attrs, "Body");
    const std::string* date = find_attr(*attrs, "CreationDate");
    const auto parsed_id = id ? parse_positive(*id) : std::nullopt;
    const auto parsed_date = date ? parse_timestamp(*date) : std::nullopt;
    if (!parsed_id || body == nullptr || !parsed_date) {
      ++stats_.missing_fields;
      if (on_warning_) {
        on_warning_("row " + std::to_string(stats_.rows) + " skipped: " +
                    (!parsed_id ? "missing or invalid Id"
                     : body == nullptr ? "missing Body"
                                       : "missing or invalid CreationDate"));
      }
      continue;
    }
    auto tag_list = parse_tag_list(*tags);
    if (!tag_list || tag_list->empty() || tag_list->size() > 5) {
      ++stats_.bad_tags;
      if (on_warning_) {
        on_warning_("post " + *id + " skipped: malformed or oversized Tags \"" + *tags + "\"");
      }
      continue;
    }
    RawPost post;
    post.id = *parsed_id;
    post.post_type = 1;
    post.creation_date = *date;
    post.created_at = *parsed_date;
    if (const std::string* title = find_attr(*attrs, "Title")) post.title = *title;
    post.body = *body;
    post.tags = std::move(*tag_list);
    ++stats_.questions;
    return post;
  }
  return std::nullopt;
}

std::vector<RawPost> parse_dump(std::istream& in, IngestStats* stats) {
  DumpReader reader(in);
  std::vector<RawPost> posts;
  while (auto post = reader.next()) posts.push_back(std::move(*post));
  if (stats != nullptr) *stats = reader.stats();
  return posts;
}

}  // namespace tagrec
