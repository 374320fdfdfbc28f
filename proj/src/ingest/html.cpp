#include "tagrec/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace tagrec::html {
namespace {

constexpr std::array<std::string_view, 22> kBlockElements = {
    "p",  "div", "br", "hr", "li", "ul",         "ol",    "h1", "h2", "h3", "h4",
    "h5", "h6",  "pre", "blockquote", "table", "tr", "td", "th", "dl", "dt", "dd"};

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string lower_name(std::string_view tag_body) {
  std::size_t i = 0;
  if (i < tag_body.size() && tag_body[i] == '/') ++i;
  std::string name;
  while (i < tag_body.size() && std::isalnum(static_cast<unsigned char>(tag_body[i]))) {
    name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(tag_body[i]))));
    ++i;
  }
  return name;
}

bool is_block(std::string_view name) {
  return std::find(kBlockElements.begin(), kBlockElements.end(), name) != kBlockElements.end();
}

// Position one past the '>' closing a tag that starts at `open`, honouring
// quoted attribute values; npos when unterminated.
std::size_t tag_end(std::string_view text, std::size_t open) {
  char quote = 0;
  for (std::size_t i = open + 1; i < text.size(); ++i) {
    const char c = text[i];
    if (quote != 0) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i + 1;
    } else if (c == '<') {
      return std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

bool parse_number(std::string_view digits, int base, std::uint32_t& out) {
  if (digits.empty() || digits.size() > 8) return false;
  std::uint32_t value = 0;
  for (char c : digits) {
    int d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (base == 16 && c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else if (base == 16 && c >= 'A' && c <= 'F') {
      d = c - 'A' + 10;
    } else {
      return false;
    }
    value = value * static_cast<std::uint32_t>(base) + static_cast<std::uint32_t>(d);
  }
  out = value;
  return true;
}

}  // namespace

bool append_utf8(std::string& out, std::uint32_t cp) {
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return true;
}

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    const std::size_t semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(text[i++]);
      continue;
    }
    const std::string_view name = text.substr(i + 1, semi - i - 1);
    bool decoded = true;
    if (name == "lt") {
      out.push_back('<');
    } else if (name == "gt") {
      out.push_back('>');
    } else if (name == "amp") {
      out.push_back('&');
    } else if (name == "quot") {
      out.push_back('"');
    } else if (name == "apos") {
      out.push_back('\'');
    } else if (name.size() > 1 && name[0] == '#') {
      std::uint32_t cp = 0;
      const bool hex = name[1] == 'x' || name[1] == 'X';
      decoded = parse_number(name.substr(hex ? 2 : 1), hex ? 16 : 10, cp) && cp != 0 &&
                append_utf8(out, cp);
    } else {
      decoded = false;
    }
    if (decoded) {
      i = semi + 1;
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

std::string strip_tags(std::string_view text, bool block_breaks) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '<') {
      out.push_back(text[i++]);
      continue;
    }
    if (text.substr(i, 4) == "<!--") {
      const std::size_t close = text.find("-->", i + 4);
      if (close == std::string_view::npos) {
        out.push_back(text[i++]);
        continue;
      }
      i = close + 3;
      continue;
    }
    const bool looks_like_tag =
        i + 1 < text.size() &&
        (is_alpha(text[i + 1]) || text[i + 1] == '!' || text[i + 1] == '?' ||
         (text[i + 1] == '/' && i + 2 < text.size() && is_alpha(text[i + 2])));
    const std::size_t end = looks_like_tag ? tag_end(text, i) : std::string_view::npos;
    if (end == std::string_view::npos) {
      out.push_back(text[i++]);
      continue;
    }
    if (block_breaks && is_block(lower_name(text.substr(i + 1, end - i - 2)))) {
      out.push_back(' ');
    }
    i = end;
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace tagrec::html
