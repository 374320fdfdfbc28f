#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tagrec::html {

// Appends the UTF-8 encoding of a code point. Returns false for surrogates
// and values above U+10FFFF (nothing is appended).
bool append_utf8(std::string& out, std::uint32_t code_point);

// Decodes &lt; &gt; &amp; &quot; &apos; and numeric character references.
// Unknown or malformed references are copied through verbatim.
std::string decode_entities(std::string_view text);

// Removes HTML element tags and comments. When `block_breaks` is set, block
// level elements (p, div, li, br, ...) are replaced by a single space so
// that adjacent paragraphs do not run together; inline tags such as <code>
// are always removed without a trace, keeping their inner text.
std::string strip_tags(std::string_view text, bool block_breaks);

// Collapses runs of ASCII whitespace to one space and trims both ends.
std::string collapse_whitespace(std::string_view text);

}  // namespace tagrec::html
