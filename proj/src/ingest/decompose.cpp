#include <string_view>

#include "tagrec/html.hpp"
#include "tagrec/ingest.hpp"

namespace tagrec {

DecomposedPost decompose(const RawPost& post) {
  static constexpr std::string_view kOpen = "<pre><code>";
  static constexpr std::string_view kClose = "</code></pre>";

  const std::string_view body = post.body;
  std::string remainder;
  std::string code;
  bool first_block = true;
  std::size_t pos = 0;
  // Leftmost-shortest matching, identical to the lazy [\s\S]*? capture.
  for (;;) {
    const std::size_t open = body.find(kOpen, pos);
    if (open == std::string_view::npos) break;
    const std::size_t inner = open + kOpen.size();
    const std::size_t close = body.find(kClose, inner);
    if (close == std::string_view::npos) break;
    remainder.append(body.substr(pos, open - pos));
    if (!first_block) code.push_back('\n');
    code += html::decode_entities(html::strip_tags(body.substr(inner, close - inner), false));
    first_block = false;
    pos = close + kClose.size();
  }
  remainder.append(body.substr(pos));

  DecomposedPost out;
  out.id = post.id;
  out.date = post.creation_date;
  out.created_at = post.created_at;
  out.title = html::collapse_whitespace(post.title);
  out.description =
      html::collapse_whitespace(html::decode_entities(html::strip_tags(remainder, true)));
  out.code = std::move(code);
  out.tags = post.tags;
  return out;
}

}  // namespace tagrec
