#include "rtsearch/query.hpp"
#include "rtsearch/error.hpp"

namespace rts {

namespace {

char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Case-folded substring search without allocating.
std::size_t find_folded(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.size() > hay.size()) {
    return std::string_view::npos;
  }
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    std::size_t k = 0;
    while (k < needle.size() && ascii_lower(hay[i + k]) == needle[k]) {
      ++k;
    }
    if (k == needle.size()) {
      return i;
    }
  }
  return std::string_view::npos;
}

} // namespace

Matcher::Matcher(Query query) : query_(std::move(query)) {
  if (query_.text.empty()) {
    throw Error(Errc::empty_query, "query text is empty");
  }
  if (query_.regex) {
    auto flags = std::regex::ECMAScript;
    if (!query_.match_case) {
      flags |= std::regex::icase;
    }
    try {
      pattern_ = std::make_shared<const std::regex>(query_.text, flags);
    } catch (const std::regex_error& e) {
      throw Error(Errc::invalid_regex, "'" + query_.text + "': " + e.what());
    }
    return;
  }
  needle_ = query_.text;
  if (!query_.match_case) {
    for (auto& c : needle_) {
      c = ascii_lower(c);
    }
  }
}

bool Matcher::word_bounded(std::string_view value, std::size_t pos, std::size_t len) const {
  bool left = pos == 0 || !is_word_char(value[pos - 1]);
  bool right = pos + len >= value.size() || !is_word_char(value[pos + len]);
  return left && right;
}

bool Matcher::matches(std::string_view value) const {
  if (pattern_) {
    using It = std::string_view::const_iterator;
    std::regex_iterator<It> it(value.begin(), value.end(), *pattern_);
    for (; it != std::regex_iterator<It>(); ++it) {
      if (!query_.whole_word ||
          word_bounded(value, static_cast<std::size_t>(it->position()),
                       static_cast<std::size_t>(it->length()))) {
        return true;
      }
    }
    return false;
  }
  std::size_t pos = 0;
  for (;;) {
    pos = query_.match_case ? value.find(needle_, pos) : find_folded(value, needle_, pos);
    if (pos == std::string_view::npos) {
      return false;
    }
    if (!query_.whole_word || word_bounded(value, pos, needle_.size())) {
      return true;
    }
    ++pos;
  }
}

bool matches(std::string_view value, const Query& query) { return Matcher(query).matches(value); }

} // namespace rts
