#pragma once

#include <memory>
#include <regex>
#include <string>
#include <string_view>

namespace rts {

struct Query {
  std::string text;
  bool match_case = true;
  bool whole_word = false;
  bool regex = false;
  bool skip_repeated_site = false;

  bool operator==(const Query&) const = default;
};

// A validated query, ready for repeated matching on the capture path.
class Matcher {
public:
  // Throws Errc::empty_query or Errc::invalid_regex.
  explicit Matcher(Query query);

  bool matches(std::string_view value) const;
  const Query& query() const { return query_; }

private:
  bool word_bounded(std::string_view value, std::size_t pos, std::size_t len) const;

  Query query_;
  std::string needle_; // lowercased when !match_case
  std::shared_ptr<const std::regex> pattern_;
};

// Convenience form; compiles the query on every call.
bool matches(std::string_view value, const Query& query);

} // namespace rts
