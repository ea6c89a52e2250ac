#include "rtsearch/program.hpp"

#include "rtsearch/error.hpp"
#include "rtsearch/instrumenter.hpp"

#include <fstream>
#include <sstream>

namespace rts {

std::vector<std::string> split_input(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> read_input_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot read input fixture " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return split_input(text.str());
}

ProgramBundle make_bundle(std::vector<SourceUnit> units, std::string_view scope,
                          std::vector<std::string> input) {
  ScopePattern pattern(scope);
  ProgramImage image = build_program(units);
  ProgramBundle bundle;
  bundle.image = std::make_shared<const ProgramImage>(instrument(image, pattern));
  bundle.sources = std::move(units);
  bundle.input = std::move(input);
  return bundle;
}

} // namespace rts
