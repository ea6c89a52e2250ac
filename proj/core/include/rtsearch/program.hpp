#pragma once

#include "rtsearch/controller.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rts {

// Lines of an input fixture; a trailing newline does not add an empty line
// and CRLF endings are accepted.
std::vector<std::string> split_input(std::string_view text);
std::vector<std::string> read_input_fixture(const std::filesystem::path& path);

// Compiles `units`, instruments them with `scope` and packages the result
// for a debug session.
ProgramBundle make_bundle(std::vector<SourceUnit> units, std::string_view scope,
                          std::vector<std::string> input = {});

} // namespace rts
