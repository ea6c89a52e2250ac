#pragma once

#include "oracle/tracer.hpp"

#include "rtsearch/ast.hpp"
#include "rtsearch/protocol.hpp"
#include "rtsearch/controller.hpp"
#include "rtsearch/vm.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace support {

std::string slurp(const std::filesystem::path& path);
std::vector<std::string> lines_of(const std::string& text);

struct CorpusProgram {
  std::string name;
  std::vector<rts::SourceUnit> units;
  std::vector<std::string> input;
};

// Every `*.mls` file (with an optional sibling `.in`) and every directory
// of `.mls` files (with an optional `input.in`) is one program.
std::vector<CorpusProgram> load_corpus(const std::filesystem::path& dir = RTSEARCH_CORPUS_DIR);

std::shared_ptr<const rts::ProgramImage> compile_units(const std::vector<rts::SourceUnit>& units);
std::shared_ptr<const rts::ProgramImage> compile_text(const std::string& source,
                                                      const std::string& unit = "t");
std::shared_ptr<const rts::ProgramImage> instrumented(const std::vector<rts::SourceUnit>& units,
                                                      const std::string& scope = "*");
std::shared_ptr<const rts::ProgramImage> instrumented_text(const std::string& source,
                                                           const std::string& scope = "*",
                                                           const std::string& unit = "t");

struct Captured {
  rts::CaptureSite site;
  std::string value;
};

struct RunResult {
  std::string out;
  std::vector<Captured> captures;
  rts::StopKind stop = rts::StopKind::done;

  std::vector<std::string> values() const;
};

// Runs to completion (or fault) recording output and every capture.
RunResult run(std::shared_ptr<const rts::ProgramImage> image,
              const std::vector<std::string>& input = {}, rts::VmOptions options = {});

// Collects controller events and exposes them for assertions.
struct EventLog {
  std::vector<rts::Event> events;
  rts::SearchController::EventHandler handler() {
    return [this](const rts::Event& e) { events.push_back(e); };
  }
  std::vector<rts::StoppedEvent> stops() const;
  std::string output() const;
  bool terminated(const std::string& reason = "") const;
};

rts::Command find_cmd(const std::string& text, bool match_case = true, bool skip = false);

// Handles a command and then runs the controller until it stops again.
rts::Reply drive(rts::SearchController& c, const rts::Command& cmd);

} // namespace support

namespace support {

// Replays the request lines of an NDJSON transcript against a fresh
// endpoint. After each request, waits for as many outgoing lines as the
// transcript lists before the next request. Returns the resulting
// transcript (requests interleaved with what the endpoint sent).
std::vector<std::string> replay_transcript(rts::ProgramBundle bundle,
                                           const std::vector<std::string>& golden);

} // namespace support
