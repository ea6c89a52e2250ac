#include "support.hpp"

#include "rtsearch/instrumenter.hpp"
#include "rtsearch/program.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace support {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) { return rts::split_input(text); }

std::vector<CorpusProgram> load_corpus(const fs::path& dir) {
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() || e.path().extension() == ".mls") {
      entries.push_back(e.path());
    }
  }
  std::sort(entries.begin(), entries.end());
  std::vector<CorpusProgram> out;
  for (const auto& p : entries) {
    CorpusProgram prog;
    prog.name = p.filename().string();
    fs::path input;
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".mls") {
          files.push_back(e.path());
        }
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        prog.units.push_back(rts::SourceUnit::from_file(f));
      }
      input = p / "input.in";
    } else {
      prog.units.push_back(rts::SourceUnit::from_file(p));
      input = fs::path(p).replace_extension(".in");
    }
    if (fs::exists(input)) {
      prog.input = rts::read_input_fixture(input);
    }
    out.push_back(std::move(prog));
  }
  return out;
}

std::shared_ptr<const rts::ProgramImage> compile_units(const std::vector<rts::SourceUnit>& units) {
  return std::make_shared<const rts::ProgramImage>(rts::build_program(units));
}

std::shared_ptr<const rts::ProgramImage> compile_text(const std::string& source,
                                                      const std::string& unit) {
  return compile_units({rts::SourceUnit::from_text(unit, source)});
}

std::shared_ptr<const rts::ProgramImage> instrumented(const std::vector<rts::SourceUnit>& units,
                                                      const std::string& scope) {
  return std::make_shared<const rts::ProgramImage>(
      rts::instrument(rts::build_program(units), rts::ScopePattern(scope)));
}

std::shared_ptr<const rts::ProgramImage> instrumented_text(const std::string& source,
                                                           const std::string& scope,
                                                           const std::string& unit) {
  return instrumented({rts::SourceUnit::from_text(unit, source)}, scope);
}

std::vector<std::string> RunResult::values() const {
  std::vector<std::string> v;
  for (const auto& c : captures) {
    v.push_back(c.value);
  }
  return v;
}

namespace {

struct Recorder : rts::VmHooks {
  RunResult& r;
  explicit Recorder(RunResult& r) : r(r) {}
  rts::Control on_capture(const rts::CaptureSite& site, const std::string& value) override {
    r.captures.push_back(Captured{site, value});
    return rts::Control::proceed;
  }
  void on_output(std::string_view text) override { r.out += text; }
};

} // namespace

RunResult run(std::shared_ptr<const rts::ProgramImage> image, const std::vector<std::string>& input,
              rts::VmOptions options) {
  RunResult r;
  rts::Vm vm(std::move(image), options);
  vm.set_input(input);
  Recorder hooks(r);
  r.stop = vm.run(hooks).kind;
  return r;
}

std::vector<rts::StoppedEvent> EventLog::stops() const {
  std::vector<rts::StoppedEvent> out;
  for (const auto& e : events) {
    if (const auto* s = std::get_if<rts::StoppedEvent>(&e)) {
      out.push_back(*s);
    }
  }
  return out;
}

std::string EventLog::output() const {
  std::string out;
  for (const auto& e : events) {
    if (const auto* o = std::get_if<rts::OutputEvent>(&e)) {
      out += o->text;
    }
  }
  return out;
}

bool EventLog::terminated(const std::string& reason) const {
  for (const auto& e : events) {
    if (const auto* t = std::get_if<rts::TerminatedEvent>(&e)) {
      return reason.empty() || t->reason == reason;
    }
  }
  return false;
}

rts::Command find_cmd(const std::string& text, bool match_case, bool skip) {
  rts::Command c(rts::CommandKind::find);
  c.query.text = text;
  c.query.match_case = match_case;
  c.query.skip_repeated_site = skip;
  return c;
}

rts::Reply drive(rts::SearchController& c, const rts::Command& cmd) {
  rts::Reply r = c.handle(cmd);
  c.flush();
  while (c.runnable()) {
    c.advance();
  }
  c.flush();
  return r;
}

} // namespace support

#include <chrono>
#include <condition_variable>
#include <mutex>

namespace support {

std::vector<std::string> replay_transcript(rts::ProgramBundle bundle,
                                           const std::vector<std::string>& golden) {
  std::mutex m;
  std::condition_variable cv;
  std::vector<std::string> received;
  rts::protocol::Endpoint endpoint(std::move(bundle), [&](const std::string& line) {
    {
      std::lock_guard lock(m);
      received.push_back(line);
    }
    cv.notify_all();
  });

  auto is_request = [](const std::string& line) {
    return nlohmann::json::parse(line).value("type", "") == "request";
  };

  std::vector<std::string> out;
  std::size_t expected = 0;
  for (std::size_t i = 0; i < golden.size(); ++i) {
    if (!is_request(golden[i])) {
      continue;
    }
    std::size_t j = i + 1;
    while (j < golden.size() && !is_request(golden[j])) {
      ++j;
    }
    std::size_t start = expected;
    expected += j - i - 1;
    out.push_back(golden[i]);
    endpoint.receive(golden[i]);
    std::unique_lock lock(m);
    cv.wait_for(lock, std::chrono::seconds(10), [&] { return received.size() >= expected; });
    for (std::size_t k = start; k < std::min(expected, received.size()); ++k) {
      out.push_back(received[k]);
    }
  }
  endpoint.close();
  std::lock_guard lock(m);
  for (std::size_t k = expected; k < received.size(); ++k) {
    out.push_back(received[k]); // anything unexpected shows up as a diff
  }
  return out;
}

} // namespace support
