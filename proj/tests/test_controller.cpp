#include "support.hpp"

#include "rtsearch/program.hpp"
#include "rtsearch/query.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>

using namespace rts;
using support::drive;
using support::EventLog;
using support::find_cmd;

namespace {

const std::string two_line = "fn main() {\n  let var = \"text\";\n  var = upper(var);\n}\n";

ProgramBundle bundle(const std::string& src, std::vector<std::string> input = {}) {
  return make_bundle({SourceUnit::from_text("demo", src)}, "*", std::move(input));
}

Command cmd(CommandKind k) { return Command(k); }

Command launch(bool stop_on_entry) {
  Command c(CommandKind::launch);
  c.stop_on_entry = stop_on_entry;
  return c;
}

const std::string counter =
    "fn main() {\n"
    "  let i = 0;\n"
    "  while (i < 2000) {\n"
    "    let s = \"v\" + i;\n"
    "    i = i + 1;\n"
    "  }\n"
    "  print(\"done\");\n"
    "}\n";

} // namespace

TEST_SUITE("controller") {

TEST_CASE("find from NotStarted launches and walks matches with findNext") {
  EventLog log;
  SearchController c(bundle(two_line), log.handler());
  CHECK(c.state() == SessionState::NotStarted);
  CHECK(drive(c, find_cmd("text", false)).ok);
  CHECK(c.state() == SessionState::PausedAtMatch);
  CHECK(c.searching());
  CHECK(drive(c, cmd(CommandKind::find_next)).ok);
  CHECK(drive(c, cmd(CommandKind::find_next)).ok);
  CHECK(c.state() == SessionState::PausedAtMatch);
  CHECK(drive(c, cmd(CommandKind::find_next)).ok);
  CHECK(c.state() == SessionState::Terminated);
  auto stops = log.stops();
  REQUIRE(stops.size() == 3);
  std::vector<std::string> values;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(stops[i].reason == "match");
    REQUIRE(stops[i].site);
    CHECK(stops[i].site->id == i);
    CHECK(stops[i].match_count == i + 1);
    values.push_back(stops[i].value);
  }
  CHECK(values == std::vector<std::string>{"text", "text", "TEXT"});
  CHECK(stops[0].line == 2);
  CHECK(stops[2].line == 3);
  CHECK(log.terminated("exited"));
}

TEST_CASE("a case-sensitive TEXT query pauses once at site 2") {
  EventLog log;
  SearchController c(bundle(two_line), log.handler());
  drive(c, find_cmd("TEXT"));
  CHECK(c.state() == SessionState::PausedAtMatch);
  CHECK(c.last_match_site() == 2u);
  drive(c, cmd(CommandKind::find_next));
  CHECK(c.state() == SessionState::Terminated);
  CHECK(log.stops().size() == 1);
  CHECK(c.match_count() == 1);
}

TEST_CASE("find from a paused session resumes it") {
  EventLog log;
  SearchController c(bundle(two_line), log.handler());
  drive(c, launch(true));
  CHECK(c.state() == SessionState::PausedAtStep);
  CHECK(log.stops().at(0).reason == "entry");
  CHECK_FALSE(c.searching());
  drive(c, find_cmd("TEXT"));
  CHECK(c.state() == SessionState::PausedAtMatch);
  CHECK(log.stops().back().value == "TEXT");
}

TEST_CASE("find while running swaps the query at the next poll") {
  EventLog log;
  SearchController c(bundle(counter), log.handler(), VmOptions{50, 10000});
  std::uint64_t captures_at_swap = 0;
  bool swapped = false;
  Reply swap_reply;
  SessionState state_at_swap = SessionState::NotStarted;
  c.set_poller([&](SearchController& s) {
    if (!swapped && s.capture_count() >= 300) {
      swapped = true;
      captures_at_swap = s.capture_count();
      state_at_swap = s.state();
      swap_reply = s.handle(find_cmd("v900"));
    }
  });
  // the old query matches late in the run, after the new one
  REQUIRE(c.handle(find_cmd("v1500")).ok);
  while (c.runnable()) {
    c.advance();
  }
  c.flush();
  CHECK(swapped);
  CHECK(state_at_swap == SessionState::Running);
  CHECK(swap_reply.ok);
  CHECK(c.state() == SessionState::PausedAtMatch);
  REQUIRE(log.stops().size() == 1);
  CHECK(log.stops()[0].value == "v900");
  CHECK(c.active_query()->text == "v900");
  CHECK(captures_at_swap < c.capture_count());
  // after the swap the old query never pauses the run
  c.set_poller({});
  drive(c, cmd(CommandKind::find_next));
  CHECK(c.state() == SessionState::Terminated);
  CHECK(log.stops().size() == 1);
}

TEST_CASE("a swapped query that already passed keeps running to the end") {
  EventLog log;
  SearchController c(bundle(counter), log.handler(), VmOptions{50, 10000});
  c.set_poller([&](SearchController& s) {
    if (s.capture_count() >= 3000 && s.active_query()->text == "zzz") {
      s.handle(find_cmd("v10"));
    }
  });
  c.handle(find_cmd("zzz"));
  while (c.runnable()) {
    c.advance();
  }
  c.flush();
  // two string captures per iteration: every value containing v10 is behind
  CHECK(log.stops().empty());
  CHECK(log.terminated("exited"));
}

TEST_CASE("a query swap never tears: each capture sees one query") {
  EventLog log;
  SearchController c(bundle(counter), log.handler(), VmOptions{1, 10000});
  int flips = 0;
  c.set_poller([&](SearchController& s) {
    if (s.state() == SessionState::Running && flips < 400) {
      ++flips;
      s.handle(find_cmd(flips % 2 ? "zzz" : "yyy"));
    }
  });
  c.handle(find_cmd("zzz"));
  while (c.runnable()) {
    c.advance();
  }
  c.flush();
  CHECK(log.stops().empty());
  CHECK(c.state() == SessionState::Terminated);
}

TEST_CASE("continue disables matching until the next find") {
  EventLog log;
  SearchController c(bundle(two_line), log.handler());
  drive(c, find_cmd("text", false));
  CHECK(drive(c, cmd(CommandKind::continue_run)).ok);
  CHECK(c.state() == SessionState::Terminated);
  CHECK(log.stops().size() == 1);
  CHECK(log.terminated("exited"));
  Reply r = drive(c, cmd(CommandKind::continue_run));
  CHECK_FALSE(r.ok);
  CHECK(r.error == "bad_state");
  CHECK(r.message.rfind("SessionOver", 0) == 0);
}

TEST_CASE("skip repeats pauses once per site") {
  const std::string loop =
      "fn main() {\n  let i = 0;\n  while (i < 1000) {\n    let s = \"tick\";\n    i = i + 1;\n  }\n}\n";
  {
    EventLog log;
    SearchController c(bundle(loop), log.handler());
    drive(c, find_cmd("tick", true, true));
    CHECK(c.state() == SessionState::PausedAtMatch);
    drive(c, cmd(CommandKind::find_next));
    CHECK(c.state() == SessionState::Terminated);
    CHECK(log.stops().size() == 1);
  }
  {
    EventLog log;
    SearchController c(bundle(loop), log.handler());
    drive(c, find_cmd("tick"));
    for (int i = 0; i < 4; ++i) {
      drive(c, cmd(CommandKind::find_next));
    }
    auto stops = log.stops();
    REQUIRE(stops.size() == 5);
    for (const auto& s : stops) {
      CHECK(s.site->id == stops[0].site->id);
    }
    CHECK(c.state() == SessionState::PausedAtMatch);
  }
}

TEST_CASE("skip repeats still pauses at a different site") {
  EventLog log;
  SearchController c(bundle("fn main() {\n  let i = 0;\n  while (i < 3) {\n    let s = \"ab\";\n"
                            "    i = i + 1;\n  }\n  print(\"abc\");\n}\n"),
                     log.handler());
  drive(c, find_cmd("ab", true, true));
  drive(c, cmd(CommandKind::find_next));
  auto stops = log.stops();
  REQUIRE(stops.size() == 2);
  CHECK(stops[1].value == "abc");
}

TEST_CASE("guards") {
  EventLog log;
  SearchController c(bundle(two_line), log.handler());
  auto code = [](const Reply& r) { return r.message.substr(0, r.message.find(':')); };
  CHECK(code(c.handle(cmd(CommandKind::find_next))) == "NoActiveQuery");
  CHECK(code(c.handle(cmd(CommandKind::continue_run))) == "NotPaused");
  CHECK(code(c.handle(cmd(CommandKind::step_in))) == "NotPaused");
  CHECK(code(c.handle(cmd(CommandKind::stack_trace))) == "NotPaused");
  CHECK(code(c.handle(cmd(CommandKind::pause))) == "NotRunning");
  Reply empty = c.handle(find_cmd(""));
  CHECK(empty.error == "bad_request");
  CHECK(code(empty) == "EmptyQuery");
  Command bad_regex = find_cmd("(");
  bad_regex.query.regex = true;
  CHECK(code(c.handle(bad_regex)) == "InvalidRegex");
  CHECK(c.state() == SessionState::NotStarted);
  CHECK(c.handle(cmd(CommandKind::source)).ok);

  drive(c, launch(true));
  CHECK(code(c.handle(launch(false))) == "AlreadyStarted");
  Command frame(CommandKind::variables);
  frame.frame = 5;
  CHECK(c.handle(frame).error == "bad_request");
  CHECK(drive(c, cmd(CommandKind::stop)).ok);
  CHECK(log.terminated("stopped"));
  for (auto k : {CommandKind::launch, CommandKind::find, CommandKind::find_next,
                 CommandKind::continue_run, CommandKind::step_over, CommandKind::pause,
                 CommandKind::stack_trace, CommandKind::stop}) {
    Command cm = k == CommandKind::find ? find_cmd("x") : cmd(k);
    CHECK(code(c.handle(cm)) == "SessionOver");
  }
}

TEST_CASE("stop while running terminates with reason stopped") {
  EventLog log;
  SearchController c(bundle(counter), log.handler(), VmOptions{10, 10000});
  c.set_poller([](SearchController& s) {
    if (s.capture_count() > 100 && s.state() == SessionState::Running) {
      CHECK(s.handle(Command(CommandKind::stop)).ok);
    }
  });
  drive(c, find_cmd("never"));
  CHECK(c.state() == SessionState::Terminated);
  CHECK(log.terminated("stopped"));
  CHECK(log.output().empty());
}

TEST_CASE("pause while running reports reason stopped") {
  EventLog log;
  SearchController c(bundle(counter), log.handler(), VmOptions{10, 10000});
  c.set_poller([](SearchController& s) {
    if (s.capture_count() == 50) {
      s.handle(Command(CommandKind::pause));
    }
  });
  drive(c, find_cmd("never"));
  CHECK(c.state() == SessionState::PausedAtStep);
  REQUIRE(log.stops().size() == 1);
  CHECK(log.stops()[0].reason == "stopped");
  CHECK(log.stops()[0].function == "main");
}

TEST_CASE("stepping from a match does not re-match, but a match preempts a step") {
  const std::string src =
      "fn main() {\n"              // 1
      "  let a = \"needle\";\n"    // 2
      "  let b = a;\n"             // 3
      "  let c = 1;\n"             // 4
      "  let d = \"needle2\";\n"   // 5
      "  print(d);\n"              // 6
      "}\n";
  EventLog log;
  SearchController c(bundle(src), log.handler());
  drive(c, find_cmd("needle"));
  CHECK(log.stops().back().line == 2);
  drive(c, cmd(CommandKind::step_over));
  CHECK(c.state() == SessionState::PausedAtStep);
  CHECK(log.stops().back().reason == "step");
  CHECK(log.stops().back().line == 3); // line 3 reads "needle" but matching is off after a match
  drive(c, cmd(CommandKind::step_over));
  CHECK(log.stops().back().line == 4);

  // re-arm by pausing a searching run, then step into a matching line
  EventLog log2;
  SearchController c2(bundle(src), log2.handler(), VmOptions{1, 10000});
  bool paused = false;
  c2.set_poller([&](SearchController& s) {
    if (!paused && s.state() == SessionState::Running) {
      paused = true;
      s.handle(Command(CommandKind::pause));
    }
  });
  drive(c2, find_cmd("needle2"));
  CHECK(log2.stops().back().reason == "stopped");
  while (c2.state() == SessionState::PausedAtStep && log2.stops().back().line < 5) {
    drive(c2, cmd(CommandKind::step_over));
  }
  CHECK(log2.stops().back().line == 5);
  CHECK(log2.stops().back().reason == "step");
  drive(c2, cmd(CommandKind::step_over));
  CHECK(log2.stops().back().reason == "match");
  CHECK(log2.stops().back().value == "needle2");
  CHECK(c2.state() == SessionState::PausedAtMatch);
}

TEST_CASE("faults pause with a message and resuming terminates") {
  EventLog log;
  SearchController c(bundle("fn main() {\n  print(\"x\");\n  print(1 / 0);\n}\n"), log.handler());
  drive(c, find_cmd("never"));
  CHECK(c.state() == SessionState::PausedAtStep);
  REQUIRE(log.stops().size() == 1);
  CHECK(log.stops()[0].reason == "fault");
  CHECK(log.stops()[0].message == "division by zero");
  CHECK(log.stops()[0].line == 3);
  CHECK(c.handle(cmd(CommandKind::stack_trace)).ok);
  drive(c, cmd(CommandKind::continue_run));
  CHECK(c.state() == SessionState::Terminated);
  CHECK(log.terminated("fault"));
  CHECK(log.output() == "x\n");
}

TEST_CASE("events caused by a command follow its reply") {
  EventLog log;
  SearchController c(bundle(two_line), log.handler());
  drive(c, launch(true));
  std::size_t before = log.events.size();
  CHECK(c.handle(cmd(CommandKind::stop)).ok);
  CHECK(log.events.size() == before);
  c.flush();
  CHECK(log.events.size() == before + 1);
}

TEST_CASE("find-next pauses walk the oracle's matching captures in order") {
  Query q;
  q.text = "e";
  q.match_case = false;
  Matcher m(q);
  for (const auto& prog : support::load_corpus()) {
    CAPTURE(prog.name);
    auto expected = oracle::trace(prog.units, prog.input);
    std::vector<std::string> want;
    for (const auto& v : expected.strings) {
      if (m.matches(v.value)) {
        want.push_back(v.value);
      }
    }
    EventLog log;
    SearchController c(make_bundle(prog.units, "*", prog.input), log.handler());
    drive(c, find_cmd("e", false));
    while (c.state() != SessionState::Terminated) {
      drive(c, cmd(CommandKind::find_next));
    }
    std::vector<std::string> got;
    for (const auto& s : log.stops()) {
      if (s.reason == "match") {
        got.push_back(s.value);
        CHECK(m.matches(s.value));
      }
    }
    CHECK(got == want);
    CHECK(log.output() == expected.stdout_text);
  }
}

TEST_CASE("random command scripts only take documented transitions") {
  using S = SessionState;
  using K = CommandKind;
  const std::set<S> paused{S::PausedAtMatch, S::PausedAtStep};
  const std::set<S> after_resume{S::PausedAtMatch, S::PausedAtStep, S::Terminated};
  const std::map<K, std::set<S>> from{
      {K::launch, {S::NotStarted}},
      {K::find, {S::NotStarted, S::PausedAtMatch, S::PausedAtStep}},
      {K::find_next, paused},
      {K::continue_run, paused},
      {K::step_in, paused},
      {K::step_over, paused},
      {K::step_out, paused},
      {K::stop, {S::NotStarted, S::PausedAtMatch, S::PausedAtStep}},
  };
  const std::map<K, std::set<S>> to{
      {K::launch, after_resume},
      {K::find, after_resume},
      {K::find_next, after_resume},
      {K::continue_run, {S::Terminated, S::PausedAtStep}},
      {K::step_in, after_resume},
      {K::step_over, after_resume},
      {K::step_out, after_resume},
      {K::stop, {S::Terminated}},
  };
  const std::vector<K> kinds{K::launch,   K::find,       K::find_next,   K::continue_run,
                             K::step_in,  K::step_over,  K::step_out,    K::pause,
                             K::stop,     K::stack_trace, K::variables,  K::source};
  const std::vector<std::string> queries{"e", "o", "x", "text", "1"};
  auto corpus = support::load_corpus();
  std::mt19937 rng(1234);
  for (int script = 0; script < 200; ++script) {
    const auto& prog = corpus[rng() % corpus.size()];
    EventLog log;
    SearchController c(make_bundle(prog.units, "*", prog.input), log.handler());
    for (int step = 0; step < 25 && c.state() != S::Terminated; ++step) {
      K k = kinds[rng() % kinds.size()];
      Command command(k);
      command.query.text = queries[rng() % queries.size()];
      command.query.skip_repeated_site = rng() % 2;
      command.stop_on_entry = rng() % 2;
      S before = c.state();
      std::size_t events_before = log.events.size();
      Reply r = drive(c, command);
      S after = c.state();
      CAPTURE(prog.name);
      CAPTURE(static_cast<int>(k));
      if (!r.ok || !from.count(k)) {
        CHECK(after == before);
        continue;
      }
      CHECK(from.at(k).count(before) == 1);
      CHECK(to.at(k).count(after) == 1);
      // the final event names the state we landed in
      REQUIRE(log.events.size() > events_before);
      const Event& last = log.events.back();
      if (after == S::Terminated) {
        CHECK(std::holds_alternative<TerminatedEvent>(last));
      } else {
        REQUIRE(std::holds_alternative<StoppedEvent>(last));
        const auto& st = std::get<StoppedEvent>(last);
        CHECK((st.reason == "match") == (after == S::PausedAtMatch));
      }
    }
  }
}

} // TEST_SUITE
