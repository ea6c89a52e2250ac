#include "repl.hpp"

#include "rtsearch/bench.hpp"
#include "rtsearch/error.hpp"
#include "rtsearch/instrumenter.hpp"
#include "rtsearch/program.hpp"
#include "rtsearch/server.hpp"
#include "rtsearch/vm.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <unistd.h>

namespace {

constexpr int exit_compile = 1;
constexpr int exit_fault = 2;
constexpr int exit_usage = 64;

struct Args {
  std::vector<std::string> files;
  std::string scope = "*";
  std::string input;
  std::string script;
  std::string static_dir;
  std::string host = "127.0.0.1";
  unsigned port = 4711;
  bool skip_repeats = false;
  bool ignore_case = false;
  bool regex = false;
  bool whole_word = false;
  bool instrumented = false;
  unsigned runs = 3;
  std::int64_t iterations = 10'000'000;
  std::string query = "#~#";
  bool json = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<rts::SourceUnit> load_units(const Args& a) {
  std::vector<rts::SourceUnit> units;
  for (const auto& f : a.files) {
    units.push_back(rts::SourceUnit::from_file(f));
  }
  return units;
}

std::vector<std::string> load_input(const Args& a) {
  return a.input.empty() ? std::vector<std::string>{} : rts::read_input_fixture(a.input);
}

rts::ProgramBundle load_bundle(const Args& a) {
  rts::ScopePattern check(a.scope); // reject a bad scope before compiling
  return rts::make_bundle(load_units(a), a.scope, load_input(a));
}

class PrintHooks : public rts::VmHooks {
  void on_output(std::string_view text) override { std::cout << text; }
};

int cmd_run(const Args& a) {
  auto image = std::make_shared<const rts::ProgramImage>(rts::build_program(load_units(a)));
  rts::Vm vm(image);
  vm.set_input(load_input(a));
  PrintHooks hooks;
  rts::StopResult r = vm.run(hooks);
  std::cout.flush();
  if (r.kind == rts::StopKind::fault) {
    const auto& f = *vm.fault();
    std::cerr << "RuntimeFault in " << f.function << " at line " << f.line << ": " << f.message
              << '\n';
    return exit_fault;
  }
  return 0;
}

int cmd_debug(const Args& a) {
  rtsearch_cli::ReplOptions opts{a.ignore_case, a.regex, a.whole_word, a.skip_repeats};
  rtsearch_cli::Repl repl(load_bundle(a), opts, std::cout);
  std::ifstream script_file;
  if (!a.script.empty()) {
    script_file.open(a.script);
    if (!script_file) {
      throw UsageError("cannot read script " + a.script);
    }
  }
  const bool scripted = !a.script.empty();
  const bool prompt = !scripted && isatty(STDIN_FILENO);
  std::istream& in = scripted ? static_cast<std::istream&>(script_file) : std::cin;
  std::string line;
  for (;;) {
    if (prompt) {
      std::cout << "> " << std::flush;
    }
    if (!std::getline(in, line)) {
      break;
    }
    if (scripted) {
      std::cout << "> " << line << '\n';
    }
    if (!repl.execute(line)) {
      break;
    }
    std::cout.flush();
  }
  return 0;
}

int cmd_serve(const Args& a) {
  rts::ProgramBundle bundle = load_bundle(a);
  rts::protocol::ServerOptions opts;
  opts.host = a.host;
  opts.port = static_cast<std::uint16_t>(a.port);
  if (!a.static_dir.empty()) {
    opts.static_dir = a.static_dir;
  }
  rts::protocol::Server server([bundle] { return bundle; }, opts);
  std::uint16_t port = server.listen();
  std::cerr << "listening on " << a.host << ':' << port << '\n';
  server.serve();
  return 0;
}

int cmd_disasm(const Args& a) {
  rts::ProgramImage image = rts::build_program(load_units(a));
  if (a.instrumented) {
    image = rts::instrument(image, rts::ScopePattern(a.scope));
  }
  std::cout << rts::disassemble(image);
  return 0;
}

int cmd_bench(const Args& a) {
  if (a.runs == 0) {
    throw UsageError("--runs must be at least 1");
  }
  rts::bench::Workload w;
  if (a.files.empty()) {
    w = rts::bench::standard_workload(a.iterations);
  } else {
    w.name = a.files.front();
    w.units = load_units(a);
    w.input = load_input(a);
  }
  auto report = rts::bench::run_benchmark(w, a.runs, a.query);
  if (a.json) {
    std::cout << rts::bench::to_json(report).dump(2) << '\n';
  } else {
    std::cout << rts::bench::to_text(report);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runtime string search debugger for MiniLang"};
  app.require_subcommand(1);
  Args a;

  auto files = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("files", a.files, "MiniLang source files (.mls)");
    if (required) {
      opt->required();
    }
  };
  auto input = [&](CLI::App* sub) {
    sub->add_option("--input", a.input, "input fixture read by readline()");
  };
  auto scope = [&](CLI::App* sub) {
    sub->add_option("--scope", a.scope, "instrumentation scope over unit.function");
  };

  auto* run = app.add_subcommand("run", "run a program without instrumentation");
  files(run, true);
  input(run);

  auto* debug = app.add_subcommand("debug", "instrument and debug interactively");
  files(debug, true);
  input(debug);
  scope(debug);
  debug->add_option("--script", a.script, "read commands from a file and echo them");
  debug->add_flag("--skip-repeats", a.skip_repeats, "skip matches at the last match site");
  debug->add_flag("--ignore-case", a.ignore_case, "case-insensitive search");
  debug->add_flag("--regex", a.regex, "treat queries as regular expressions");
  debug->add_flag("--whole-word", a.whole_word, "match whole words only");

  auto* serve = app.add_subcommand("serve", "instrument and serve the debug protocol");
  files(serve, true);
  input(serve);
  scope(serve);
  serve->add_option("--port", a.port, "TCP port, 0 for any")->check(CLI::Range(0, 65535));
  serve->add_option("--host", a.host, "address to bind");
  serve->add_option("--static", a.static_dir, "directory served to plain HTTP GETs");

  auto* disasm = app.add_subcommand("disasm", "print bytecode");
  files(disasm, true);
  scope(disasm);
  disasm->add_flag("--instrumented", a.instrumented, "show code after instrumentation");

  auto* bench = app.add_subcommand("bench", "measure instrumentation and search overhead");
  files(bench, false);
  input(bench);
  bench->add_option("--runs", a.runs, "runs per condition");
  bench->add_option("--iterations", a.iterations, "loop count of the standard workload");
  bench->add_option("--query", a.query, "query that must never match");
  bench->add_flag("--json", a.json, "print the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*run) {
      return cmd_run(a);
    }
    if (*debug) {
      return cmd_debug(a);
    }
    if (*serve) {
      return cmd_serve(a);
    }
    if (*disasm) {
      return cmd_disasm(a);
    }
    return cmd_bench(a);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const rts::Error& e) {
    std::cerr << e.what() << '\n';
    switch (e.code()) {
    case rts::Errc::empty_scope:
    case rts::Errc::io_error: return exit_usage;
    case rts::Errc::workload_fault: return exit_fault;
    default: return exit_compile;
    }
  }
}
