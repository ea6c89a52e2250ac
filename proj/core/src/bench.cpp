#include "rtsearch/bench.hpp"
#include "rtsearch/controller.hpp"
#include "rtsearch/error.hpp"
#include "rtsearch/instrumenter.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace rts::bench {

Workload standard_workload(std::int64_t iterations) {
  std::string src = "// string churn: concat, upper, compare\n"
                    "fn main() {\n"
                    "  let i = 0;\n"
                    "  let hits = 0;\n"
                    "  let prefix = \"item-\";\n"
                    "  while (i < " +
                    std::to_string(iterations) +
                    ") {\n"
                    "    let name = prefix + str(i);\n"
                    "    let loud = upper(name);\n"
                    "    if (loud == \"ITEM-42\") {\n"
                    "      hits = hits + 1;\n"
                    "    }\n"
                    "    i = i + 1;\n"
                    "  }\n"
                    "  print(\"hits: \" + str(hits));\n"
                    "}\n";
  return Workload{"string-churn", {SourceUnit::from_text("churn", std::move(src))}, {}};
}

namespace {

struct Sample {
  double seconds;
  std::uint64_t captures;
};

Sample time_once(const ProgramBundle& bundle, const Command& start) {
  bool matched = false;
  std::string fault;
  SearchController controller(bundle, [&](const Event& e) {
    if (const auto* s = std::get_if<StoppedEvent>(&e)) {
      if (s->reason == "match") {
        matched = true;
      } else if (s->reason == "fault") {
        fault = s->message;
      }
    }
  });
  auto t0 = std::chrono::steady_clock::now();
  Reply r = controller.handle(start);
  if (!r.ok) {
    throw Error(Errc::workload_fault, r.message);
  }
  controller.flush();
  while (controller.runnable()) {
    controller.advance();
    if (matched) {
      throw Error(Errc::workload_fault, "benchmark query matched; it must never pause the program");
    }
    if (!fault.empty()) {
      throw Error(Errc::workload_fault, "workload faulted: " + fault);
    }
  }
  auto t1 = std::chrono::steady_clock::now();
  return Sample{std::chrono::duration<double>(t1 - t0).count(), controller.capture_count()};
}

struct Stats {
  double mean = 0;
  double rel_sd = 0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) {
    s.mean += x;
  }
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1 && s.mean > 0) {
    double var = 0;
    for (double x : xs) {
      var += (x - s.mean) * (x - s.mean);
    }
    var /= static_cast<double>(xs.size() - 1);
    s.rel_sd = std::sqrt(var) / s.mean;
  }
  return s;
}

} // namespace

BenchReport run_benchmark(const Workload& workload, unsigned runs, const std::string& query) {
  if (runs == 0) {
    throw Error(Errc::workload_fault, "runs must be at least 1");
  }
  ProgramImage plain_image;
  try {
    plain_image = build_program(workload.units);
  } catch (const Error& e) {
    throw Error(Errc::workload_fault, std::string("workload does not compile: ") + e.what());
  }
  auto plain = std::make_shared<const ProgramImage>(plain_image);
  auto instrumented = std::make_shared<const ProgramImage>(instrument(plain_image, ScopePattern("*")));

  ProgramBundle plain_bundle{plain, workload.units, workload.input};
  ProgramBundle instr_bundle{instrumented, workload.units, workload.input};

  Command launch{CommandKind::launch};
  Command find{CommandKind::find};
  find.query.text = query;

  std::vector<double> p;
  std::vector<double> i;
  std::vector<double> s;
  BenchReport report;
  // Conditions run one after another, never interleaved within a round.
  for (unsigned r = 0; r < runs; ++r) {
    p.push_back(time_once(plain_bundle, launch).seconds);
  }
  for (unsigned r = 0; r < runs; ++r) {
    i.push_back(time_once(instr_bundle, launch).seconds);
  }
  for (unsigned r = 0; r < runs; ++r) {
    Sample sample = time_once(instr_bundle, find);
    s.push_back(sample.seconds);
    report.captures_per_run = sample.captures;
  }

  Stats ps = stats(p);
  Stats is = stats(i);
  Stats ss = stats(s);
  report.workload = workload.name;
  report.runs = runs;
  report.query = query;
  report.plain_seconds = ps.mean;
  report.instrumented_seconds = is.mean;
  report.searching_seconds = ss.mean;
  report.instrumented_over_plain = is.mean / ps.mean;
  report.searching_over_instrumented = ss.mean / is.mean;
  report.noise_margin = std::max({ps.rel_sd, is.rel_sd, ss.rel_sd});
  return report;
}

std::string to_text(const BenchReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "workload      " << r.workload << " (" << r.runs << " run" << (r.runs == 1 ? "" : "s")
      << ", query \"" << r.query << "\")\n";
  out << "plain         " << std::setw(9) << r.plain_seconds << " s\n";
  out << "instrumented  " << std::setw(9) << r.instrumented_seconds << " s   x"
      << r.instrumented_over_plain << " vs plain\n";
  out << "searching     " << std::setw(9) << r.searching_seconds << " s   x"
      << r.searching_over_instrumented << " vs instrumented\n";
  out << "captures/run  " << std::setw(9) << r.captures_per_run << "\n";
  out << "noise margin  " << std::setw(9) << r.noise_margin * 100.0 << " %\n";
  return out.str();
}

nlohmann::json to_json(const BenchReport& r) {
  return nlohmann::json{
      {"workload", r.workload},
      {"runs", r.runs},
      {"query", r.query},
      {"plain_seconds", r.plain_seconds},
      {"instrumented_seconds", r.instrumented_seconds},
      {"searching_seconds", r.searching_seconds},
      {"ratios",
       {{"instrumented_over_plain", r.instrumented_over_plain},
        {"searching_over_instrumented", r.searching_over_instrumented}}},
      {"noise_margin", r.noise_margin},
      {"captures_per_run", r.captures_per_run},
  };
}

} // namespace rts::bench
