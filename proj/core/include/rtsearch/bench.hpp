#pragma once

#include "rtsearch/ast.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace rts::bench {

struct Workload {
  std::string name;
  std::vector<SourceUnit> units;
  std::vector<std::string> input;
};

// Loop of `iterations` rounds of concat/upper/compare on short strings.
Workload standard_workload(std::int64_t iterations = 10'000'000);

struct BenchReport {
  std::string workload;
  unsigned runs = 0;
  std::string query;
  double plain_seconds = 0;
  double instrumented_seconds = 0;
  double searching_seconds = 0;
  double instrumented_over_plain = 0;
  double searching_over_instrumented = 0;
  // Largest relative standard deviation seen across the three conditions.
  double noise_margin = 0;
  std::uint64_t captures_per_run = 0;
};

// Times the workload without instrumentation, instrumented but not
// searching, and searching for `query` for the whole run. Throws
// Errc::workload_fault if the program faults or the query ever matches.
BenchReport run_benchmark(const Workload& workload, unsigned runs = 3,
                          const std::string& query = "#~#");

std::string to_text(const BenchReport& report);
nlohmann::json to_json(const BenchReport& report);

} // namespace rts::bench
