#include "support.hpp"

#include "rtsearch/bench.hpp"
#include "rtsearch/error.hpp"

#include <doctest.h>

using namespace rts;
using namespace rts::bench;

namespace {

Errc error_of(const Workload& w, unsigned runs, const std::string& query) {
  try {
    run_benchmark(w, runs, query);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::io_error;
}

} // namespace

TEST_SUITE("bench") {

TEST_CASE("a single run gives single-sample means") {
  BenchReport r = run_benchmark(standard_workload(20'000), 1);
  CHECK(r.runs == 1);
  CHECK(r.workload == "string-churn");
  CHECK(r.query == "#~#");
  CHECK(r.plain_seconds > 0);
  CHECK(r.instrumented_seconds > 0);
  CHECK(r.searching_seconds > 0);
  CHECK(r.instrumented_over_plain == doctest::Approx(r.instrumented_seconds / r.plain_seconds));
  CHECK(r.searching_over_instrumented ==
        doctest::Approx(r.searching_seconds / r.instrumented_seconds));
  CHECK(r.noise_margin == 0);
  // per iteration: prefix, str(i), concat, name, upper, loud, "ITEM-42"
  CHECK(r.captures_per_run >= 20'000 * 7);
}

TEST_CASE("the report lists every field") {
  BenchReport r = run_benchmark(standard_workload(5'000), 2);
  auto j = to_json(r);
  for (const char* key : {"workload", "runs", "query", "plain_seconds", "instrumented_seconds",
                          "searching_seconds", "noise_margin", "captures_per_run"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["ratios"].contains("instrumented_over_plain"));
  CHECK(j["ratios"].contains("searching_over_instrumented"));
  std::string text = to_text(r);
  for (const char* word : {"plain", "instrumented", "searching", "string-churn"}) {
    CHECK(text.find(word) != std::string::npos);
  }
}

TEST_CASE("guards") {
  CHECK(error_of(standard_workload(100), 1, "item") == Errc::workload_fault);
  CHECK(error_of(standard_workload(100), 0, "#~#") == Errc::workload_fault);
  Workload faulty{"faulty", {SourceUnit::from_text("f", "fn main() { print(1 / 0); }")}, {}};
  CHECK(error_of(faulty, 1, "#~#") == Errc::workload_fault);
  Workload broken{"broken", {SourceUnit::from_text("b", "fn main() { let = ; }")}, {}};
  CHECK(error_of(broken, 1, "#~#") == Errc::workload_fault);
}

} // TEST_SUITE
