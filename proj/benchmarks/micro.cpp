#include "rtsearch/ast.hpp"
#include "rtsearch/bench.hpp"
#include "rtsearch/instrumenter.hpp"
#include "rtsearch/query.hpp"
#include "rtsearch/vm.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace rts;

namespace {

constexpr std::int64_t kIterations = 20'000;

std::shared_ptr<const ProgramImage> plain_image() {
  static auto image = std::make_shared<const ProgramImage>(
      build_program(bench::standard_workload(kIterations).units));
  return image;
}

std::shared_ptr<const ProgramImage> instrumented_image() {
  static auto image =
      std::make_shared<const ProgramImage>(instrument(*plain_image(), ScopePattern("*")));
  return image;
}

struct Searching : VmHooks {
  explicit Searching(Query q) : matcher(std::move(q)) {}
  Control on_capture(const CaptureSite&, const std::string& value) override {
    return matcher.matches(value) ? Control::pause : Control::proceed;
  }
  Matcher matcher;
};

void run_vm(benchmark::State& state, const std::shared_ptr<const ProgramImage>& image,
            VmHooks& hooks) {
  for (auto _ : state) {
    Vm vm(image);
    benchmark::DoNotOptimize(vm.run(hooks));
  }
  state.SetItemsProcessed(state.iterations() * kIterations);
}

void BM_VmPlain(benchmark::State& state) {
  VmHooks hooks;
  run_vm(state, plain_image(), hooks);
}

void BM_VmInstrumented(benchmark::State& state) {
  VmHooks hooks;
  run_vm(state, instrumented_image(), hooks);
}

void BM_VmSearching(benchmark::State& state) {
  Searching hooks(Query{"#~#"});
  run_vm(state, instrumented_image(), hooks);
}

void BM_VmSearchingIgnoreCase(benchmark::State& state) {
  Query q{"#~#"};
  q.match_case = false;
  Searching hooks(q);
  run_vm(state, instrumented_image(), hooks);
}

void BM_Compile(benchmark::State& state) {
  auto units = bench::standard_workload(kIterations).units;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_program(units));
  }
}

void BM_Instrument(benchmark::State& state) {
  auto image = plain_image();
  for (auto _ : state) {
    benchmark::DoNotOptimize(instrument(*image, ScopePattern("*")));
  }
}

void BM_MatchSubstring(benchmark::State& state) {
  Matcher m(Query{"needle"});
  const std::string hay = "a moderately long haystack string without the word";
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.matches(hay));
  }
}

void BM_MatchRegex(benchmark::State& state) {
  Query q{"ne+dle\\d"};
  q.regex = true;
  Matcher m(q);
  const std::string hay = "a moderately long haystack string without the word";
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.matches(hay));
  }
}

} // namespace

BENCHMARK(BM_VmPlain)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VmInstrumented)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VmSearching)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VmSearchingIgnoreCase)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Compile);
BENCHMARK(BM_Instrument);
BENCHMARK(BM_MatchSubstring);
BENCHMARK(BM_MatchRegex);
BENCHMARK_MAIN();
