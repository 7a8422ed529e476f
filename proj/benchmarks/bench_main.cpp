#include <benchmark/benchmark.h>

#include "webphuzz/feedback.hpp"
#include "webphuzz/html.hpp"
#include "webphuzz/model.hpp"
#include "webphuzz/mutation.hpp"
#include "webphuzz/request.hpp"
#include "webphuzz/store.hpp"

using namespace webphuzz;

namespace {

std::shared_ptr<const EndpointConfig> bench_config() {
  EndpointConfig cfg;
  cfg.target_url = "http://127.0.0.1:8080/vuln";
  cfg.methods = {HttpMethod::GET};
  ParamGroup g;
  g.weight = 1.0;
  g.fuzz_patterns = {".*"};
  g.params = {{"m", {"msurfe"}, ParamMode::fuzz, ParamLocation::query},
              {"d", {"1' OR '1'='1"}, ParamMode::fuzz, ParamLocation::query},
              {"Submit", {"Submit"}, ParamMode::fixed, ParamLocation::query}};
  cfg.param_groups[ParamLocation::query] = g;
  return std::make_shared<const EndpointConfig>(cfg);
}

FeedbackRecord bench_record(int files, int lines_per_file) {
  FeedbackRecord fb;
  fb.id = "1700000000-4b9e5c1a-0f3d-4e62-9a8b-1c2d3e4f5a6b";
  for (int f = 0; f < files; ++f) {
    auto& lines = fb.coverage["/var/www/html/src/file" + std::to_string(f) + ".php"];
    for (int l = 1; l <= lines_per_file; ++l) lines.push_back(l * 3);
  }
  fb.hook_events.push_back({"mysqli_query", {"SELECT * FROM users WHERE id = '1'"}, std::nullopt, std::nullopt, false});
  return fb;
}

void BM_CandidateHash(benchmark::State& state) {
  auto c = mutation::expand_seeds(bench_config()).front();
  for (auto _ : state) benchmark::DoNotOptimize(candidate_hash(c));
}
BENCHMARK(BM_CandidateHash);

void BM_MutateCandidate(benchmark::State& state) {
  auto parent = mutation::expand_seeds(bench_config()).front();
  GlobalCoverageStore empty;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto children = mutation::mutate_candidate(parent, {static_cast<std::uint32_t>(state.range(0)), seed++}, empty);
    benchmark::DoNotOptimize(children);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MutateCandidate)->Arg(5)->Arg(50);

void BM_PrepareRequest(benchmark::State& state) {
  auto c = mutation::expand_seeds(bench_config()).front();
  c.feedback_id = "1700000000-4b9e5c1a-0f3d-4e62-9a8b-1c2d3e4f5a6b";
  for (auto _ : state) benchmark::DoNotOptimize(http::prepare_request(c));
}
BENCHMARK(BM_PrepareRequest);

void BM_ParseFeedback(benchmark::State& state) {
  auto text = feedback::serialize_feedback(bench_record(static_cast<int>(state.range(0)), 200));
  for (auto _ : state) benchmark::DoNotOptimize(feedback::parse_feedback(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseFeedback)->Arg(1)->Arg(50);

void BM_StoreMerge(benchmark::State& state) {
  auto fb = bench_record(50, 200);
  GlobalCoverageStore store;
  store.merge(fb);
  for (auto _ : state) benchmark::DoNotOptimize(store.merge(fb));
}
BENCHMARK(BM_StoreMerge);

void BM_MarkerScan(benchmark::State& state) {
  std::string doc = "<html><head><title>t</title><script>var a = 1;</script></head><body>";
  for (int i = 0; i < state.range(0); ++i)
    doc += "<div class=\"row\" onclick=\"go(" + std::to_string(i) + ")\"><a href=\"/p?i=" + std::to_string(i) +
           "\">item</a><!-- c --></div>\n";
  doc += "<p>fz0123abcd</p></body></html>";
  for (auto _ : state) benchmark::DoNotOptimize(html::find_marker_contexts(doc, "fz0123abcd"));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(doc.size()));
}
BENCHMARK(BM_MarkerScan)->Arg(10)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();
