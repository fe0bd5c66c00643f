// Serial reference vs OpenMP path for the two data-parallel kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "council/did.hpp"
#include "council/linkage.hpp"
#include "support/did_sim.hpp"

using namespace council;

namespace {

struct LinkFixture {
  linkage::VoterFile voters;
  linkage::NicknameTable nicknames;
  std::vector<linkage::LinkTask> tasks;
};

const LinkFixture& link_fixture() {
  static const LinkFixture fx = [] {
    static const char* firsts[] = {"ann", "bo", "cy", "dee", "eli", "fay", "gus", "hal", "ivy", "jo",
                                   "kai", "lu", "max", "ned", "oz", "pia", "quin", "rae", "sol", "tia"};
    static const char* lasts[] = {"smith", "smyth", "lopez", "lopes", "kim", "kimm", "lee", "li", "chen", "chan",
                                  "nguyen", "garcia", "garza", "jones", "johns", "brown", "braun", "white", "wyatt", "reyes"};
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> f(0, 19), l(0, 19), c(0, 3);
    std::vector<linkage::VoterRecord> vs;
    for (int i = 0; i < 40000; ++i) {
      linkage::VoterRecord v;
      v.voter_id = std::to_string(i);
      v.first = firsts[f(rng)];
      v.middle = i % 3 ? firsts[f(rng)] : "";
      v.last = lasts[l(rng)];
      v.city = "city" + std::to_string(c(rng));
      v.year = 2020 + i % 3;
      vs.push_back(v);
    }
    LinkFixture out{linkage::VoterFile(vs), {}, {}};
    out.nicknames.add("ann", "anna");
    for (int i = 0; i < 4000; ++i) {
      out.tasks.push_back({std::to_string(i), std::string(firsts[f(rng)]) + " " + lasts[l(rng)],
                           "city" + std::to_string(c(rng)), 2020 + i % 3, nullptr});
    }
    return out;
  }();
  return fx;
}

void BM_link_batch(benchmark::State& state) {
  const auto& fx = link_fixture();
  const auto exec = state.range(0) ? Exec::parallel : Exec::serial;
  for (auto _ : state) {
    auto out = linkage::link_batch(fx.tasks, fx.voters, fx.nicknames, {}, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fx.tasks.size()));
}
BENCHMARK(BM_link_batch)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_bootstrap(benchmark::State& state) {
  static const auto panel = testing::staggered_panel(12345);
  did::BootstrapOptions bo;
  bo.draws = 99;
  bo.seed = 1;
  bo.exec = state.range(0) ? Exec::parallel : Exec::serial;
  for (auto _ : state) {
    auto r = did::estimate(panel, {}, bo);
    benchmark::DoNotOptimize(r.overall.se);
  }
  state.SetItemsProcessed(state.iterations() * bo.draws);
}
BENCHMARK(BM_bootstrap)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
