#include <benchmark/benchmark.h>

#include "morl/generators.hpp"
#include "morl/offline_online.hpp"
#include "morl/rfe.hpp"
#include "morl/upstream.hpp"

using namespace morl;

namespace {

struct BenchSetup {
  TaskFamily family;
  std::vector<StochasticPolicy> behavior;
  OfflineDataset data;
  ModelClass model_class;
  TabularLowRankMdp target;
  RewardTable reward;

  static const BenchSetup& instance() {
    static const BenchSetup setup = [] {
      BenchSetup s;
      Rng fam_rng(derive_seed(0, stream::family, 0));
      s.family = gen_task_family(5, 2, 3, 2, 4, fam_rng);
      for (int t = 0; t < 4; ++t) {
        Rng rng(derive_seed(0, stream::behavior, t, 0));
        s.behavior.push_back(
            gen_behavior_policy(s.family.tasks[t], 0.25, rng).first);
      }
      Rng data_rng(derive_seed(0, stream::dataset, 0));
      s.data = gen_dataset(s.family, s.behavior, 2000, data_rng);
      Rng class_rng(derive_seed(0, stream::model_class, 0));
      s.model_class = gen_model_class(s.family, 7, 8, 0.2, class_rng);
      Rng target_rng(derive_seed(0, stream::target, 0));
      s.target = gen_target_task(s.family, Vec::Constant(4, 0.25), 0.0,
                                 target_rng)
                     .first;
      Rng reward_rng(derive_seed(0, stream::reward, 0));
      s.reward = gen_linear_reward(s.family.shared_phi(), 2, reward_rng);
      return s;
    }();
    return setup;
  }
};

void bm_policy_evaluation(benchmark::State& state) {
  const BenchSetup& s = BenchSetup::instance();
  const TransitionModel truth = s.family.tasks[0].kernels();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        evaluate_policy(truth, s.reward, s.behavior[0]));
  }
}
BENCHMARK(bm_policy_evaluation);

void bm_optimal_plan(benchmark::State& state) {
  const BenchSetup& s = BenchSetup::instance();
  const TransitionModel truth = s.family.tasks[0].kernels();
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_plan(truth, s.reward));
  }
}
BENCHMARK(bm_optimal_plan);

void bm_dataset_generation(benchmark::State& state) {
  const BenchSetup& s = BenchSetup::instance();
  const int episodes = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Rng rng(derive_seed(1, stream::dataset, 0));
    benchmark::DoNotOptimize(
        gen_dataset(s.family, s.behavior, episodes, rng));
  }
  state.SetItemsProcessed(state.iterations() * episodes * 4);
}
BENCHMARK(bm_dataset_generation)->Arg(500)->Arg(2000);

void bm_likelihood_selection(benchmark::State& state) {
  const BenchSetup& s = BenchSetup::instance();
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_model(s.model_class, s.data));
  }
}
BENCHMARK(bm_likelihood_selection);

void bm_penalty_table(benchmark::State& state) {
  const BenchSetup& s = BenchSetup::instance();
  const CovarianceState cov =
      covariance_state(s.family.shared_phi(), s.data, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        penalty_table(s.family.shared_phi(), cov, 2.0, 2));
  }
}
BENCHMARK(bm_penalty_table);

void bm_rfe_exploration(benchmark::State& state) {
  const BenchSetup& s = BenchSetup::instance();
  RfeConfig config;
  config.episodes = static_cast<int>(state.range(0));
  config.beta = beta_rfe(3, 2, config.episodes, 0.1, 1.0, 0.0);
  for (auto _ : state) {
    Rng rng(derive_seed(2, stream::rfe, 0));
    benchmark::DoNotOptimize(
        rfe_explore(s.target, s.family.shared_phi(), config, rng));
  }
  state.SetItemsProcessed(state.iterations() * config.episodes);
}
BENCHMARK(bm_rfe_exploration)->Arg(200)->Arg(1000);

void bm_online_episodes(benchmark::State& state) {
  const BenchSetup& s = BenchSetup::instance();
  LsviConfig config;
  config.episodes = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Rng rng(derive_seed(3, stream::online, 0));
    benchmark::DoNotOptimize(
        lsvi_ucb(s.target, s.family.shared_phi(), s.reward, config, rng));
  }
  state.SetItemsProcessed(state.iterations() * config.episodes);
}
BENCHMARK(bm_online_episodes)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
