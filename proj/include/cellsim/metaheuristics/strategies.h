#ifndef CELLSIM_METAHEURISTICS_STRATEGIES_H_
#define CELLSIM_METAHEURISTICS_STRATEGIES_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellsim/common/rng.h"
#include "cellsim/metaheuristics/cache.h"
#include "cellsim/metaheuristics/problem.h"

namespace cellsim::metaheuristics {

enum class StrategyKind { kGreedy, kTabu, kAnnealing, kGenetic, kSeededGenetic, kFullScan };

std::string StrategyName(StrategyKind k);
StrategyKind ParseStrategy(const std::string& name);  // throws ConfigError

struct StrategyConfig {
  std::optional<std::uint64_t> seed;  // mandatory; checked by validate()
  std::optional<double> time_budget_s;
  std::optional<std::uint64_t> candidate_budget = 100000;
  std::optional<std::uint64_t> max_runs;  // restarts for greedy / tabu / SA
  std::uint64_t random_solution_loops = 10000;

  std::uint64_t tabu_dull_move_limit = 10;

  double sa_cooling = 0.95;
  double sa_min_temperature_ratio = 1e-3;
  std::uint64_t sa_t0_samples = 30;

  std::size_t ga_population = 40;
  double ga_mutation_rate = 0.2;
  std::size_t ga_elite = 2;
  std::size_t ga_tournament = 3;
  std::size_t ga_drift = 2;  // fresh solutions injected per generation

  double sga_pool_fraction = 0.25;
  std::vector<StrategyKind> sga_seeders = {StrategyKind::kTabu};
  std::uint64_t sga_reseed_interval = 5;  // generations between seeded injections

  double full_scan_leaf_cap = 1e8;

  bool use_cache = true;
  std::size_t cache_capacity = 500000;

  void validate() const;  // throws ConfigError
};

struct BalancerStats {
  std::uint64_t runs = 0;
  std::uint64_t candidates_examined = 0;
  std::uint64_t unique_candidates = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t random_solution_loops = 0;
  double elapsed_s = 0.0;
};

struct BalancerResult {
  SolutionPtr best;  // null when nothing stable was found
  bool stable = false;
  BalancerStats stats;
};

// Raised by full_scan when the nominal tree exceeds the configured cap.
class SearchSpaceTooLarge : public std::runtime_error {
 public:
  explicit SearchSpaceTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// Shared evaluation context: cache, counters and budget.
class Evaluator {
 public:
  Evaluator(std::shared_ptr<const Problem> problem, const StrategyConfig& cfg,
            std::shared_ptr<SolutionCache> cache = nullptr);

  SolutionPtr evaluate(const Genome& g);
  bool exhausted() const;
  const Problem& problem() const { return *problem_; }
  std::shared_ptr<const Problem> problem_ptr() const { return problem_; }
  BalancerStats& stats() { return stats_; }
  BalancerStats finish();
  // Tracks the best stable candidate seen so far.
  void offer(const SolutionPtr& s);
  const SolutionPtr& best() const { return best_; }

 private:
  std::shared_ptr<const Problem> problem_;
  StrategyConfig cfg_;
  std::shared_ptr<SolutionCache> cache_;
  BalancerStats stats_;
  SolutionPtr best_;
  std::uint64_t cache_hits_base_ = 0;
  std::uint64_t cache_misses_base_ = 0;
  std::chrono::steady_clock::time_point start_;
};

// Random assignment repaired by moving max(1, floor(10%)) of the tasks on
// overloaded nodes per loop. Throws InfeasibleError once the loop cap is hit.
// `loops` receives the number of repair iterations.
Genome random_stable_solution(const Problem& p, Rng& rng, std::uint64_t max_loops,
                              std::uint64_t* loops = nullptr);

BalancerResult greedy(std::shared_ptr<const Problem> p, const StrategyConfig& cfg);
BalancerResult tabu_search(std::shared_ptr<const Problem> p, const StrategyConfig& cfg);
BalancerResult simulated_annealing(std::shared_ptr<const Problem> p, const StrategyConfig& cfg);
BalancerResult genetic(std::shared_ptr<const Problem> p, const StrategyConfig& cfg);
BalancerResult seeded_genetic(std::shared_ptr<const Problem> p, const StrategyConfig& cfg);
BalancerResult full_scan(std::shared_ptr<const Problem> p, const StrategyConfig& cfg);

BalancerResult run_strategy(StrategyKind k, std::shared_ptr<const Problem> p,
                            const StrategyConfig& cfg);

// Single restart of a local-search strategy; used as an SGA seeder.
SolutionPtr single_run(StrategyKind k, Evaluator& ev, Rng& rng, const StrategyConfig& cfg);

}  // namespace cellsim::metaheuristics

#endif  // CELLSIM_METAHEURISTICS_STRATEGIES_H_
