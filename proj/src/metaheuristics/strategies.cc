#include "cellsim/metaheuristics/strategies.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "cellsim/common/errors.h"

namespace cellsim::metaheuristics {

namespace {

// Strictly lower (STC, migrations); genome order alone is not progress.
bool Improves(const CandidateSolution& a, const CandidateSolution& b) {
  if (a.stable() != b.stable()) return a.stable();
  if (a.stc() != b.stc()) return a.stc() < b.stc();
  return a.moved() < b.moved();
}

void RandomMove(Genome& g, const Problem& p, Rng& rng) {
  const std::size_t t = rng.below(g.size());
  std::uint64_t n = rng.below(p.node_count() - 1);
  if (n >= g[t]) ++n;
  g[t] = static_cast<std::uint16_t>(n);
}

// Stable starting assignment short-circuits every strategy with STC 0.
bool TryOrigin(Evaluator& ev) {
  auto g = ev.problem().origin_genome();
  if (!g) return false;
  auto s = ev.evaluate(*g);
  if (!s->stable()) return false;
  ev.offer(s);
  return true;
}

BalancerResult Finish(Evaluator& ev) {
  BalancerResult r;
  r.best = ev.best();
  r.stable = r.best && r.best->stable();
  r.stats = ev.finish();
  return r;
}

std::optional<Genome> TryRandomStable(Evaluator& ev, Rng& rng, const StrategyConfig& cfg) {
  std::uint64_t loops = 0;
  try {
    Genome g = random_stable_solution(ev.problem(), rng, cfg.random_solution_loops, &loops);
    ev.stats().random_solution_loops += loops;
    return g;
  } catch (const InfeasibleError&) {
    ev.stats().random_solution_loops += loops;
    return std::nullopt;
  }
}

SolutionPtr GreedyRun(Evaluator& ev, Rng& rng, const StrategyConfig& cfg) {
  auto start = TryRandomStable(ev, rng, cfg);
  if (!start) return nullptr;
  SolutionPtr cur = ev.evaluate(*start);
  ev.offer(cur);
  while (!ev.exhausted()) {
    SolutionPtr best_n;
    for (const auto& nb : neighbors(cur->genome(), ev.problem())) {
      if (ev.exhausted()) break;
      auto s = ev.evaluate(nb);
      if (s->stable() && Improves(*s, *cur) && (!best_n || Better(*s, *best_n))) best_n = s;
    }
    if (!best_n) break;
    cur = best_n;
    ev.offer(cur);
  }
  return cur;
}

SolutionPtr TabuRun(Evaluator& ev, Rng& rng, const StrategyConfig& cfg) {
  auto start = TryRandomStable(ev, rng, cfg);
  if (!start) return nullptr;
  std::unordered_set<Genome, GenomeHash> visited;
  SolutionPtr cur = ev.evaluate(*start);
  ev.offer(cur);
  visited.insert(cur->genome());
  SolutionPtr run_best = cur;
  std::uint64_t dull = 0;
  while (!ev.exhausted()) {
    SolutionPtr best_n;
    for (const auto& nb : neighbors(cur->genome(), ev.problem())) {
      if (ev.exhausted()) break;
      if (visited.count(nb)) continue;
      auto s = ev.evaluate(nb);
      if (s->stable() && (!best_n || Better(*s, *best_n))) best_n = s;
    }
    if (!best_n) break;
    if (Improves(*best_n, *run_best)) {
      run_best = best_n;
      dull = 0;
    } else if (dull++ >= cfg.tabu_dull_move_limit) {
      break;
    }
    cur = best_n;
    visited.insert(cur->genome());
    ev.offer(cur);
  }
  return run_best;
}

SolutionPtr AnnealRun(Evaluator& ev, Rng& rng, const StrategyConfig& cfg) {
  auto start = TryRandomStable(ev, rng, cfg);
  if (!start) return nullptr;
  const Problem& p = ev.problem();
  SolutionPtr cur = ev.evaluate(*start);
  ev.offer(cur);
  SolutionPtr run_best = cur;
  if (p.node_count() < 2 || p.task_count() == 0) return run_best;

  std::vector<double> deltas;
  for (std::uint64_t i = 0; i < cfg.sa_t0_samples && !ev.exhausted(); ++i) {
    Genome g = cur->genome();
    RandomMove(g, p, rng);
    auto s = ev.evaluate(g);
    const double d = std::fabs(s->stc() - cur->stc());
    if (s->stable() && d > 0) deltas.push_back(d);
  }
  double t0 = 1.0;
  if (!deltas.empty()) {
    std::nth_element(deltas.begin(), deltas.begin() + deltas.size() / 2, deltas.end());
    t0 = deltas[deltas.size() / 2];
  }
  const std::uint64_t chain = p.task_count();
  for (double temp = t0; temp > t0 * cfg.sa_min_temperature_ratio && !ev.exhausted();
       temp *= cfg.sa_cooling) {
    for (std::uint64_t k = 0; k < chain && !ev.exhausted(); ++k) {
      Genome g = cur->genome();
      RandomMove(g, p, rng);
      auto s = ev.evaluate(g);
      if (!s->stable()) continue;
      const double delta = s->stc() - cur->stc();
      if (delta <= 0 || rng.uniform() < std::exp(-delta / temp)) {
        cur = s;
        ev.offer(cur);
        if (Better(*cur, *run_best)) run_best = cur;
      }
    }
  }
  return run_best;
}

void SortPopulation(std::vector<SolutionPtr>& pop) {
  std::sort(pop.begin(), pop.end(),
            [](const SolutionPtr& a, const SolutionPtr& b) { return Better(*a, *b); });
}

const SolutionPtr& Tournament(const std::vector<SolutionPtr>& pop, std::size_t k, Rng& rng) {
  const SolutionPtr* best = &pop[rng.below(pop.size())];
  for (std::size_t i = 1; i < k; ++i) {
    const SolutionPtr& c = pop[rng.below(pop.size())];
    if (Better(*c, **best)) best = &c;
  }
  return *best;
}

// Shared generational loop. `inject(gen)` supplies fresh individuals that
// replace the tail of the offspring; an empty return means none this round.
void EvolutionLoop(Evaluator& ev, Rng& rng, const StrategyConfig& cfg,
                   std::vector<SolutionPtr> pop,
                   const std::function<std::vector<SolutionPtr>(std::uint64_t)>& inject) {
  const Problem& p = ev.problem();
  const std::size_t size = pop.size();
  if (size < 2 || p.node_count() < 2) return;
  SortPopulation(pop);
  for (std::uint64_t gen = 1; !ev.exhausted(); ++gen) {
    ++ev.stats().runs;
    std::vector<SolutionPtr> next(pop.begin(), pop.begin() + std::min(cfg.ga_elite, size));
    std::vector<SolutionPtr> fresh = inject(gen);
    const std::size_t room = size > fresh.size() ? size - fresh.size() : next.size();
    while (next.size() < room && !ev.exhausted()) {
      const Genome& a = Tournament(pop, cfg.ga_tournament, rng)->genome();
      const Genome& b = Tournament(pop, cfg.ga_tournament, rng)->genome();
      Genome child(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) child[i] = (rng() & 1) ? a[i] : b[i];
      if (rng.uniform() < cfg.ga_mutation_rate) RandomMove(child, p, rng);
      auto s = ev.evaluate(child);
      ev.offer(s);
      next.push_back(std::move(s));
    }
    for (auto& f : fresh) {
      if (next.size() >= size) break;
      next.push_back(std::move(f));
    }
    // Budget ran out mid-generation: keep the previous individuals as filler.
    for (std::size_t i = 0; next.size() < size; ++i) next.push_back(pop[i]);
    SortPopulation(next);
    pop = std::move(next);
  }
}

std::vector<SolutionPtr> RandomPopulation(Evaluator& ev, Rng& rng, const StrategyConfig& cfg,
                                          std::size_t n) {
  std::vector<SolutionPtr> pop;
  while (pop.size() < n && !ev.exhausted()) {
    auto g = TryRandomStable(ev, rng, cfg);
    if (!g) break;
    auto s = ev.evaluate(*g);
    ev.offer(s);
    pop.push_back(std::move(s));
  }
  return pop;
}

template <typename RunFn>
BalancerResult Restarting(std::shared_ptr<const Problem> p, const StrategyConfig& cfg, RunFn run) {
  cfg.validate();
  Evaluator ev(std::move(p), cfg);
  if (TryOrigin(ev)) return Finish(ev);
  for (std::uint64_t r = 0; !ev.exhausted(); ++r) {
    if (cfg.max_runs && r >= *cfg.max_runs) break;
    Rng rng(DeriveSeed(*cfg.seed, r + 1));
    ++ev.stats().runs;
    if (!run(ev, rng, cfg)) break;  // no stable start: give up
  }
  return Finish(ev);
}

}  // namespace

std::string StrategyName(StrategyKind k) {
  switch (k) {
    case StrategyKind::kGreedy: return "greedy";
    case StrategyKind::kTabu: return "tabu";
    case StrategyKind::kAnnealing: return "sa";
    case StrategyKind::kGenetic: return "ga";
    case StrategyKind::kSeededGenetic: return "sga";
    case StrategyKind::kFullScan: return "full-scan";
  }
  return "?";
}

StrategyKind ParseStrategy(const std::string& name) {
  for (auto k : {StrategyKind::kGreedy, StrategyKind::kTabu, StrategyKind::kAnnealing,
                 StrategyKind::kGenetic, StrategyKind::kSeededGenetic, StrategyKind::kFullScan}) {
    if (StrategyName(k) == name) return k;
  }
  throw ConfigError("unknown strategy '" + name + "'");
}

void StrategyConfig::validate() const {
  if (!seed) throw ConfigError("strategy seed is mandatory");
  if (!time_budget_s && !candidate_budget && !max_runs) {
    throw ConfigError("strategy needs a time, candidate or run budget");
  }
  if (time_budget_s && !(*time_budget_s > 0)) throw ConfigError("time budget must be positive");
  if (random_solution_loops == 0) throw ConfigError("random solution loop cap must be positive");
  if (!(sa_cooling > 0 && sa_cooling < 1)) throw ConfigError("SA cooling must be in (0,1)");
  if (!(sa_min_temperature_ratio > 0 && sa_min_temperature_ratio < 1)) {
    throw ConfigError("SA minimum temperature ratio must be in (0,1)");
  }
  if (ga_population < 2) throw ConfigError("GA population must be at least 2");
  if (!(ga_mutation_rate >= 0 && ga_mutation_rate <= 1)) {
    throw ConfigError("GA mutation rate must be in [0,1]");
  }
  if (ga_tournament == 0) throw ConfigError("GA tournament size must be positive");
  if (!(sga_pool_fraction > 0 && sga_pool_fraction <= 1)) {
    throw ConfigError("SGA pool fraction must be in (0,1]");
  }
  if (sga_seeders.empty()) throw ConfigError("SGA needs at least one seeder");
  for (auto k : sga_seeders) {
    if (k != StrategyKind::kGreedy && k != StrategyKind::kTabu && k != StrategyKind::kAnnealing) {
      throw ConfigError("SGA seeders must be greedy, tabu or sa");
    }
  }
  if (!(full_scan_leaf_cap >= 1)) throw ConfigError("full scan leaf cap must be >= 1");
  if (cache_capacity == 0) throw ConfigError("cache capacity must be positive");
}

Evaluator::Evaluator(std::shared_ptr<const Problem> problem, const StrategyConfig& cfg,
                     std::shared_ptr<SolutionCache> cache)
    : problem_(std::move(problem)), cfg_(cfg), cache_(std::move(cache)),
      start_(std::chrono::steady_clock::now()) {
  if (!cache_ && cfg_.use_cache) cache_ = std::make_shared<SolutionCache>(cfg_.cache_capacity);
  if (cache_) {
    cache_hits_base_ = cache_->hits();
    cache_misses_base_ = cache_->misses();
  }
}

SolutionPtr Evaluator::evaluate(const Genome& g) {
  ++stats_.candidates_examined;
  auto build = [&] {
    auto s = std::make_shared<CandidateSolution>(problem_, g);
    s->stable();  // force derivation before the value is shared
    return SolutionPtr(std::move(s));
  };
  if (!cache_) {
    ++stats_.unique_candidates;
    return build();
  }
  return cache_->lookup_or_insert(g, build);
}

bool Evaluator::exhausted() const {
  if (cfg_.candidate_budget && stats_.candidates_examined >= *cfg_.candidate_budget) return true;
  if (cfg_.time_budget_s) {
    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_;
    if (el.count() >= *cfg_.time_budget_s) return true;
  }
  return false;
}

void Evaluator::offer(const SolutionPtr& s) {
  if (s && s->stable() && (!best_ || Better(*s, *best_))) best_ = s;
}

BalancerStats Evaluator::finish() {
  const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_;
  stats_.elapsed_s = el.count();
  if (cache_) {
    stats_.cache_hits = cache_->hits() - cache_hits_base_;
    stats_.unique_candidates = cache_->misses() - cache_misses_base_;
  }
  return stats_;
}

Genome random_stable_solution(const Problem& p, Rng& rng, std::uint64_t max_loops,
                              std::uint64_t* loops) {
  if (loops) *loops = 0;
  const std::size_t T = p.task_count(), N = p.node_count(), D = p.dims();
  if (N == 0) {
    if (T == 0) return {};
    throw InfeasibleError("no target nodes");
  }
  Genome g(T);
  for (auto& v : g) v = static_cast<std::uint16_t>(rng.below(N));
  std::vector<double> avail(N * D);
  std::vector<std::size_t> over;
  std::vector<char> overloaded(N);
  for (std::uint64_t loop = 0;; ++loop) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t d = 0; d < D; ++d) avail[n * D + d] = p.capacity(n, d);
    }
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t d = 0; d < D; ++d) avail[g[t] * D + d] -= p.demand(t, d);
    }
    for (std::size_t n = 0; n < N; ++n) {
      overloaded[n] = 0;
      for (std::size_t d = 0; d < D; ++d) {
        if (!(avail[n * D + d] >= 0.0)) overloaded[n] = 1;
      }
    }
    over.clear();
    for (std::size_t t = 0; t < T; ++t) {
      if (overloaded[g[t]]) over.push_back(t);
    }
    if (over.empty()) return g;
    if (loop >= max_loops) {
      throw InfeasibleError("no stable random solution after " + std::to_string(max_loops) +
                            " repair loops");
    }
    if (loops) *loops = loop + 1;
    if (N < 2) continue;  // cannot move anything; loop runs into the cap
    const std::size_t x = std::max<std::size_t>(1, over.size() / 10);
    // Partial Fisher-Yates picks x distinct overloaded tasks.
    for (std::size_t i = 0; i < x; ++i) {
      std::swap(over[i], over[i + rng.below(over.size() - i)]);
      const std::size_t t = over[i];
      std::uint64_t n = rng.below(N - 1);
      if (n >= g[t]) ++n;
      g[t] = static_cast<std::uint16_t>(n);
    }
  }
}

BalancerResult greedy(std::shared_ptr<const Problem> p, const StrategyConfig& cfg) {
  return Restarting(std::move(p), cfg, GreedyRun);
}

BalancerResult tabu_search(std::shared_ptr<const Problem> p, const StrategyConfig& cfg) {
  return Restarting(std::move(p), cfg, TabuRun);
}

BalancerResult simulated_annealing(std::shared_ptr<const Problem> p, const StrategyConfig& cfg) {
  return Restarting(std::move(p), cfg, AnnealRun);
}

SolutionPtr single_run(StrategyKind k, Evaluator& ev, Rng& rng, const StrategyConfig& cfg) {
  switch (k) {
    case StrategyKind::kGreedy: return GreedyRun(ev, rng, cfg);
    case StrategyKind::kTabu: return TabuRun(ev, rng, cfg);
    case StrategyKind::kAnnealing: return AnnealRun(ev, rng, cfg);
    default: throw ConfigError("strategy " + StrategyName(k) + " has no single run");
  }
}

BalancerResult genetic(std::shared_ptr<const Problem> p, const StrategyConfig& cfg) {
  cfg.validate();
  Evaluator ev(std::move(p), cfg);
  if (TryOrigin(ev)) return Finish(ev);
  Rng rng(DeriveSeed(*cfg.seed, 0x6a));
  auto pop = RandomPopulation(ev, rng, cfg, cfg.ga_population);
  if (pop.size() < cfg.ga_population) return Finish(ev);
  EvolutionLoop(ev, rng, cfg, std::move(pop), [&](std::uint64_t) {
    return RandomPopulation(ev, rng, cfg, cfg.ga_drift);
  });
  return Finish(ev);
}

BalancerResult seeded_genetic(std::shared_ptr<const Problem> p, const StrategyConfig& cfg) {
  cfg.validate();
  Evaluator ev(std::move(p), cfg);
  if (TryOrigin(ev)) return Finish(ev);
  Rng rng(DeriveSeed(*cfg.seed, 0x56a));
  const std::size_t pool = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::lround(cfg.ga_population * cfg.sga_pool_fraction)));
  std::uint64_t seeder_runs = 0;
  auto seed_one = [&]() -> SolutionPtr {
    const StrategyKind k = cfg.sga_seeders[seeder_runs % cfg.sga_seeders.size()];
    Rng run_rng(DeriveSeed(*cfg.seed, 0x5eed0000 + seeder_runs));
    ++seeder_runs;
    auto s = single_run(k, ev, run_rng, cfg);
    return s && s->stable() ? s : nullptr;
  };
  std::vector<SolutionPtr> pop;
  while (pop.size() < pool && !ev.exhausted()) {
    auto s = seed_one();
    if (!s) break;
    pop.push_back(std::move(s));
  }
  // Seeders failed or ran out of budget: top up with random stable solutions.
  if (pop.size() < pool) {
    auto extra = RandomPopulation(ev, rng, cfg, pool - pop.size());
    pop.insert(pop.end(), extra.begin(), extra.end());
  }
  if (pop.size() < 2) return Finish(ev);
  EvolutionLoop(ev, rng, cfg, std::move(pop), [&](std::uint64_t gen) {
    std::vector<SolutionPtr> fresh;
    if (cfg.sga_reseed_interval && gen % cfg.sga_reseed_interval == 0) {
      if (auto s = seed_one()) fresh.push_back(std::move(s));
    }
    return fresh;
  });
  return Finish(ev);
}

BalancerResult full_scan(std::shared_ptr<const Problem> prob, const StrategyConfig& cfg) {
  cfg.validate();
  const Problem& p = *prob;
  const std::size_t T = p.task_count(), N = p.node_count(), D = p.dims();
  const double log_leaves = N == 0 ? 0.0 : static_cast<double>(T) * std::log10(static_cast<double>(N));
  if (log_leaves > std::log10(cfg.full_scan_leaf_cap) + 1e-12) {
    throw SearchSpaceTooLarge("full scan tree has ~1e" + std::to_string(log_leaves) +
                              " leaves, above the configured cap");
  }
  StrategyConfig unlimited = cfg;
  unlimited.candidate_budget.reset();
  unlimited.time_budget_s.reset();
  unlimited.max_runs = 1;
  unlimited.use_cache = false;
  Evaluator ev(prob, unlimited);
  ev.stats().runs = 1;
  if (N == 0) {
    if (T == 0) ev.offer(ev.evaluate({}));
    return Finish(ev);
  }

  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.cost(a) > p.cost(b); });

  constexpr double kSlack = 1e-9;  // exact stability is re-checked at leaves
  std::vector<double> load(N * D, 0.0);
  std::vector<double> free_total(D, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t d = 0; d < D; ++d) free_total[d] += p.capacity(n, d);
  }
  // suffix[k][d]: demand of tasks order[k..] in dimension d.
  std::vector<double> suffix((T + 1) * D, 0.0);
  for (std::size_t k = T; k-- > 0;) {
    for (std::size_t d = 0; d < D; ++d) {
      suffix[k * D + d] = suffix[(k + 1) * D + d] + p.demand(order[k], d);
    }
  }
  auto fits = [&](std::size_t t, std::size_t n) {
    for (std::size_t d = 0; d < D; ++d) {
      if (load[n * D + d] + p.demand(t, d) > p.capacity(n, d) + kSlack) return false;
    }
    return true;
  };

  double best_stc = std::numeric_limits<double>::infinity();
  std::size_t best_moves = std::numeric_limits<std::size_t>::max();
  Genome g(T), best_g;
  std::uint64_t visited = 0;

  std::function<void(std::size_t, double, std::size_t)> dfs = [&](std::size_t k, double stc,
                                                                   std::size_t moves) {
    ++visited;
    if (k == T) {
      if (stc < best_stc || (stc == best_stc && moves < best_moves)) {
        CandidateSolution leaf(prob, g);
        if (leaf.stable()) {
          best_stc = stc;
          best_moves = moves;
          best_g = g;
        }
      }
      return;
    }
    for (std::size_t d = 0; d < D; ++d) {
      if (suffix[k * D + d] > free_total[d] + kSlack) return;
    }
    double lb = stc;
    std::size_t lb_moves = moves;
    for (std::size_t i = k; i < T; ++i) {
      const std::size_t t = order[i];
      const std::int32_t o = p.origin(t);
      if (o == Problem::kNoOrigin || !fits(t, static_cast<std::size_t>(o))) {
        lb += p.cost(t);
        ++lb_moves;
      }
    }
    if (lb > best_stc || (lb == best_stc && lb_moves >= best_moves)) return;

    const std::size_t t = order[k];
    const std::int32_t o = p.origin(t);
    auto descend = [&](std::size_t n) {
      if (!fits(t, n)) return;
      for (std::size_t d = 0; d < D; ++d) {
        load[n * D + d] += p.demand(t, d);
        free_total[d] -= p.demand(t, d);
      }
      g[t] = static_cast<std::uint16_t>(n);
      const bool moved = static_cast<std::int32_t>(n) != o;
      dfs(k + 1, stc + (moved ? p.cost(t) : 0.0), moves + (moved ? 1 : 0));
      for (std::size_t d = 0; d < D; ++d) {
        load[n * D + d] -= p.demand(t, d);
        free_total[d] += p.demand(t, d);
      }
    };
    if (o != Problem::kNoOrigin) descend(static_cast<std::size_t>(o));
    for (std::size_t n = 0; n < N; ++n) {
      if (static_cast<std::int32_t>(n) != o) descend(n);
    }
  };
  dfs(0, 0.0, 0);
  ev.stats().candidates_examined = visited;
  ev.stats().unique_candidates = visited;
  if (!best_g.empty() || (T == 0 && best_stc == 0.0)) ev.offer(ev.evaluate(best_g));
  BalancerResult r = Finish(ev);
  r.stats.candidates_examined = visited;
  r.stats.unique_candidates = visited;
  return r;
}

BalancerResult run_strategy(StrategyKind k, std::shared_ptr<const Problem> p,
                            const StrategyConfig& cfg) {
  switch (k) {
    case StrategyKind::kGreedy: return greedy(std::move(p), cfg);
    case StrategyKind::kTabu: return tabu_search(std::move(p), cfg);
    case StrategyKind::kAnnealing: return simulated_annealing(std::move(p), cfg);
    case StrategyKind::kGenetic: return genetic(std::move(p), cfg);
    case StrategyKind::kSeededGenetic: return seeded_genetic(std::move(p), cfg);
    case StrategyKind::kFullScan: return full_scan(std::move(p), cfg);
  }
  throw ConfigError("unknown strategy");
}

}  // namespace cellsim::metaheuristics
