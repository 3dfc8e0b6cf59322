#ifndef CELLSIM_METAHEURISTICS_CACHE_H_
#define CELLSIM_METAHEURISTICS_CACHE_H_

#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <unordered_map>

#include "cellsim/metaheuristics/problem.h"

namespace cellsim::metaheuristics {

// Bounded LRU of evaluated candidates keyed by genome. Safe for concurrent
// use; a racing duplicate build is discarded in favour of the stored value.
class SolutionCache {
 public:
  explicit SolutionCache(std::size_t capacity = 500000);

  SolutionPtr lookup_or_insert(const Genome& key, const std::function<SolutionPtr()>& builder);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t hits() const;
  std::uint64_t misses() const;
  void clear();

 private:
  using Order = std::list<Genome>;
  struct Slot {
    SolutionPtr value;
    Order::iterator pos;
  };

  std::size_t capacity_;
  mutable std::mutex mu_;
  Order order_;  // front = most recent
  std::unordered_map<Genome, Slot, GenomeHash> map_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace cellsim::metaheuristics

#endif  // CELLSIM_METAHEURISTICS_CACHE_H_
