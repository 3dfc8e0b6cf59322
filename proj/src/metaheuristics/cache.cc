#include "cellsim/metaheuristics/cache.h"

#include "cellsim/common/errors.h"

namespace cellsim::metaheuristics {

SolutionCache::SolutionCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("solution cache capacity must be positive");
}

SolutionPtr SolutionCache::lookup_or_insert(const Genome& key,
                                            const std::function<SolutionPtr()>& builder) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) {
      ++hits_;
      order_.splice(order_.begin(), order_, it->second.pos);
      return it->second.value;
    }
    ++misses_;
  }
  // Build outside the lock so slow evaluations do not serialise callers.
  SolutionPtr built = builder();
  std::lock_guard<std::mutex> lock(mu_);
  auto it = map_.find(key);
  if (it != map_.end()) return it->second.value;
  order_.push_front(key);
  map_.emplace(key, Slot{built, order_.begin()});
  while (map_.size() > capacity_) {
    map_.erase(order_.back());
    order_.pop_back();
  }
  return built;
}

std::size_t SolutionCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return map_.size();
}
std::uint64_t SolutionCache::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}
std::uint64_t SolutionCache::misses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return misses_;
}
void SolutionCache::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  map_.clear();
  order_.clear();
}

}  // namespace cellsim::metaheuristics
