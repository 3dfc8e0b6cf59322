#ifndef CELLSIM_WORKLOAD_STATE_STORE_H_
#define CELLSIM_WORKLOAD_STATE_STORE_H_

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <mutex>
#include <shared_mutex>
#include <thread>
#include <unordered_map>
#include <vector>

namespace cellsim::workload {

// Concurrent key -> immutable value map with optimistic read-modify-write.
// Values are held behind shared_ptr<const V>; replace_with computes the new
// value outside any lock and commits only if the slot still holds the
// pointer it read, retrying otherwise. No update is ever lost.
template <typename K, typename V, typename Hash = std::hash<K>>
class StateStore {
 public:
  using Ptr = std::shared_ptr<const V>;

  std::optional<V> get(const K& key) const {
    Ptr p = load(key);
    if (!p) return std::nullopt;
    return *p;
  }

  Ptr load(const K& key) const {
    const Shard& s = shard(key);
    std::shared_lock lock(s.mu);
    auto it = s.map.find(key);
    return it == s.map.end() ? nullptr : it->second;
  }

  void put(const K& key, V value) {
    Shard& s = shard(key);
    auto p = std::make_shared<const V>(std::move(value));
    std::unique_lock lock(s.mu);
    s.map[key] = std::move(p);
  }

  bool erase(const K& key) {
    Shard& s = shard(key);
    std::unique_lock lock(s.mu);
    return s.map.erase(key) != 0;
  }

  // Applies `fn` to the current value until the compare-and-replace
  // succeeds. Returns the value that was replaced, or nullopt (and leaves
  // the map untouched) when the key is absent.
  template <typename Fn>
  std::optional<V> replace_with(const K& key, Fn&& fn) {
    Shard& s = shard(key);
    while (true) {
      Ptr current = load(key);
      if (!current) return std::nullopt;
      auto next = std::make_shared<const V>(fn(static_cast<const V&>(*current)));
      {
        std::unique_lock lock(s.mu);
        auto it = s.map.find(key);
        if (it == s.map.end()) return std::nullopt;
        if (it->second == current) {
          it->second = std::move(next);
          return *current;
        }
      }
      std::this_thread::yield();
    }
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const Shard& s : shards_) {
      std::shared_lock lock(s.mu);
      n += s.map.size();
    }
    return n;
  }

  // Snapshot of all entries (unordered).
  std::vector<std::pair<K, Ptr>> entries() const {
    std::vector<std::pair<K, Ptr>> out;
    for (const Shard& s : shards_) {
      std::shared_lock lock(s.mu);
      for (const auto& kv : s.map) out.emplace_back(kv.first, kv.second);
    }
    return out;
  }

 private:
  static constexpr std::size_t kShards = 16;
  struct Shard {
    mutable std::shared_mutex mu;
    std::unordered_map<K, Ptr, Hash> map;
  };
  Shard& shard(const K& key) { return shards_[Hash{}(key) % kShards]; }
  const Shard& shard(const K& key) const { return shards_[Hash{}(key) % kShards]; }

  std::array<Shard, kShards> shards_;
};

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_STATE_STORE_H_
