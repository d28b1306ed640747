#include "instructforge/providers/cache.hpp"

#include "instructforge/util/files.hpp"

namespace instructforge::providers {

ContentCache::ContentCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ContentCache::path_for(std::string_view ns, std::string_view key,
                                             std::string_view extension) const {
  const std::string shard(key.substr(0, std::min<std::size_t>(2, key.size())));
  std::string file(key);
  file += extension;
  return root_ / std::string(ns) / shard / file;
}

void ContentCache::count(std::string_view ns, bool hit) {
  std::lock_guard lock(mutex_);
  auto it = counters_.find(ns);
  if (it == counters_.end()) it = counters_.emplace(std::string(ns), CacheCounters{}).first;
  (hit ? it->second.hits : it->second.misses) += 1;
}

CacheCounters ContentCache::counters(std::string_view ns) const {
  std::lock_guard lock(mutex_);
  const auto it = counters_.find(ns);
  return it == counters_.end() ? CacheCounters{} : it->second;
}

std::string ContentCache::run_once(const std::string& slot, const std::function<std::string()>& fn) {
  std::promise<std::string> promise;
  std::shared_future<std::string> future;
  bool owner = false;
  {
    std::lock_guard lock(mutex_);
    const auto it = in_flight_.find(slot);
    if (it != in_flight_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      in_flight_.emplace(slot, future);
      owner = true;
    }
  }
  if (!owner) return future.get();
  try {
    promise.set_value(fn());
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(mutex_);
    in_flight_.erase(slot);
  }
  return future.get();
}

std::string ContentCache::get_or_create(std::string_view ns, std::string_view key,
                                        const std::function<std::string()>& produce) {
  const auto path = path_for(ns, key, ".json");
  const std::string slot = path.string();
  bool hit = true;
  std::string value = run_once(slot, [&]() -> std::string {
    if (std::filesystem::exists(path)) return util::read_file(path);
    hit = false;
    std::string blob = produce();
    util::atomic_write(path, blob);
    return blob;
  });
  count(ns, hit);
  return value;
}

}  // namespace instructforge::providers
