#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace instructforge::providers {

struct CacheCounters {
  std::size_t hits = 0;
  std::size_t misses = 0;
};

// Content-addressed store under one directory: <root>/<namespace>/<k[0:2]>/<k>.
// Within a process, concurrent requests for one key are collapsed so the
// producer runs once; across processes, files land by atomic rename.
class ContentCache {
 public:
  explicit ContentCache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path path_for(std::string_view ns, std::string_view key,
                                 std::string_view extension) const;

  // Returns the cached text blob for `key`, calling `produce` at most once
  // per key when it is absent.
  std::string get_or_create(std::string_view ns, std::string_view key,
                            const std::function<std::string()>& produce);

  CacheCounters counters(std::string_view ns) const;

 private:
  std::string run_once(const std::string& slot, const std::function<std::string()>& fn);
  void count(std::string_view ns, bool hit);

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_future<std::string>> in_flight_;
  std::map<std::string, CacheCounters, std::less<>> counters_;
};

}  // namespace instructforge::providers
