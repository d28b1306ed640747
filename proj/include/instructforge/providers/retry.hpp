#pragma once

#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>

namespace instructforge::providers {

// Thrown by an attempt that may succeed if repeated (connection refused,
// timeout, HTTP 5xx). Anything else propagates immediately.
class TransientFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds initial_backoff{50};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{2000};

  // The whole call, sleeps included, never exceeds this.
  std::chrono::milliseconds budget() const { return timeout * (max_retries + 1); }
};

struct RetryClock {
  std::function<std::chrono::steady_clock::time_point()> now = [] {
    return std::chrono::steady_clock::now();
  };
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Runs `attempt` up to max_retries + 1 times with exponential backoff between
// attempts. Each attempt receives the time it may spend, which shrinks as the
// overall budget runs out. Returns the number of attempts used; throws
// ProviderUnavailable once retries or budget are exhausted.
int call_with_retries(const std::function<void(std::chrono::milliseconds attempt_timeout)>& attempt,
                      const RetryPolicy& policy, const std::string& what,
                      const RetryClock& clock = {});

}  // namespace instructforge::providers
