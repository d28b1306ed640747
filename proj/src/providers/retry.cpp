#include "instructforge/providers/retry.hpp"

#include <algorithm>
#include <thread>

#include "instructforge/errors.hpp"

namespace instructforge::providers {

using std::chrono::milliseconds;

int call_with_retries(const std::function<void(milliseconds)>& attempt, const RetryPolicy& policy,
                      const std::string& what, const RetryClock& clock) {
  const auto sleep = clock.sleep ? clock.sleep : [](milliseconds d) { std::this_thread::sleep_for(d); };
  const auto deadline = clock.now() + policy.budget();
  auto remaining = [&] {
    return std::chrono::duration_cast<milliseconds>(deadline - clock.now());
  };

  milliseconds backoff = policy.initial_backoff;
  std::string last_error;
  for (int n = 0; n <= policy.max_retries; ++n) {
    const milliseconds left = remaining();
    if (left <= milliseconds::zero()) break;
    try {
      attempt(std::min(policy.timeout, left));
      return n + 1;
    } catch (const TransientFailure& e) {
      last_error = e.what();
    }
    if (n == policy.max_retries) break;
    const milliseconds wait = std::min({backoff, policy.max_backoff, remaining()});
    if (wait > milliseconds::zero()) sleep(wait);
    backoff = milliseconds(static_cast<milliseconds::rep>(backoff.count() * policy.multiplier));
  }
  throw ProviderUnavailable(what + ": giving up after " + std::to_string(policy.max_retries + 1) +
                            " attempts: " + last_error);
}

}  // namespace instructforge::providers
