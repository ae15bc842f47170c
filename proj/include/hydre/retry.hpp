#pragma once

#include <chrono>
#include <functional>
#include <thread>
#include <vector>

#include "hydre/error.hpp"

namespace hydre {

struct RetryPolicy {
  using Sleep = std::function<void(std::chrono::milliseconds)>;

  // One entry per retry after the first failed attempt.
  std::vector<std::chrono::milliseconds> backoff{std::chrono::seconds(1), std::chrono::seconds(4),
                                                 std::chrono::seconds(16)};
  Sleep sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

  static RetryPolicy none() { return {{}, [](std::chrono::milliseconds) {}}; }
};

// Runs `fn`, retrying on TransportError per the policy. The last error propagates.
template <typename F>
auto with_retries(const RetryPolicy& policy, F&& fn) -> decltype(fn()) {
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= policy.backoff.size()) throw;
      policy.sleep(policy.backoff[attempt]);
    }
  }
}

}  // namespace hydre
