#pragma once

#include <chrono>
#include <exception>
#include <thread>

namespace qzlora {

/// Attempts per remote call and the first backoff delay; each further delay
/// doubles.
struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};

  static RetryPolicy immediate(int attempts = 3) { return {attempts, std::chrono::milliseconds{0}}; }
};

/// Calls `fn` until it returns without throwing or the attempts run out; the
/// last exception propagates.
template <class Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  auto delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (...) {
      if (attempt >= policy.attempts) throw;
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

}  // namespace qzlora
