#pragma once

#include <chrono>
#include <ctime>
#include <functional>
#include <string>

namespace qzlora {

/// Source of ISO-8601 UTC timestamps for persisted records. Pipelines running
/// against mock providers use a fixed clock so stores are reproducible.
struct Clock {
  std::function<std::string()> now;

  static Clock system() {
    return Clock{[] {
      const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::tm tm{};
      gmtime_r(&t, &tm);
      char buf[32];
      std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
      return std::string(buf);
    }};
  }

  static Clock fixed(std::string stamp = "1970-01-01T00:00:00Z") {
    return Clock{[stamp = std::move(stamp)] { return stamp; }};
  }
};

}  // namespace qzlora
