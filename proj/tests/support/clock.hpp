#pragma once

#include "litharvest/connector.hpp"

#include <chrono>
#include <memory>
#include <mutex>
#include <vector>

namespace support {

// Manual clock: sleeping advances time instantly and is recorded.
struct VirtualClock {
  std::mutex mutex;
  std::chrono::steady_clock::time_point now{std::chrono::seconds(1000)};
  std::vector<std::chrono::nanoseconds> sleeps;

  litharvest::TimeSource source() {
    litharvest::TimeSource t;
    t.now = [this] {
      std::lock_guard lock(mutex);
      return now;
    };
    t.sleep = [this](std::chrono::nanoseconds d) {
      std::lock_guard lock(mutex);
      sleeps.push_back(d);
      if (d.count() > 0) now += d;
    };
    return t;
  }

  void advance(std::chrono::nanoseconds d) {
    std::lock_guard lock(mutex);
    now += d;
  }
};

}  // namespace support
