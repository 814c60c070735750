#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ratio_mle/errors.hpp"

namespace ratio_mle {

inline constexpr const char* kThreadsEnvVar = "RATIO_MLE_THREADS";

// Explicit request, else RATIO_MLE_THREADS, else hardware concurrency.
inline std::size_t resolve_threads(std::optional<std::size_t> requested = std::nullopt) {
  if (requested) {
    if (*requested == 0) throw validation_error("threads: must be at least 1");
    return *requested;
  }
  if (const char* env = std::getenv(kThreadsEnvVar); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || v == 0)
      throw validation_error(std::string(kThreadsEnvVar) + ": expected a positive integer");
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count) on up to `threads` workers. Bodies write
// only to their own slot, so results do not depend on scheduling. The
// exception from the lowest failing index is rethrown.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

} // namespace ratio_mle
