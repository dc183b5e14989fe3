#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace lsds {

// Runs body(i) for i in [0, n) on up to `jobs` threads. Work is assigned by
// index, so results never depend on the job count.
template <typename Body>
void parallel_for(std::size_t n, std::size_t jobs, Body&& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&, j] {
      try {
        for (std::size_t i = j; i < n; i += jobs) body(i);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace lsds
