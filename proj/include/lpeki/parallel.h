#ifndef LPEKI_PARALLEL_H_
#define LPEKI_PARALLEL_H_

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace lpeki {

/// Calls fn(i) for i in [0, n) on up to `threads` threads (static striping).
/// If any call throws, the exception of the smallest failing i is rethrown
/// after all threads finish. Each worker stops at its first failure, which
/// keeps the reported index the smallest failing one.
template <typename Fn>
void parallel_for(long n, int threads, Fn&& fn) {
  if (n <= 0) return;
  const long workers = std::clamp<long>(threads, 1, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto body = [&](long start) {
    for (long i = start; i < n; i += workers) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long w = 0; w < workers; ++w) pool.emplace_back(body, w);
  }
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

}  // namespace lpeki

#endif  // LPEKI_PARALLEL_H_
