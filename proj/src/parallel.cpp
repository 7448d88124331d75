#include "uent/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace uent {

int thread_count() {
  if (const char* env = std::getenv("UENT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

void parallel_for(long begin, long end, const std::function<void(long)>& body) {
  const long len = end - begin;
  if (len <= 0) return;
  const int workers = static_cast<int>(std::min<long>(thread_count(), len));
  if (workers <= 1) {
    for (long i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(workers);
  for (int w = 0; w < workers; ++w) {
    const long lo = begin + len * w / workers;
    const long hi = begin + len * (w + 1) / workers;
    pool.emplace_back([&, lo, hi, w] {
      try {
        for (long i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace uent
