#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace yamabe {

// Worker cap for cell sweeps. Work is cut into fixed blocks whose size does not
// depend on the thread count, and reductions add block partials in block order,
// so results are bit-identical for any setting.
inline int& thread_cap() {
  static int n = 1;
  return n;
}

inline void set_threads(int n) { thread_cap() = std::max(1, n); }

constexpr long kBlock = 4096;

template <typename F>
void parallel_blocks(long n, F&& body) {
  const long blocks = (n + kBlock - 1) / kBlock;
  const int T = int(std::min<long>(thread_cap(), blocks));
  auto run = [&](int t) {
    for (long b = t; b < blocks; b += T) body(b * kBlock, std::min(n, (b + 1) * kBlock));
  };
  if (T <= 1) {
    run(0);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 1; t < T; ++t) pool.emplace_back(run, t);
  run(0);
  for (auto& th : pool) th.join();
}

// sum of f(begin, end) over the fixed blocks
template <typename F>
double blocked_sum(long n, F&& f) {
  const long blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> part(blocks, 0.0);
  parallel_blocks(n, [&](long b, long e) { part[b / kBlock] = f(b, e); });
  double s = 0;
  for (double v : part) s += v;
  return s;
}

}  // namespace yamabe
