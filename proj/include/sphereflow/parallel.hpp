#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

namespace sphereflow {

// Number of workers: SPHEREFLOW_WORKERS if set and positive, otherwise the
// hardware concurrency. set_worker_count overrides both (0 restores default).
int worker_count();
void set_worker_count(int n);

// Runs body(begin, end) over a static partition of [0, n). Results must be
// written by index so that the outcome does not depend on the partition.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// Splits [0, n) into fixed-size blocks, accumulates each block into its own
// Acc with body(begin, end, acc), then merges the blocks in order. The result
// does not depend on the worker count.
template <class Acc, class Body>
Acc blocked_reduce(std::size_t n, std::size_t block, const Body& body) {
  const std::size_t nb = (n + block - 1) / block;
  std::vector<Acc> parts(nb);
  parallel_for(nb, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) body(k * block, std::min(n, (k + 1) * block), parts[k]);
  });
  Acc total{};
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace sphereflow
