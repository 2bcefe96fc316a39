#pragma once

#include <cstdint>
#include <functional>

namespace icf {

// Worker count used by the convolution kernels. Work is partitioned across
// whole output elements and each element's reduction stays sequential, so
// results are bitwise independent of this setting.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [0, count), contiguous blocks per worker.
void parallel_for(int64_t count, const std::function<void(int64_t)>& fn);

}  // namespace icf
