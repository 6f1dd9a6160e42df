#ifndef MPD_PARALLEL_H_
#define MPD_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace mpd {

// Worker cap: MPD_THREADS if set to a positive integer, else the hardware
// concurrency (at least 1).
std::size_t WorkerCount();

// Calls fn(begin, end) on contiguous blocks covering [0, n). Blocks run on
// up to WorkerCount() threads; ranges shorter than `grain` per worker stay
// on the calling thread. fn must only write to state owned by its block.
void ParallelFor(std::size_t n, std::size_t grain,
                 const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace mpd

#endif  // MPD_PARALLEL_H_
