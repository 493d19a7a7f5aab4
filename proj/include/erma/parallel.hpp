#pragma once

#include <cstddef>
#include <functional>

namespace erma {

void set_threads(int k);
int threads();

// Runs body(chunk, begin, end) for chunks [c*chunk, min(n, (c+1)*chunk)).
// Chunk boundaries never depend on the thread count, so callers that
// reduce per-chunk results in chunk order get thread-independent output.
void for_chunks(std::size_t n, std::size_t chunk,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) { return (n + chunk - 1) / chunk; }

}  // namespace erma
