#pragma once

#include <cstddef>
#include <functional>

namespace tsb {

/// Caps worker parallelism process-wide. 0 restores the hardware default.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs fn(begin, end) over [0, count) split into blocks of block_size.
/// The block layout depends only on (count, block_size), never on the
/// thread count, so callers that write results indexed by position get
/// identical output for any --threads value. Nested calls from inside a
/// worker run inline.
void parallel_for(std::size_t count, std::size_t block_size,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace tsb
