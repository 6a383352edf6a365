#pragma once

namespace salguide {

// Keeps freed tensor buffers in the heap instead of returning them to the OS,
// which avoids page-fault churn from repeated large allocations. No-op off glibc.
void configure_allocator();

}  // namespace salguide
