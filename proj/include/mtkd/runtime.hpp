// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <malloc.h>

namespace mtkd {

// The tape allocates and frees multi-megabyte activation/grad buffers every
// iteration; with default glibc thresholds those round-trip through
// mmap/munmap and the page faults dominate the step time. Keeping large
// blocks on the heap roughly halves a training step.
inline void tune_allocator() {
#ifdef M_MMAP_THRESHOLD
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

} // namespace mtkd
