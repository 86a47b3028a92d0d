// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace chartsurf::core {

/// Caps the worker count used by parallel_chunks. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Splits [0, n) into `chunks` contiguous ranges and runs
/// fn(chunk_index, begin, end) for each, possibly concurrently.
///
/// The chunk layout depends only on (n, chunks), never on the worker count,
/// so per-chunk partial results reduced in chunk order give bit-identical
/// totals at any thread count.
void parallel_chunks(size_t n, size_t chunks,
                     const std::function<void(size_t, size_t, size_t)>& fn);

/// parallel_chunks with a default chunk count (fixed multiple of a nominal
/// worker count; still independent of the configured thread count).
void parallel_for(size_t n, const std::function<void(size_t, size_t, size_t)>& fn);

/// Deterministic sum of per-chunk doubles: runs fn(chunk, begin, end) -> double
/// and adds the results in chunk order.
double parallel_sum(size_t n, size_t chunks,
                    const std::function<double(size_t, size_t, size_t)>& fn);

}  // namespace chartsurf::core
