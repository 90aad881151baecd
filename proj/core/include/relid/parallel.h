// core/include/relid/parallel.h

// Copyright 2026  relid contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef RELID_PARALLEL_H_
#define RELID_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace relid {

// Worker count: RELID_THREADS when set to a positive integer, otherwise the
// hardware concurrency.
int NumThreads();

// Runs fn(i) for i in [0, n). Work is split into contiguous shards; callers
// write results into per-index slots so the outcome never depends on the
// thread count. The first exception thrown by any shard is rethrown.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)> &fn);

}  // namespace relid

#endif  // RELID_PARALLEL_H_
