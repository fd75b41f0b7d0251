// Copyright 2026 The QSpeckle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace qspeckle {

/// Applies QSPECKLE_THREADS (0 or unset = all hardware threads) and returns
/// the resulting worker count.
int configure_threads_from_env();

void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n) across the worker pool with a static schedule.
/// Bodies must only write state owned by their own index. If any body throws,
/// the exception from the lowest failing index is rethrown after the loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace qspeckle
