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

#include "qspeckle/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "qspeckle/error.hpp"

namespace qspeckle {

int configure_threads_from_env() {
    int threads = 0;
    if (const char* env = std::getenv("QSPECKLE_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        require(end != env && *end == '\0' && v >= 0, ErrorKind::InvalidArgument,
                std::string("QSPECKLE_THREADS must be a non-negative integer, got '") + env + "'");
        threads = static_cast<int>(v);
    }
    set_thread_count(threads);
    return thread_count();
}

void set_thread_count(int threads) {
    omp_set_num_threads(threads > 0 ? threads : omp_get_num_procs());
}

int thread_count() {
    return omp_get_max_threads();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace qspeckle
