/*
 * Copyright 2026 The hjmm-riesz Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "hjmm/basis.hpp"
#include "hjmm/errors.hpp"

namespace hjmm::fft {

enum class Direction { forward, backward };

namespace detail {

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n, Direction dir) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, dir == Direction::forward);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf,
                                       dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        HJMM_REQUIRE(p != nullptr, Error, "fftw plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& kv : plans_) fftw_destroy_plan(kv.second);
    }

    std::mutex mutex_;
    std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized in-place DFT. Forward: X_m = sum_j x_j e^{-2 pi i j m / N};
/// backward uses e^{+2 pi i j m / N}. Safe to call from several threads.
inline void transform(std::span<cplx> data, Direction dir) {
    if (data.empty()) return;
    fftw_plan p = detail::PlanCache::instance().get(data.size(), dir);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, buf, buf);
}

inline std::vector<cplx> forward(std::vector<cplx> x) {
    transform(x, Direction::forward);
    return x;
}

inline std::vector<cplx> backward(std::vector<cplx> x) {
    transform(x, Direction::backward);
    return x;
}

/// Slot of frequency n (possibly negative) in a length-N transform.
inline std::size_t slot(int n, std::size_t N) {
    const long m = static_cast<long>(n) % static_cast<long>(N);
    return static_cast<std::size_t>(m < 0 ? m + static_cast<long>(N) : m);
}

/// Smallest power of two >= n.
inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace hjmm::fft
