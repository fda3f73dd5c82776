// SPDX-License-Identifier: Apache-2.0

#include "cirrange/dft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace cirrange {
namespace {

class PlanCache {
public:
    fftw_plan get(int n, DftDirection dir) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_pair(n, dir == DftDirection::Forward ? 0 : 1);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n));
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(n, buf, buf,
                                          dir == DftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

void unitary_dft(std::span<std::complex<double>> data, DftDirection direction) {
    if (data.empty()) return;
    const int n = static_cast<int>(data.size());
    fftw_plan plan = plan_cache().get(n, direction);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& x : data) x *= scale;
}

}  // namespace cirrange
