#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace cpslab::fft {

namespace detail {

// FFTW planning is not thread safe; new-array execution is. Plans are cached
// per (size, sign) and created with FFTW_UNALIGNED so they can execute on any
// caller-owned buffer.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> dummy(n);
        fftw_plan plan = fftw_plan_dft_1d(
            static_cast<int>(n), reinterpret_cast<fftw_complex*>(dummy.data()),
            reinterpret_cast<fftw_complex*>(dummy.data()), sign,
            FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw std::runtime_error("fft: plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace detail

// In-place unnormalized complex DFT, sign = FFTW_FORWARD or FFTW_BACKWARD.
inline void dft_inplace(std::vector<std::complex<double>>& data, int sign) {
    if (data.empty()) return;
    fftw_plan plan = detail::PlanCache::instance().get(data.size(), sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
}

inline void forward(std::vector<std::complex<double>>& data) { dft_inplace(data, FFTW_FORWARD); }
inline void backward(std::vector<std::complex<double>>& data) { dft_inplace(data, FFTW_BACKWARD); }

}  // namespace cpslab::fft
