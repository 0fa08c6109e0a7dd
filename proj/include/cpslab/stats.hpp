#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cpslab {

// Kahan-compensated accumulator; summation order is fixed by the caller so
// reductions stay independent of thread count.
class CompensatedSum {
public:
    void add(double x) {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// 95% Wilson score interval for a binomial proportion. Behaves correctly at
// zero hits: lo == 0 exactly iff hits == 0.
inline WilsonInterval wilson95(std::size_t hits, std::size_t n) {
    if (n == 0) throw std::invalid_argument("wilson95: n must be positive");
    constexpr double z = 1.959963984540054;  // Phi^{-1}(0.975)
    const double nd = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double center = p + z2 / (2.0 * nd);
    const double half = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
    WilsonInterval w;
    w.lo = hits == 0 ? 0.0 : std::max(0.0, (center - half) / denom);
    w.hi = hits == n ? 1.0 : std::min(1.0, (center + half) / denom);
    return w;
}

inline double mean(const std::vector<double>& xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return xs.empty() ? 0.0 : s.value() / static_cast<double>(xs.size());
}

inline double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    CompensatedSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(xs.size() - 1);
}

}  // namespace cpslab
