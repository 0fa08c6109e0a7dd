#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cpslab/grid.hpp"

namespace cpslab {

enum class CrossingMode { interpolated, grid_snap };

struct LadderParams {
    double epsilon0 = 0.1;
    CrossingMode crossing_mode = CrossingMode::interpolated;

    LadderParams() = default;
    LadderParams(double eps0, CrossingMode mode) : epsilon0(eps0), crossing_mode(mode) {
        if (!(eps0 > 0.0)) throw std::invalid_argument("LadderParams: epsilon0 must be positive");
    }

    double barrier() const { return std::log1p(epsilon0); }
};

// epsilon = (1+eps0)^3 - 1, the cost level certified by the ladder envelope.
inline double effective_epsilon(double epsilon0) {
    // Horner form keeps the decimal examples exact (0.1 -> 0.331).
    return epsilon0 * (3.0 + epsilon0 * (3.0 + epsilon0));
}

// First-exit ladder of a path from the symmetric log-barrier band. Entry n
// describes the n-th stopping time; index 0 is the start, the last entry is
// the retirement at T (sign 0).
struct LadderResult {
    std::vector<double> taus;      // tau_0 = 0 .. tau_N = T, strictly increasing
    std::vector<int> signs;        // R_1..R_N, R_N = 0, values in {-1,0,+1}
    std::vector<int> levels;       // cumulative sums of signs, levels[0] = 0
    std::vector<double> x_at_tau;  // X at the stopping times (snapped in interpolated mode)
    std::vector<double> z_values;  // Z_n = Z_0 (1+eps0)^{levels[n]}
    std::size_t retired_at = 0;    // stopping-time index N of the retirement step
    double epsilon0 = 0.0;
    double x0 = 0.0;

    std::size_t rung_count() const { return signs.empty() ? 0 : signs.size() - 1; }
    // log Z_n computed exactly from the level lattice
    double log_z(std::size_t n) const {
        return x0 + static_cast<double>(levels[n]) * std::log1p(epsilon0);
    }
};

inline LadderResult build_ladder(const SamplePath& path, const LadderParams& params) {
    const double b = params.barrier();
    const double x0 = path.values.front();
    const double T = path.grid.horizon;

    LadderResult out;
    out.epsilon0 = params.epsilon0;
    out.x0 = x0;
    out.taus.push_back(0.0);
    out.levels.push_back(0);
    out.x_at_tau.push_back(x0);

    int level = 0;
    double anchor = x0;  // always x0 + level*b in interpolated mode
    double seg_t0 = 0.0;
    double seg_x0 = x0;

    const std::size_t n = path.grid.n_steps;
    for (std::size_t i = 1; i <= n; ++i) {
        const double t1 = path.grid.time(i);
        const double x1 = path.values[i];

        if (params.crossing_mode == CrossingMode::grid_snap) {
            if (std::fabs(x1 - anchor) >= b && t1 < T) {
                const int sign = x1 > anchor ? 1 : -1;
                level += sign;
                anchor = x1;
                out.taus.push_back(t1);
                out.signs.push_back(sign);
                out.levels.push_back(level);
                out.x_at_tau.push_back(x1);
            }
            continue;
        }

        // Interpolated mode: the segment may cross several shrunken bands in
        // one grid cell; resolve crossings in time order within the cell.
        double cur_t = seg_t0;
        double cur_x = seg_x0;
        while (true) {
            const double upper = anchor + b;
            const double lower = anchor - b;
            double hit_t = 0.0;
            int sign = 0;
            if (x1 >= upper && x1 > cur_x) {
                const double theta = (upper - cur_x) / (x1 - cur_x);
                hit_t = cur_t + theta * (t1 - cur_t);
                sign = 1;
            } else if (x1 <= lower && x1 < cur_x) {
                const double theta = (lower - cur_x) / (x1 - cur_x);
                hit_t = cur_t + theta * (t1 - cur_t);
                sign = -1;
            } else {
                break;
            }
            if (!(hit_t < T)) break;  // exits at or beyond T are retirement
            // guard against zero-length steps from repeated values
            if (hit_t <= out.taus.back()) hit_t = std::nextafter(out.taus.back(), T);
            level += sign;
            anchor = x0 + static_cast<double>(level) * b;  // snap to the barrier lattice
            out.taus.push_back(hit_t);
            out.signs.push_back(sign);
            out.levels.push_back(level);
            out.x_at_tau.push_back(anchor);
            cur_t = hit_t;
            cur_x = anchor;
        }
        seg_t0 = t1;
        seg_x0 = x1;
    }

    // retirement at the horizon
    out.taus.push_back(T);
    out.signs.push_back(0);
    out.levels.push_back(level);
    out.x_at_tau.push_back(path.values.back());
    out.retired_at = out.taus.size() - 1;  // signs[retired_at - 1] is the trailing 0

    const double z0 = std::exp(x0);
    out.z_values.resize(out.levels.size());
    for (std::size_t k = 0; k < out.levels.size(); ++k)
        out.z_values[k] = z0 * std::exp(static_cast<double>(out.levels[k]) * b);
    return out;
}

// Extrema of the three multiplicative factors whose product represents
// Z_n / Y_t between consecutive stopping times, checked at grid times.
struct SandwichReport {
    double factor_z_over_y_min = 1.0, factor_z_over_y_max = 1.0;  // Z_n / Y_{tau_n}
    double factor_prev_over_t_min = 1.0, factor_prev_over_t_max = 1.0;  // Y_{tau_{n-1}} / Y_t
    double factor_step_min = 1.0, factor_step_max = 1.0;  // Y_{tau_n} / Y_{tau_{n-1}}
    std::size_t n_checks = 0;
    std::size_t n_violations = 0;
    double max_overshoot_log = 0.0;  // max(|log factor| - b, 0) over all checks
    double bound_lo = 0.0, bound_hi = 0.0;        // [(1+eps0)^{-1}, 1+eps0]
    double envelope_lo = 0.0, envelope_hi = 0.0;  // (1+eps0)^{\pm 3}
};

inline SandwichReport validate_sandwich(const SamplePath& path, const LadderResult& ladder,
                                        const LadderParams& params) {
    if (ladder.epsilon0 != params.epsilon0 || ladder.x0 != path.values.front() ||
        ladder.taus.back() != path.grid.horizon)
        throw std::logic_error("validate_sandwich: ladder does not match path/params");

    const double b = params.barrier();
    const bool interpolated = params.crossing_mode == CrossingMode::interpolated;
    SandwichReport rep;
    rep.bound_lo = 1.0 / (1.0 + params.epsilon0);
    rep.bound_hi = 1.0 + params.epsilon0;
    const double e3 = effective_epsilon(params.epsilon0);
    rep.envelope_hi = 1.0 + e3;
    rep.envelope_lo = 1.0 / (1.0 + e3);

    double lg_f1_min = 0.0, lg_f1_max = 0.0;
    double lg_f2_min = 0.0, lg_f2_max = 0.0;
    double lg_f3_min = 0.0, lg_f3_max = 0.0;

    auto check = [&](double lg, double& mn, double& mx) {
        ++rep.n_checks;
        mn = std::min(mn, lg);
        mx = std::max(mx, lg);
        const double over = std::fabs(lg) - b;
        if (over > 0.0) {
            ++rep.n_violations;
            rep.max_overshoot_log = std::max(rep.max_overshoot_log, over);
        }
    };

    const std::size_t N = ladder.retired_at;
    const std::size_t n_steps = path.grid.n_steps;
    std::size_t gi = 1;  // next grid index to consume
    for (std::size_t n = 1; n <= N; ++n) {
        const double tau_prev = ladder.taus[n - 1];
        const double tau_n = ladder.taus[n];
        // anchor value X_{tau_{n-1}}: lattice-exact in interpolated mode
        const double x_prev = ladder.x_at_tau[n - 1];

        // factor Z_n / Y_{tau_n}
        const double lg_f1 =
            n < N || !interpolated ? ladder.log_z(n) - ladder.x_at_tau[n]
                                   : ladder.log_z(n) - path.values.back();
        check(lg_f1, lg_f1_min, lg_f1_max);

        // factor Y_{tau_n} / Y_{tau_{n-1}}: exactly +-b per rung in
        // interpolated mode, raw difference otherwise
        double lg_f3;
        if (interpolated && n < N)
            lg_f3 = static_cast<double>(ladder.signs[n - 1]) * b;
        else
            lg_f3 = ladder.x_at_tau[n] - x_prev;
        check(lg_f3, lg_f3_min, lg_f3_max);

        // factor Y_{tau_{n-1}} / Y_t at grid times strictly inside the rung
        check(0.0, lg_f2_min, lg_f2_max);  // t = tau_{n-1} itself
        while (gi <= n_steps && path.grid.time(gi) < tau_n) {
            if (path.grid.time(gi) > tau_prev)
                check(x_prev - path.values[gi], lg_f2_min, lg_f2_max);
            ++gi;
        }
        check(-lg_f3, lg_f2_min, lg_f2_max);  // t = tau_n
    }

    rep.factor_z_over_y_min = std::exp(lg_f1_min);
    rep.factor_z_over_y_max = std::exp(lg_f1_max);
    rep.factor_prev_over_t_min = std::exp(lg_f2_min);
    rep.factor_prev_over_t_max = std::exp(lg_f2_max);
    rep.factor_step_min = std::exp(lg_f3_min);
    rep.factor_step_max = std::exp(lg_f3_max);
    return rep;
}

}  // namespace cpslab
