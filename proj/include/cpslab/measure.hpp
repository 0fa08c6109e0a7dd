#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cpslab/retirement.hpp"
#include "cpslab/stats.hpp"

namespace cpslab {

// Transition law of the level-indexed retirement chain under the equivalent
// martingale measure. One-parameter family: q0 = beta retires the walk
// geometrically, and (q+, q-) solve q+(1+e0) + q-/(1+e0) = 1 - beta, which is
// exactly the condition making Z_n a martingale. All three probabilities are
// strictly positive, so the reweighted law is equivalent to the original.
struct ChainMeasure {
    double epsilon0 = 0.0;
    double beta = 0.0;
    double q_plus = 0.0;
    double q_minus = 0.0;
    double q_zero = 0.0;

    double prob(int sign) const {
        if (sign > 0) return q_plus;
        if (sign < 0) return q_minus;
        return q_zero;
    }
};

inline ChainMeasure make_chain_measure(double epsilon0, double beta) {
    if (!(epsilon0 > 0.0))
        throw std::invalid_argument("make_chain_measure: epsilon0 must be positive");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("make_chain_measure: beta must be in (0,1)");
    ChainMeasure chain;
    chain.epsilon0 = epsilon0;
    chain.beta = beta;
    chain.q_plus = (1.0 - beta) / (epsilon0 + 2.0);
    chain.q_minus = (1.0 - beta) * (1.0 + epsilon0) / (epsilon0 + 2.0);
    chain.q_zero = beta;
    return chain;
}

struct TerminalExpectation {
    double total = 0.0;         // E_Q[Z_{N ^ horizon}]; equals z0 by the martingale identity
    double retired_mass = 0.0;  // E_Q[Z_N 1{N <= horizon}]
    double alive_mass = 0.0;    // E_Q[Z_horizon 1{N > horizon}] = z0 (1-beta)^horizon
};

// Exact dynamic programming on the level chain truncated at horizon_rungs.
inline TerminalExpectation expected_terminal_detail(const ChainMeasure& chain, double z0,
                                                    std::size_t horizon_rungs) {
    if (horizon_rungs < 1)
        throw std::invalid_argument("expected_terminal: horizon_rungs must be >= 1");
    const std::size_t width = 2 * horizon_rungs + 1;  // levels -H..H
    const auto z_at = [&](std::size_t idx) {
        const double level = static_cast<double>(idx) - static_cast<double>(horizon_rungs);
        return z0 * std::exp(level * std::log1p(chain.epsilon0));
    };
    std::vector<double> alive(width, 0.0);
    alive[horizon_rungs] = 1.0;
    CompensatedSum retired;
    for (std::size_t step = 0; step < horizon_rungs; ++step) {
        std::vector<double> next(width, 0.0);
        for (std::size_t k = 0; k < width; ++k) {
            const double p = alive[k];
            if (p == 0.0) continue;
            retired.add(p * chain.q_zero * z_at(k));
            if (k + 1 < width) next[k + 1] += p * chain.q_plus;
            if (k > 0) next[k - 1] += p * chain.q_minus;
        }
        alive.swap(next);
    }
    TerminalExpectation out;
    CompensatedSum alive_value;
    for (std::size_t k = 0; k < width; ++k)
        if (alive[k] != 0.0) alive_value.add(alive[k] * z_at(k));
    out.retired_mass = retired.value();
    out.alive_mass = alive_value.value();
    out.total = out.retired_mass + out.alive_mass;
    return out;
}

inline double expected_terminal(const ChainMeasure& chain, double z0, std::size_t horizon_rungs) {
    return expected_terminal_detail(chain, z0, horizon_rungs).total;
}

// Z~ at the rung times is the walk itself; the inter-rung envelope is
// certified by validate_sandwich.
inline std::vector<double> conditional_cps_values(const ChainMeasure& chain,
                                                  const LadderResult& ladder) {
    if (chain.epsilon0 != ladder.epsilon0)
        throw std::logic_error("conditional_cps_values: chain/ladder epsilon0 mismatch");
    return ladder.z_values;
}

struct PathWeight {
    std::size_t ladder_index = 0;
    double log_weight = 0.0;
    double normalized_weight = 0.0;
};

struct DegenerateEnsembleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kRungBucketCap = 20;

inline std::size_t rung_bucket(std::size_t rung_index) {
    return std::min(rung_index, kRungBucketCap);
}

// Radon-Nikodym weights of the chain law against empirical per-bucket sign
// frequencies. Requires both directions to be represented in every visited
// bucket (a bucket where every observation retires is an absorbing truncation
// boundary and is exempt; conditioning on retirement by a fixed rung does not
// move the martingale mean).
inline std::vector<PathWeight> reweight_ensemble(const std::vector<LadderResult>& ladders,
                                                 const ChainMeasure& chain) {
    if (ladders.empty()) throw std::invalid_argument("reweight_ensemble: empty ensemble");

    const std::size_t n_buckets = kRungBucketCap + 1;
    std::vector<std::array<std::size_t, 3>> counts(n_buckets, {0, 0, 0});
    std::vector<std::size_t> totals(n_buckets, 0);
    for (const auto& ladder : ladders) {
        for (std::size_t n = 0; n < ladder.signs.size(); ++n) {
            const std::size_t b = rung_bucket(n);
            ++counts[b][static_cast<std::size_t>(ladder.signs[n] + 1)];
            ++totals[b];
        }
    }
    for (std::size_t b = 0; b < n_buckets; ++b) {
        if (totals[b] == 0) continue;
        if (counts[b][1] == totals[b]) continue;  // all retirements: truncation boundary
        if (counts[b][0] == 0 || counts[b][2] == 0)
            throw DegenerateEnsembleError(
                "reweight_ensemble: rung bucket " + std::to_string(b) +
                " lacks one movement direction; enlarge the ensemble");
    }

    std::vector<PathWeight> weights(ladders.size());
    for (std::size_t i = 0; i < ladders.size(); ++i) {
        const auto& ladder = ladders[i];
        double lw = 0.0;
        for (std::size_t n = 0; n < ladder.signs.size(); ++n) {
            const std::size_t b = rung_bucket(n);
            const double p_hat =
                static_cast<double>(counts[b][static_cast<std::size_t>(ladder.signs[n] + 1)]) /
                static_cast<double>(totals[b]);
            lw += std::log(chain.prob(ladder.signs[n])) - std::log(p_hat);
        }
        weights[i].ladder_index = i;
        weights[i].log_weight = lw;
    }

    double max_lw = weights.front().log_weight;
    for (const auto& w : weights) max_lw = std::max(max_lw, w.log_weight);
    CompensatedSum norm;
    for (const auto& w : weights) norm.add(std::exp(w.log_weight - max_lw));
    const double z = norm.value();
    for (auto& w : weights) w.normalized_weight = std::exp(w.log_weight - max_lw) / z;
    return weights;
}

}  // namespace cpslab
