#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpslab/events.hpp"
#include "cpslab/grid.hpp"
#include "cpslab/parallel.hpp"
#include "cpslab/stats.hpp"
#include "cpslab/transforms.hpp"

namespace cpslab {

// Price scale of the traded process. Trade rules always resolve on the model
// path; the map converts the (snapped) model value at a trade time into the
// traded price. exp(X) for log-price models, the identity for processes
// already in price scale, or a registered transform x -> alpha f(x) so that
// exact barrier snapping on the model path carries through to exact prices.
struct PriceMap {
    enum class Kind { exponential, identity, transform };
    Kind kind = Kind::exponential;
    TransformSpec transform;  // used when kind == transform

    double operator()(double x) const {
        switch (kind) {
            case Kind::exponential: return std::exp(x);
            case Kind::identity: return x;
            case Kind::transform: return evaluate(transform, x);
        }
        return x;
    }

    static PriceMap exponential_map() { return PriceMap{}; }
    static PriceMap identity_map() {
        PriceMap m;
        m.kind = Kind::identity;
        return m;
    }
    static PriceMap transform_map(TransformSpec t) {
        PriceMap m;
        m.kind = Kind::transform;
        m.transform = std::move(t);
        return m;
    }

    std::string describe() const {
        switch (kind) {
            case Kind::exponential: return "exponential";
            case Kind::identity: return "identity";
            case Kind::transform: return "transform:" + transform.id;
        }
        return "?";
    }
};

inline SamplePath to_price_path(const SamplePath& path, const PriceMap& map) {
    SamplePath out = path;
    for (auto& v : out.values) v = map(v);
    return out;
}

struct TradeRule {
    enum class Kind { deterministic_time, first_hit_abs };
    Kind kind = Kind::deterministic_time;
    double time = 0.0;
    double level = 0.0;  // first_hit_abs: first t with |price| = level
    double cap = 0.0;

    static TradeRule deterministic(double s) {
        TradeRule r;
        r.time = s;
        return r;
    }
    static TradeRule first_hit_abs(double level, double cap) {
        TradeRule r;
        r.kind = Kind::first_hit_abs;
        r.level = level;
        r.cap = cap;
        return r;
    }

    std::string describe() const {
        if (kind == Kind::deterministic_time) return "t=" + std::to_string(time);
        return "hit_abs(" + std::to_string(level) + ",cap=" + std::to_string(cap) + ")";
    }
};

struct StrategyLeg {
    TradeRule entry;
    TradeRule exit;
    double size = 1.0;
};

struct StrategySpec {
    std::vector<StrategyLeg> legs;
    double min_wait = 0.0;  // minimal time between consecutive trades, pathwise

    std::string describe() const {
        std::string s = "h=" + std::to_string(min_wait);
        for (const auto& leg : legs)
            s += " [" + leg.entry.describe() + " -> " + leg.exit.describe() +
                 " x" + std::to_string(leg.size) + "]";
        return s;
    }
};

enum class Verdict { arbitrage_certificate, no_arbitrage_evidence, inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::arbitrage_certificate: return "arbitrage_certificate";
        case Verdict::no_arbitrage_evidence: return "no_arbitrage_evidence";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct PnlReport {
    std::size_t n_paths = 0;
    double min_gain = 0.0;
    double max_gain = 0.0;
    double mean_gain = 0.0;
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
    double frac_negative_beyond_tol = 0.0;
    double frac_positive_beyond_tol = 0.0;
    double tol = 1e-9;
    Verdict verdict = Verdict::inconclusive;
    bool clipped_to_horizon = false;  // some trade time was clipped at T
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct TradePoint {
    double time = 0.0;
    double price = 0.0;
    bool clipped = false;
};

// Rules resolve on the model path; the price at the trade time is the map
// applied to the (snapped) model value, so first-hit prices are exact.
inline TradePoint resolve_trade(const SamplePath& model_path, const TradeRule& rule,
                                const PriceMap& price_map, double earliest) {
    const double T = model_path.grid.horizon;
    TradePoint tp;
    if (rule.kind == TradeRule::Kind::deterministic_time) {
        tp.time = rule.time;
        tp.price = price_map(model_path.at(tp.time));
    } else {
        const auto hit = resolve_first_hit_abs(model_path, rule.level, rule.cap);
        tp.time = hit.tau;
        tp.price = price_map(hit.x_tau);
    }
    // waiting-time deferral, then horizon clipping
    if (tp.time < earliest) {
        tp.time = earliest;
        tp.price = price_map(model_path.at(tp.time));
    }
    if (tp.time > T) {
        tp.time = T;
        tp.price = price_map(model_path.values.back());
        tp.clipped = true;
    }
    return tp;
}

}  // namespace detail

// Frictionless terminal P&L of one strategy on one model path.
inline double strategy_pnl(const SamplePath& model_path, const StrategySpec& strategy,
                           const PriceMap& price_map, bool* clipped = nullptr) {
    double pnl = 0.0;
    double prev_trade = -1.0;  // no previous trade yet
    for (const auto& leg : strategy.legs) {
        const double earliest_entry =
            prev_trade < 0.0 ? 0.0 : prev_trade + strategy.min_wait;
        const auto entry =
            detail::resolve_trade(model_path, leg.entry, price_map, earliest_entry);
        const auto exit = detail::resolve_trade(model_path, leg.exit, price_map,
                                                entry.time + strategy.min_wait);
        if (clipped && (entry.clipped || exit.clipped)) *clipped = true;
        pnl += leg.size * (exit.price - entry.price);
        prev_trade = exit.time;
    }
    return pnl;
}

inline PnlReport evaluate_strategy(const std::vector<SamplePath>& ensemble,
                                   const StrategySpec& strategy, const PriceMap& price_map,
                                   double tol = 1e-9) {
    if (ensemble.empty()) throw std::invalid_argument("evaluate_strategy: empty ensemble");
    if (!(tol >= 0.0)) throw std::invalid_argument("evaluate_strategy: tol must be >= 0");
    std::vector<double> gains(ensemble.size());
    std::vector<std::uint8_t> clipped(ensemble.size(), 0);
    parallel_for(ensemble.size(), [&](std::size_t i) {
        bool c = false;
        gains[i] = strategy_pnl(ensemble[i], strategy, price_map, &c);
        clipped[i] = c ? 1 : 0;
    });

    PnlReport rep;
    rep.n_paths = gains.size();
    rep.tol = tol;
    rep.mean_gain = mean(gains);
    std::size_t n_neg = 0, n_pos = 0;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        if (gains[i] <= -tol) ++n_neg;
        if (gains[i] > tol) ++n_pos;
        if (clipped[i]) rep.clipped_to_horizon = true;
    }
    std::vector<double> sorted = gains;
    std::sort(sorted.begin(), sorted.end());
    rep.min_gain = sorted.front();
    rep.max_gain = sorted.back();
    rep.q05 = detail::quantile_sorted(sorted, 0.05);
    rep.q25 = detail::quantile_sorted(sorted, 0.25);
    rep.q50 = detail::quantile_sorted(sorted, 0.50);
    rep.q75 = detail::quantile_sorted(sorted, 0.75);
    rep.q95 = detail::quantile_sorted(sorted, 0.95);
    const double n = static_cast<double>(gains.size());
    rep.frac_negative_beyond_tol = static_cast<double>(n_neg) / n;
    rep.frac_positive_beyond_tol = static_cast<double>(n_pos) / n;
    rep.verdict = rep.frac_negative_beyond_tol == 0.0 && rep.frac_positive_beyond_tol > 0.0
                      ? Verdict::arbitrage_certificate
                      : Verdict::no_arbitrage_evidence;
    return rep;
}

struct StrategyLattice {
    std::vector<double> hit_levels;         // first_hit_abs exit levels, cap = T
    std::vector<double> deterministic_times;  // entry/exit candidate times

    bool empty() const { return hit_levels.empty() && deterministic_times.empty(); }
};

// Levels are in model-path scale (the scale trade rules resolve on).
inline StrategyLattice default_strategy_lattice(double T) {
    StrategyLattice lat;
    lat.hit_levels = {0.25, 0.5, 1.0};
    lat.deterministic_times = {0.0, 0.25 * T, 0.5 * T, 0.75 * T, T};
    return lat;
}

struct ScanResult {
    StrategySpec best_strategy;
    PnlReport best_report;
    bool certificate_found = false;
    std::size_t n_evaluated = 0;
};

// Exhaustive evaluation of single-leg strategies over the lattice. The
// strategy class searched is a lower bound on arbitrage opportunities: a scan
// without a certificate is "no certificate found", never a no-arbitrage claim.
inline ScanResult scan_threshold_strategies(const std::vector<SamplePath>& ensemble,
                                            double min_wait, const StrategyLattice& lattice,
                                            const PriceMap& price_map, double tol = 1e-9) {
    if (lattice.empty())
        throw std::invalid_argument("scan_threshold_strategies: empty lattice");
    if (ensemble.empty())
        throw std::invalid_argument("scan_threshold_strategies: empty ensemble");
    const double T = ensemble.front().grid.horizon;

    std::vector<StrategySpec> candidates;
    std::vector<TradeRule> exits;
    for (double lvl : lattice.hit_levels) exits.push_back(TradeRule::first_hit_abs(lvl, T));
    for (double t : lattice.deterministic_times) exits.push_back(TradeRule::deterministic(t));
    for (double t_entry : lattice.deterministic_times) {
        if (t_entry >= T) continue;
        for (const auto& exit : exits) {
            if (exit.kind == TradeRule::Kind::deterministic_time &&
                exit.time < t_entry + min_wait)
                continue;
            for (double size : {1.0, -1.0}) {
                StrategySpec s;
                s.min_wait = min_wait;
                s.legs.push_back({TradeRule::deterministic(t_entry), exit, size});
                candidates.push_back(std::move(s));
            }
        }
    }

    ScanResult result;
    result.n_evaluated = candidates.size();
    std::vector<PnlReport> reports(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        reports[i] = evaluate_strategy(ensemble, candidates[i], price_map, tol);
        if (reports[i].verdict == Verdict::arbitrage_certificate)
            result.certificate_found = true;
    }
    // argmax min-gain subject to positive mean; deterministic lexicographic
    // tie-break on (min, mean, lattice order). Without any positive-mean
    // candidate, fall back to the overall argmax.
    auto better = [&](std::size_t a, std::size_t b) {
        if (reports[a].min_gain != reports[b].min_gain)
            return reports[a].min_gain > reports[b].min_gain;
        return reports[a].mean_gain > reports[b].mean_gain;
    };
    std::size_t best = 0;
    bool best_eligible = reports[0].mean_gain > 0.0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const bool eligible = reports[i].mean_gain > 0.0;
        if ((eligible && !best_eligible) ||
            (eligible == best_eligible && better(i, best))) {
            best = i;
            best_eligible = eligible;
        }
    }
    result.best_strategy = candidates[best];
    result.best_report = reports[best];
    return result;
}

}  // namespace cpslab
