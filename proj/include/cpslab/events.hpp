#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpslab/grid.hpp"
#include "cpslab/parallel.hpp"
#include "cpslab/pathgen.hpp"
#include "cpslab/stats.hpp"

namespace cpslab {

struct SpecViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TauRule {
    enum class Kind { deterministic_time, first_hit };
    Kind kind = Kind::deterministic_time;
    double time = 0.0;   // deterministic_time
    double level = 0.0;  // first_hit: first t with X_t = level
    double cap = 0.0;    // first_hit: fallback time when the level is never hit

    static TauRule deterministic(double s) {
        TauRule r;
        r.time = s;
        return r;
    }
    static TauRule first_hit(double level, double cap) {
        TauRule r;
        r.kind = Kind::first_hit;
        r.level = level;
        r.cap = cap;
        return r;
    }

    // largest value the rule can take, for [0, T-h) range validation
    double max_value() const { return kind == Kind::deterministic_time ? time : cap; }

    std::string describe() const {
        if (kind == Kind::deterministic_time) return "t=" + std::to_string(time);
        return "hit(" + std::to_string(level) + ",cap=" + std::to_string(cap) + ")";
    }
};

struct TauResult {
    double tau = 0.0;
    double x_tau = 0.0;
};

// Interpolated first-crossing evaluation of the stopping rule.
inline TauResult resolve_tau(const SamplePath& path, const TauRule& rule) {
    TauResult out;
    if (rule.kind == TauRule::Kind::deterministic_time) {
        out.tau = rule.time;
        out.x_tau = path.at(rule.time);
        return out;
    }
    const double a = rule.level;
    if (path.values.front() == a) {
        out.tau = 0.0;
        out.x_tau = a;
        return out;
    }
    const bool from_below = path.values.front() < a;
    for (std::size_t i = 1; i < path.values.size(); ++i) {
        const double x1 = path.values[i];
        const bool crossed = from_below ? x1 >= a : x1 <= a;
        if (crossed) {
            const double x0v = path.values[i - 1];
            const double t0 = path.grid.time(i - 1);
            const double t1 = path.grid.time(i);
            const double theta = (a - x0v) / (x1 - x0v);
            const double t_hit = t0 + theta * (t1 - t0);
            if (t_hit >= rule.cap) break;
            out.tau = t_hit;
            out.x_tau = a;  // snapped to the level exactly
            return out;
        }
    }
    out.tau = rule.cap;
    out.x_tau = path.at(rule.cap);
    return out;
}

// First time |X_t| equals the level (two-sided), interpolated and snapped.
inline TauResult resolve_first_hit_abs(const SamplePath& path, double level, double cap) {
    TauResult out;
    if (std::fabs(path.values.front()) >= level) {
        out.tau = 0.0;
        out.x_tau = path.values.front();
        return out;
    }
    for (std::size_t i = 1; i < path.values.size(); ++i) {
        const double x1 = path.values[i];
        if (std::fabs(x1) >= level) {
            const double x0v = path.values[i - 1];
            const double t0 = path.grid.time(i - 1);
            const double t1 = path.grid.time(i);
            const double target = x1 > 0.0 ? level : -level;
            const double theta = (target - x0v) / (x1 - x0v);
            const double t_hit = t0 + theta * (t1 - t0);
            if (t_hit >= cap) break;
            out.tau = t_hit;
            out.x_tau = target;
            return out;
        }
    }
    out.tau = cap;
    out.x_tau = path.at(cap);
    return out;
}

namespace detail {

// Extrema of the piecewise-linear path over [ta, tb]: interior grid points
// plus interpolated endpoints.
struct Extrema {
    double min = 0.0;
    double max = 0.0;
};

inline Extrema path_extrema(const SamplePath& path, double ta, double tb) {
    Extrema e;
    const double va = path.at(ta);
    const double vb = path.at(tb);
    e.min = std::min(va, vb);
    e.max = std::max(va, vb);
    const double T = path.grid.horizon;
    const double n = static_cast<double>(path.grid.n_steps);
    std::size_t i0 = static_cast<std::size_t>(std::ceil(ta / T * n));
    std::size_t i1 = static_cast<std::size_t>(std::floor(tb / T * n));
    i1 = std::min(i1, path.grid.n_steps);
    for (std::size_t i = i0; i <= i1 && i < path.values.size(); ++i) {
        if (path.grid.time(i) < ta || path.grid.time(i) > tb) continue;
        e.min = std::min(e.min, path.values[i]);
        e.max = std::max(e.max, path.values[i]);
    }
    return e;
}

}  // namespace detail

// Event family parameters: membership follows the printed definitions
// verbatim. delta_unbounded skips the first-window constraint for j = +-1.
struct EventSpec {
    int j = 0;  // -1, 0, +1
    TauRule tau_rule;
    double h = 0.0;
    double delta = 0.0;
    bool delta_unbounded = false;
    double c = 0.0;

    void check(double horizon) const {
        if (j < -1 || j > 1) throw std::invalid_argument("EventSpec: j must be in {-1,0,+1}");
        if (!(h > 0.0 && h < horizon))
            throw std::invalid_argument("EventSpec: h must be in (0, T)");
        if (!(tau_rule.max_value() < horizon - h))
            throw SpecViolationError("EventSpec: tau_rule range exceeds [0, T-h)");
        if (!delta_unbounded && !(delta > 0.0))
            throw std::invalid_argument("EventSpec: delta must be positive");
        if (!(c > 0.0)) throw std::invalid_argument("EventSpec: c must be positive");
    }
};

inline bool event_member_at(const SamplePath& path, const EventSpec& spec, const TauResult& tr) {
    const double T = path.grid.horizon;
    if (!(tr.tau >= 0.0 && tr.tau < T - spec.h))
        throw SpecViolationError("event_member: tau outside [0, T-h)");
    // Half-open right end treated as closed at the last grid point before T.
    const double t_last = path.grid.time(path.grid.n_steps - 1);
    const double right = std::max(t_last, tr.tau + spec.h);

    if (spec.j == 0) {
        const auto e = detail::path_extrema(path, tr.tau, std::max(t_last, tr.tau));
        const double sup_abs = std::max(e.max - tr.x_tau, tr.x_tau - e.min);
        return spec.delta_unbounded || sup_abs < spec.delta;
    }
    const auto first = detail::path_extrema(path, tr.tau, tr.tau + spec.h);
    const auto second = detail::path_extrema(path, tr.tau + spec.h, right);
    if (spec.j == 1) {
        const bool w1 = spec.delta_unbounded || (first.max - tr.x_tau) < spec.delta;
        const bool w2 = (second.max - tr.x_tau) < -spec.c;
        return w1 && w2;
    }
    const bool w1 = spec.delta_unbounded || (first.min - tr.x_tau) > -spec.delta;
    const bool w2 = (second.min - tr.x_tau) > spec.c;
    return w1 && w2;
}

inline bool event_member(const SamplePath& path, const EventSpec& spec) {
    spec.check(path.grid.horizon);
    return event_member_at(path, spec, resolve_tau(path, spec.tau_rule));
}

struct BinCount {
    double x_lo = 0.0;
    double x_hi = 0.0;
    std::size_t hits = 0;
    std::size_t total = 0;
};

struct EventEstimate {
    EventSpec spec;
    std::size_t n_paths = 0;
    std::size_t hits = 0;
    double p_hat = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 1.0;
    std::vector<BinCount> bins;  // empty bins are reported, never dropped

    bool all_populated_bins_positive() const {
        if (hits == 0) return false;
        for (const auto& b : bins)
            if (b.total > 0 && b.hits == 0) return false;
        return true;
    }
};

// Tally + X_tau quantile binning from per-path observations. The binned
// positivity is the declared empirical surrogate for a.s. conditional
// positivity given F_tau.
inline EventEstimate estimate_from_observations(const EventSpec& spec,
                                                const std::vector<std::uint8_t>& members,
                                                const std::vector<double>& x_taus,
                                                std::size_t n_bins) {
    if (members.size() != x_taus.size() || members.empty())
        throw std::invalid_argument("estimate_from_observations: size mismatch");
    EventEstimate est;
    est.spec = spec;
    est.n_paths = members.size();
    for (auto m : members) est.hits += m ? 1 : 0;
    est.p_hat = static_cast<double>(est.hits) / static_cast<double>(est.n_paths);
    const auto w = wilson95(est.hits, est.n_paths);
    est.wilson_lo = w.lo;
    est.wilson_hi = w.hi;

    if (n_bins <= 1) return est;
    std::vector<double> sorted = x_taus;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;  // n_bins - 1 interior quantile edges
    for (std::size_t k = 1; k < n_bins; ++k)
        edges.push_back(sorted[k * sorted.size() / n_bins]);
    est.bins.resize(n_bins);
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto bin = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), x_taus[i]) - edges.begin());
        auto& b = est.bins[bin];
        if (b.total == 0) {
            b.x_lo = x_taus[i];
            b.x_hi = x_taus[i];
        } else {
            b.x_lo = std::min(b.x_lo, x_taus[i]);
            b.x_hi = std::max(b.x_hi, x_taus[i]);
        }
        ++b.total;
        if (members[i]) ++b.hits;
    }
    return est;
}

inline EventEstimate estimate_event(const std::vector<SamplePath>& ensemble,
                                    const EventSpec& spec, std::size_t n_bins) {
    if (ensemble.empty()) throw std::invalid_argument("estimate_event: empty ensemble");
    spec.check(ensemble.front().grid.horizon);
    std::vector<std::uint8_t> members(ensemble.size());
    std::vector<double> x_taus(ensemble.size());
    parallel_for(ensemble.size(), [&](std::size_t i) {
        const auto tr = resolve_tau(ensemble[i], spec.tau_rule);
        x_taus[i] = tr.x_tau;
        members[i] = event_member_at(ensemble[i], spec, tr) ? 1 : 0;
    });
    return estimate_from_observations(spec, members, x_taus, n_bins);
}

struct EventLattice {
    std::vector<TauRule> tau_rules;
    std::vector<double> hs;
    std::vector<double> deltas;  // j = +-1 first-window bounds; ignored when unbounded_delta
    // stays-in-band (j = 0) bounds; the band covers the whole remaining
    // horizon, so workable values are larger than the j = +-1 deltas.
    // Empty means: reuse `deltas`.
    std::vector<double> band_deltas;
    std::vector<double> cs;
    bool unbounded_delta = false;
};

inline EventLattice default_condition_lattice(double T) {
    EventLattice lat;
    lat.tau_rules = {TauRule::deterministic(0.0)};
    lat.hs = {0.25 * T, 0.5 * T};
    lat.deltas = {0.5, 1.0};
    lat.band_deltas = {2.0, 3.0};
    lat.cs = {0.5, 1.0};
    return lat;
}

// The delta = infinity geometry only constrains the tail window, so the
// default (NA) lattice probes late windows with small c; condition-(A)
// failures like the folded example still satisfy these cells.
inline EventLattice default_na_lattice(double T) {
    EventLattice lat;
    lat.tau_rules = {TauRule::deterministic(0.0)};
    lat.hs = {0.75 * T};
    lat.cs = {0.1, 0.25};
    lat.unbounded_delta = true;
    return lat;
}

struct ConditionCell {
    EventSpec spec;
    EventEstimate estimate;
    bool pass = false;
};

struct ConditionReport {
    bool pass = false;
    bool na_mode = false;  // j in {-1,+1} with the first window dropped
    std::size_t n_paths = 0;
    std::size_t n_bins = 0;
    std::vector<ConditionCell> cells;

    std::vector<const ConditionCell*> failing_cells() const {
        std::vector<const ConditionCell*> out;
        for (const auto& c : cells)
            if (!c.pass) out.push_back(&c);
        return out;
    }
};

namespace detail {

inline ConditionReport run_condition_lattice(const ModelSpec& model, const TimeGrid& grid,
                                             const EventLattice& lattice, std::size_t n_paths,
                                             std::size_t n_bins, std::uint64_t base_seed,
                                             bool na_mode, const TransformRegistry* registry) {
    if (n_paths < 1000)
        throw std::invalid_argument("condition check: ensemble must have >= 1e3 paths");
    std::vector<EventSpec> specs;
    std::vector<std::size_t> cell_rule;  // index into lattice.tau_rules per cell
    const std::vector<int> js = na_mode ? std::vector<int>{-1, 1} : std::vector<int>{-1, 0, 1};
    const bool unbounded = na_mode || lattice.unbounded_delta;
    const std::vector<double> deltas = unbounded ? std::vector<double>{0.0} : lattice.deltas;
    const std::vector<double> band_deltas =
        unbounded ? std::vector<double>{0.0}
                  : (lattice.band_deltas.empty() ? lattice.deltas : lattice.band_deltas);
    for (std::size_t r = 0; r < lattice.tau_rules.size(); ++r)
        for (double h : lattice.hs)
            for (double c : lattice.cs)
                for (int j : js)
                    for (double d : j == 0 ? band_deltas : deltas) {
                        EventSpec s;
                        s.j = j;
                        s.tau_rule = lattice.tau_rules[r];
                        s.h = h;
                        s.delta = d;
                        s.delta_unbounded = unbounded;
                        s.c = c;
                        s.check(grid.horizon);
                        specs.push_back(s);
                        cell_rule.push_back(r);
                    }

    const std::size_t n_cells = specs.size();
    std::vector<std::vector<std::uint8_t>> members(n_cells,
                                                   std::vector<std::uint8_t>(n_paths, 0));
    // x_tau depends only on the stopping rule; evaluate each rule once per path
    std::vector<std::vector<double>> x_taus(lattice.tau_rules.size(),
                                            std::vector<double>(n_paths, 0.0));
    for_each_path(
        model, grid, n_paths, base_seed,
        [&](std::size_t i, const SamplePath& path) {
            std::vector<TauResult> trs(lattice.tau_rules.size());
            for (std::size_t r = 0; r < lattice.tau_rules.size(); ++r) {
                trs[r] = resolve_tau(path, lattice.tau_rules[r]);
                x_taus[r][i] = trs[r].x_tau;
            }
            for (std::size_t cidx = 0; cidx < n_cells; ++cidx)
                members[cidx][i] =
                    event_member_at(path, specs[cidx], trs[cell_rule[cidx]]) ? 1 : 0;
        },
        registry);

    ConditionReport report;
    report.na_mode = na_mode;
    report.n_paths = n_paths;
    report.n_bins = n_bins;
    report.pass = true;
    for (std::size_t cidx = 0; cidx < n_cells; ++cidx) {
        ConditionCell cell;
        cell.spec = specs[cidx];
        cell.estimate = estimate_from_observations(specs[cidx], members[cidx],
                                                   x_taus[cell_rule[cidx]], n_bins);
        cell.pass = cell.estimate.all_populated_bins_positive();
        report.pass = report.pass && cell.pass;
        report.cells.push_back(std::move(cell));
    }
    return report;
}

}  // namespace detail

inline ConditionReport check_condition_A(const ModelSpec& model, const TimeGrid& grid,
                                         const EventLattice& lattice, std::size_t n_paths,
                                         std::size_t n_bins, std::uint64_t base_seed,
                                         const TransformRegistry* registry = nullptr) {
    return detail::run_condition_lattice(model, grid, lattice, n_paths, n_bins, base_seed,
                                         /*na_mode=*/false, registry);
}

inline ConditionReport check_NA_condition(const ModelSpec& model, const TimeGrid& grid,
                                          const EventLattice& lattice, std::size_t n_paths,
                                          std::size_t n_bins, std::uint64_t base_seed,
                                          const TransformRegistry* registry = nullptr) {
    return detail::run_condition_lattice(model, grid, lattice, n_paths, n_bins, base_seed,
                                         /*na_mode=*/true, registry);
}

struct CfsWitnessReport {
    double alpha = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_inside_tube = 0;  // paths with sup_t |S_t - S_0 - g(t)| < alpha
    double fraction_inside = 0.0;
    double min_sup_distance = 0.0;  // smallest observed sup-distance to the tube center
};

// Tube test around g(t) = -t for S = alpha * f(B) with the folded transform;
// the asserted value of the inside-tube fraction is exactly zero.
inline CfsWitnessReport cfs_violation_witness(double alpha, const TimeGrid& grid,
                                              std::size_t n_paths, std::uint64_t base_seed,
                                              const TransformRegistry& registry) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("cfs_violation_witness: alpha must be in (0,1]");
    TransformRegistry reg = registry;
    const std::string id = "cfs_witness_scaled_ex3";
    reg.add_scaled(id, BuiltinTransform::piecewise_ex3, alpha);
    ModelSpec model;
    model.kind = ModelKind::transformed;
    model.transform_id = id;
    model.driver_kind = ModelKind::brownian;

    std::vector<double> sup_dist(n_paths, 0.0);
    for_each_path(
        model, grid, n_paths, base_seed,
        [&](std::size_t i, const SamplePath& path) {
            const double s0 = path.values.front();
            double sup = 0.0;
            for (std::size_t k = 0; k < path.values.size(); ++k) {
                const double g = -path.grid.time(k);
                sup = std::max(sup, std::fabs(path.values[k] - s0 - g));
            }
            sup_dist[i] = sup;
        },
        &reg);

    CfsWitnessReport rep;
    rep.alpha = alpha;
    rep.n_paths = n_paths;
    rep.min_sup_distance = sup_dist.empty() ? 0.0 : sup_dist.front();
    for (double s : sup_dist) {
        if (s < alpha) ++rep.n_inside_tube;
        rep.min_sup_distance = std::min(rep.min_sup_distance, s);
    }
    rep.fraction_inside =
        n_paths == 0 ? 0.0 : static_cast<double>(rep.n_inside_tube) / static_cast<double>(n_paths);
    return rep;
}

}  // namespace cpslab
