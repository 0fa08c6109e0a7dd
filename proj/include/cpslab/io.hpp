#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpslab/arbitrage.hpp"
#include "cpslab/events.hpp"
#include "cpslab/grid.hpp"
#include "cpslab/measure.hpp"
#include "cpslab/retirement.hpp"
#include "cpslab/transforms.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary ensemble container assumes a little-endian host");

namespace cpslab {

using json = nlohmann::ordered_json;

// ---- CSV path export: header `t,value`, one file per path ----

inline void write_path_csv(const SamplePath& path, std::ostream& os) {
    os << "t,value\n";
    os.precision(17);
    for (std::size_t i = 0; i < path.values.size(); ++i)
        os << path.grid.time(i) << ',' << path.values[i] << '\n';
}

// ---- binary ensemble container ----
// layout: magic "CPSLBIN1" | u32 version | u64 n_paths | u64 n_steps |
//         f64 horizon | per path: u64 seed, (n_steps+1) f64 values
// all integers and floats little-endian.

inline constexpr char kEnsembleMagic[8] = {'C', 'P', 'S', 'L', 'B', 'I', 'N', '1'};
inline constexpr std::uint32_t kEnsembleVersion = 1;

inline void write_ensemble_binary(const std::vector<SamplePath>& paths, std::ostream& os) {
    if (paths.empty()) throw std::invalid_argument("write_ensemble_binary: empty ensemble");
    auto put = [&](const void* p, std::size_t n) {
        os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    put(kEnsembleMagic, sizeof(kEnsembleMagic));
    put(&kEnsembleVersion, sizeof(kEnsembleVersion));
    const std::uint64_t n_paths = paths.size();
    const std::uint64_t n_steps = paths.front().grid.n_steps;
    const double horizon = paths.front().grid.horizon;
    put(&n_paths, 8);
    put(&n_steps, 8);
    put(&horizon, 8);
    for (const auto& p : paths) {
        if (p.grid.n_steps != n_steps || p.grid.horizon != horizon)
            throw std::invalid_argument("write_ensemble_binary: inconsistent grids");
        put(&p.seed, 8);
        put(p.values.data(), p.values.size() * 8);
    }
}

inline std::vector<SamplePath> read_ensemble_binary(std::istream& is) {
    auto get = [&](void* p, std::size_t n) {
        is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!is) throw std::runtime_error("read_ensemble_binary: truncated file");
    };
    char magic[8];
    get(magic, 8);
    if (std::memcmp(magic, kEnsembleMagic, 8) != 0)
        throw std::runtime_error("read_ensemble_binary: bad magic");
    std::uint32_t version = 0;
    get(&version, 4);
    if (version != kEnsembleVersion)
        throw std::runtime_error("read_ensemble_binary: unsupported version");
    std::uint64_t n_paths = 0, n_steps = 0;
    double horizon = 0.0;
    get(&n_paths, 8);
    get(&n_steps, 8);
    get(&horizon, 8);
    std::vector<SamplePath> out(n_paths);
    for (auto& p : out) {
        p.grid = TimeGrid(horizon, n_steps);
        get(&p.seed, 8);
        p.values.resize(n_steps + 1);
        get(p.values.data(), p.values.size() * 8);
    }
    return out;
}

// ---- JSON serializers ----

inline json to_json(const DropAnalysis& a) {
    json j;
    j["transform_id"] = a.transform_id;
    // infinity sentinels are tagged markers, never float inf
    if (a.d_unbounded)
        j["d"] = "unbounded_below";
    else
        j["d"] = a.d;
    if (a.d0_unbounded)
        j["d0"] = "unbounded_above";
    else
        j["d0"] = a.d0;
    j["grid_d"] = a.d;
    j["grid_d0"] = a.d0;
    j["box"] = {a.box_lo, a.box_hi};
    j["resolution"] = a.resolution;
    return j;
}

inline json to_json(const AlphaInterval& a) {
    json j;
    j["lo"] = a.lo;
    if (a.hi_unbounded)
        j["hi"] = "unbounded";
    else
        j["hi"] = a.hi;
    return j;
}

inline json to_json(const ChainMeasure& c) {
    return json{{"epsilon0", c.epsilon0},
                {"beta", c.beta},
                {"q_plus", c.q_plus},
                {"q_minus", c.q_minus},
                {"q_zero", c.q_zero}};
}

inline json to_json(const LadderResult& l) {
    json j;
    j["taus"] = l.taus;
    j["signs"] = l.signs;
    j["levels"] = l.levels;
    j["z_values"] = l.z_values;
    j["retired_at"] = l.retired_at;
    j["epsilon0"] = l.epsilon0;
    return j;
}

inline json to_json(const SandwichReport& r) {
    json j;
    j["factor_z_over_y"] = {{"min", r.factor_z_over_y_min}, {"max", r.factor_z_over_y_max}};
    j["factor_prev_over_t"] = {{"min", r.factor_prev_over_t_min},
                               {"max", r.factor_prev_over_t_max}};
    j["factor_step"] = {{"min", r.factor_step_min}, {"max", r.factor_step_max}};
    j["n_checks"] = r.n_checks;
    j["n_violations"] = r.n_violations;
    j["max_overshoot_log"] = r.max_overshoot_log;
    j["per_factor_bound"] = {r.bound_lo, r.bound_hi};
    j["envelope"] = {r.envelope_lo, r.envelope_hi};
    return j;
}

inline json to_json(const EventSpec& s) {
    json j;
    j["j"] = s.j;
    j["tau_rule"] = s.tau_rule.describe();
    j["h"] = s.h;
    if (s.delta_unbounded)
        j["delta"] = "unbounded";
    else
        j["delta"] = s.delta;
    j["c"] = s.c;
    return j;
}

inline json to_json(const EventEstimate& e) {
    json j;
    j["spec"] = to_json(e.spec);
    j["n_paths"] = e.n_paths;
    j["hits"] = e.hits;
    j["p_hat"] = e.p_hat;
    j["wilson_lo"] = e.wilson_lo;
    j["wilson_hi"] = e.wilson_hi;
    json bins = json::array();
    for (const auto& b : e.bins)
        bins.push_back(json{
            {"x_lo", b.x_lo}, {"x_hi", b.x_hi}, {"hits", b.hits}, {"total", b.total}});
    j["conditioning_bins"] = bins;
    return j;
}

inline json to_json(const ConditionReport& r) {
    json j;
    j["pass"] = r.pass;
    j["mode"] = r.na_mode ? "NA" : "A";
    j["n_paths"] = r.n_paths;
    j["n_bins"] = r.n_bins;
    if (r.na_mode)
        j["note"] = "F^j(tau,h,delta,c) is contained in F^j(tau,h,inf,c): "
                    "condition (A) on matching parameters implies these cells";
    json cells = json::array();
    for (const auto& c : r.cells) {
        json cj = to_json(c.estimate);
        cj["pass"] = c.pass;
        cells.push_back(std::move(cj));
    }
    j["cells"] = cells;
    return j;
}

inline json to_json(const CfsWitnessReport& r) {
    return json{{"alpha", r.alpha},
                {"n_paths", r.n_paths},
                {"n_inside_tube", r.n_inside_tube},
                {"fraction_inside", r.fraction_inside},
                {"min_sup_distance", r.min_sup_distance}};
}

inline json to_json(const PnlReport& r) {
    json j;
    j["n_paths"] = r.n_paths;
    j["gains"] = {{"min", r.min_gain}, {"max", r.max_gain},   {"mean", r.mean_gain},
                  {"q05", r.q05},      {"q25", r.q25},        {"q50", r.q50},
                  {"q75", r.q75},      {"q95", r.q95}};
    j["frac_negative_beyond_tol"] = r.frac_negative_beyond_tol;
    j["frac_positive_beyond_tol"] = r.frac_positive_beyond_tol;
    j["tol"] = r.tol;
    j["verdict"] = to_string(r.verdict);
    j["clipped_to_horizon"] = r.clipped_to_horizon;
    return j;
}

inline json to_json(const StrategySpec& s) {
    json legs = json::array();
    for (const auto& leg : s.legs)
        legs.push_back(json{{"entry", leg.entry.describe()},
                            {"exit", leg.exit.describe()},
                            {"size", leg.size}});
    return json{{"min_wait", s.min_wait}, {"legs", legs}};
}

// RFC-4180 field quoting for summary.csv
inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

}  // namespace cpslab
