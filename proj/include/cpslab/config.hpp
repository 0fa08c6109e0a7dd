#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpslab/arbitrage.hpp"
#include "cpslab/events.hpp"
#include "cpslab/grid.hpp"
#include "cpslab/retirement.hpp"
#include "cpslab/transforms.hpp"

namespace cpslab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    cps_build,
    condition_test,
    na_test,
    arbitrage_scan,
    transform_analyze,
    cfs_witness
};

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::cps_build: return "cps-build";
        case ExperimentKind::condition_test: return "condition-test";
        case ExperimentKind::na_test: return "na-test";
        case ExperimentKind::arbitrage_scan: return "arbitrage-scan";
        case ExperimentKind::transform_analyze: return "transform-analyze";
        case ExperimentKind::cfs_witness: return "cfs-witness";
    }
    return "?";
}

struct LadderConfig {
    double epsilon0 = 0.1;
    CrossingMode crossing_mode = CrossingMode::interpolated;
    double beta = 0.1;  // retirement rate of the chain measure
};

struct StrategyConfig {
    double min_wait = 0.0;
    std::vector<double> hit_levels;
    std::vector<double> deterministic_times;
    double tol = 1e-9;
    bool use_default_lattice = true;
};

struct TransformBoxConfig {
    std::string id;
    double lo = -5.0;
    double hi = 5.0;
    std::size_t resolution = 100000;
};

struct ScaledTransformConfig {
    std::string id;
    std::string builtin;
    double alpha = 1.0;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::cps_build;
    ModelSpec model;
    TimeGrid grid{1.0, 4096};
    std::size_t n_paths = 10000;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    bool plots = true;

    LadderConfig ladder;
    std::optional<EventLattice> event_lattice;  // default lattice when absent
    std::size_t conditioning_bins = 8;
    StrategyConfig strategies;
    std::optional<TransformBoxConfig> transform_box;
    std::optional<double> delta0;
    double cfs_alpha = 0.5;
    // "exponential", "identity", or "transform:<id>" with id in the registry
    std::string price_map_id = "exponential";
    std::vector<ScaledTransformConfig> scaled_transforms;

    PriceMap make_price_map(const TransformRegistry& reg) const {
        if (price_map_id == "exponential") return PriceMap::exponential_map();
        if (price_map_id == "identity") return PriceMap::identity_map();
        if (price_map_id.rfind("transform:", 0) == 0)
            return PriceMap::transform_map(reg.get(price_map_id.substr(10)));
        throw ConfigError("config: unknown price_map: " + price_map_id);
    }

    TransformRegistry make_registry() const {
        TransformRegistry reg = TransformRegistry::with_builtins();
        for (const auto& st : scaled_transforms) {
            BuiltinTransform b;
            if (st.builtin == "identity")
                b = BuiltinTransform::identity;
            else if (st.builtin == "monotone_sigmoid_like")
                b = BuiltinTransform::monotone_sigmoid_like;
            else if (st.builtin == "cubic_plus_square")
                b = BuiltinTransform::cubic_plus_square;
            else if (st.builtin == "piecewise_ex3")
                b = BuiltinTransform::piecewise_ex3;
            else
                throw ConfigError("unknown builtin transform: " + st.builtin);
            reg.add_scaled(st.id, b, st.alpha);
        }
        return reg;
    }
};

namespace detail {

// unknown keys are configuration errors, never silently ignored
inline void reject_unknown_keys(const nlohmann::ordered_json& obj, const std::string& where,
                                const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T require(const nlohmann::ordered_json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError("config: missing key '" + key + "' in " + where);
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value for '" + key + "' in " + where + ": " + e.what());
    }
}

template <typename T>
T get_or(const nlohmann::ordered_json& obj, const std::string& where, const std::string& key,
         T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value for '" + key + "' in " + where + ": " + e.what());
    }
}

inline TauRule parse_tau_rule(const nlohmann::ordered_json& obj) {
    reject_unknown_keys(obj, "tau rule", {"kind", "time", "level", "cap"});
    const auto kind = require<std::string>(obj, "tau rule", "kind");
    if (kind == "deterministic_time")
        return TauRule::deterministic(require<double>(obj, "tau rule", "time"));
    if (kind == "first_hit")
        return TauRule::first_hit(require<double>(obj, "tau rule", "level"),
                                  require<double>(obj, "tau rule", "cap"));
    throw ConfigError("config: unknown tau rule kind: " + kind);
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::ordered_json& j) {
    using detail::get_or;
    using detail::reject_unknown_keys;
    using detail::require;

    reject_unknown_keys(j, "top level",
                        {"experiment", "model", "grid", "n_paths", "base_seed", "output_dir",
                         "plots", "ladder", "events", "conditioning_bins", "strategies",
                         "transform_box", "delta0", "cfs_alpha", "price_map",
                         "scaled_transforms"});

    ExperimentConfig cfg;
    const auto exp = require<std::string>(j, "top level", "experiment");
    if (exp == "cps-build")
        cfg.experiment = ExperimentKind::cps_build;
    else if (exp == "condition-test")
        cfg.experiment = ExperimentKind::condition_test;
    else if (exp == "na-test")
        cfg.experiment = ExperimentKind::na_test;
    else if (exp == "arbitrage-scan")
        cfg.experiment = ExperimentKind::arbitrage_scan;
    else if (exp == "transform-analyze")
        cfg.experiment = ExperimentKind::transform_analyze;
    else if (exp == "cfs-witness")
        cfg.experiment = ExperimentKind::cfs_witness;
    else
        throw ConfigError("config: unknown experiment: " + exp);

    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown_keys(m, "model",
                            {"kind", "hurst", "sigma", "x0", "transform", "driver",
                             "driver_hurst"});
        const auto kind = require<std::string>(m, "model", "kind");
        if (kind == "brownian")
            cfg.model.kind = ModelKind::brownian;
        else if (kind == "fractional_brownian")
            cfg.model.kind = ModelKind::fractional_brownian;
        else if (kind == "transformed")
            cfg.model.kind = ModelKind::transformed;
        else
            throw ConfigError("config: unknown model kind: " + kind);
        if (m.contains("hurst") && cfg.model.kind != ModelKind::fractional_brownian)
            throw ConfigError("config: 'hurst' is only valid for fractional_brownian");
        if (m.contains("transform") && cfg.model.kind != ModelKind::transformed)
            throw ConfigError("config: 'transform' is only valid for transformed models");
        cfg.model.hurst = get_or<double>(m, "model", "hurst", 0.5);
        cfg.model.volatility = get_or<double>(m, "model", "sigma", 1.0);
        cfg.model.initial_value = get_or<double>(m, "model", "x0", 0.0);
        if (cfg.model.kind == ModelKind::transformed) {
            cfg.model.transform_id = require<std::string>(m, "model", "transform");
            const auto driver = get_or<std::string>(m, "model", "driver", "brownian");
            if (driver == "brownian")
                cfg.model.driver_kind = ModelKind::brownian;
            else if (driver == "fractional_brownian")
                cfg.model.driver_kind = ModelKind::fractional_brownian;
            else
                throw ConfigError("config: unknown driver kind: " + driver);
            cfg.model.driver_hurst = get_or<double>(m, "model", "driver_hurst", 0.5);
        }
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        reject_unknown_keys(g, "grid", {"horizon", "n_steps"});
        cfg.grid = TimeGrid(require<double>(g, "grid", "horizon"),
                            require<std::size_t>(g, "grid", "n_steps"));
    }
    cfg.n_paths = get_or<std::size_t>(j, "top level", "n_paths", cfg.n_paths);
    cfg.base_seed = get_or<std::uint64_t>(j, "top level", "base_seed", cfg.base_seed);
    cfg.output_dir = get_or<std::string>(j, "top level", "output_dir", cfg.output_dir);
    cfg.plots = get_or<bool>(j, "top level", "plots", cfg.plots);
    cfg.conditioning_bins =
        get_or<std::size_t>(j, "top level", "conditioning_bins", cfg.conditioning_bins);
    cfg.cfs_alpha = get_or<double>(j, "top level", "cfs_alpha", cfg.cfs_alpha);
    if (j.contains("delta0")) cfg.delta0 = j.at("delta0").get<double>();

    if (j.contains("price_map")) {
        const auto pm = j.at("price_map").get<std::string>();
        if (pm != "exponential" && pm != "identity" && pm.rfind("transform:", 0) != 0)
            throw ConfigError("config: unknown price_map: " + pm);
        cfg.price_map_id = pm;
    }

    if (j.contains("ladder")) {
        const auto& l = j.at("ladder");
        reject_unknown_keys(l, "ladder", {"epsilon0", "crossing_mode", "beta"});
        cfg.ladder.epsilon0 = require<double>(l, "ladder", "epsilon0");
        cfg.ladder.beta = get_or<double>(l, "ladder", "beta", cfg.ladder.beta);
        const auto mode = get_or<std::string>(l, "ladder", "crossing_mode", "interpolated");
        if (mode == "interpolated")
            cfg.ladder.crossing_mode = CrossingMode::interpolated;
        else if (mode == "grid_snap")
            cfg.ladder.crossing_mode = CrossingMode::grid_snap;
        else
            throw ConfigError("config: unknown crossing_mode: " + mode);
    }

    if (j.contains("events")) {
        const auto& e = j.at("events");
        reject_unknown_keys(e, "events", {"taus", "hs", "deltas", "band_deltas", "cs"});
        EventLattice lat;
        if (e.contains("taus"))
            for (const auto& r : e.at("taus")) lat.tau_rules.push_back(detail::parse_tau_rule(r));
        else
            lat.tau_rules = {TauRule::deterministic(0.0)};
        lat.hs = require<std::vector<double>>(e, "events", "hs");
        lat.deltas = get_or<std::vector<double>>(e, "events", "deltas", {});
        lat.band_deltas = get_or<std::vector<double>>(e, "events", "band_deltas", {});
        lat.cs = require<std::vector<double>>(e, "events", "cs");
        lat.unbounded_delta = lat.deltas.empty();
        cfg.event_lattice = lat;
    }

    if (j.contains("strategies")) {
        const auto& s = j.at("strategies");
        reject_unknown_keys(s, "strategies",
                            {"min_wait", "hit_levels", "deterministic_times", "tol"});
        cfg.strategies.min_wait = get_or<double>(s, "strategies", "min_wait", 0.0);
        cfg.strategies.hit_levels =
            get_or<std::vector<double>>(s, "strategies", "hit_levels", {});
        cfg.strategies.deterministic_times =
            get_or<std::vector<double>>(s, "strategies", "deterministic_times", {});
        cfg.strategies.tol = get_or<double>(s, "strategies", "tol", 1e-9);
        cfg.strategies.use_default_lattice =
            cfg.strategies.hit_levels.empty() && cfg.strategies.deterministic_times.empty();
    }

    if (j.contains("transform_box")) {
        const auto& t = j.at("transform_box");
        reject_unknown_keys(t, "transform_box", {"id", "lo", "hi", "resolution"});
        TransformBoxConfig box;
        box.id = require<std::string>(t, "transform_box", "id");
        box.lo = require<double>(t, "transform_box", "lo");
        box.hi = require<double>(t, "transform_box", "hi");
        box.resolution = get_or<std::size_t>(t, "transform_box", "resolution", box.resolution);
        cfg.transform_box = box;
    }

    if (j.contains("scaled_transforms")) {
        for (const auto& st : j.at("scaled_transforms")) {
            reject_unknown_keys(st, "scaled_transforms", {"id", "builtin", "alpha"});
            ScaledTransformConfig s;
            s.id = require<std::string>(st, "scaled_transforms", "id");
            s.builtin = require<std::string>(st, "scaled_transforms", "builtin");
            s.alpha = require<double>(st, "scaled_transforms", "alpha");
            cfg.scaled_transforms.push_back(std::move(s));
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    return parse_config(j);
}

// Static validation: no simulation. Each diagnostic names the condition the
// config breaks.
inline std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> diags;
    try {
        cfg.model.check();
    } catch (const std::exception& e) {
        diags.emplace_back(e.what());
    }
    if (cfg.n_paths < 1) diags.emplace_back("n_paths must be >= 1");

    TransformRegistry reg = TransformRegistry::with_builtins();
    try {
        reg = cfg.make_registry();
    } catch (const std::exception& e) {
        diags.emplace_back(e.what());
    }
    if (cfg.model.kind == ModelKind::transformed && !reg.contains(cfg.model.transform_id))
        diags.emplace_back("model.transform references unknown transform id '" +
                           cfg.model.transform_id + "'");

    if (cfg.event_lattice) {
        for (const auto& rule : cfg.event_lattice->tau_rules)
            for (double h : cfg.event_lattice->hs)
                if (!(rule.max_value() < cfg.grid.horizon - h))
                    diags.emplace_back("tau rule " + rule.describe() +
                                       " can reach beyond [0, T-h) for h=" + std::to_string(h));
        for (double h : cfg.event_lattice->hs)
            if (!(h > 0.0 && h < cfg.grid.horizon))
                diags.emplace_back("event window h=" + std::to_string(h) +
                                   " outside (0, T)");
    }

    // scaling-hypothesis check: a transformed model paired with a target
    // delta0 must keep its worst drop (case a) or rise (case b) inside the
    // admissible band
    if (cfg.delta0 && cfg.model.kind == ModelKind::transformed &&
        reg.contains(cfg.model.transform_id)) {
        const double lo = cfg.transform_box ? cfg.transform_box->lo : -5.0;
        const double hi = cfg.transform_box ? cfg.transform_box->hi : 5.0;
        const std::size_t res = cfg.transform_box ? cfg.transform_box->resolution : 100000;
        const auto& spec = reg.get(cfg.model.transform_id);
        const auto analysis = analyze_drop(spec, lo, hi, res);
        const auto tails = classify_limits(spec);
        if (tails == TailClass::case_a && !(analysis.d > -*cfg.delta0))
            diags.emplace_back("transform '" + spec.id + "' has drop d=" +
                               std::to_string(analysis.d) +
                               " <= -delta0; the min-drop hypothesis (case a) fails");
        if (tails == TailClass::case_b && !(analysis.d0 < *cfg.delta0))
            diags.emplace_back("transform '" + spec.id + "' has rise d0=" +
                               std::to_string(analysis.d0) +
                               " >= delta0; the max-rise hypothesis (case b) fails");
    }

    try {
        cfg.make_price_map(reg);
    } catch (const std::exception& e) {
        diags.emplace_back(e.what());
    }
    if (cfg.experiment == ExperimentKind::cfs_witness &&
        !(cfg.cfs_alpha > 0.0 && cfg.cfs_alpha <= 1.0))
        diags.emplace_back("cfs_alpha must be in (0, 1]");
    if (!(cfg.ladder.epsilon0 > 0.0)) diags.emplace_back("ladder.epsilon0 must be positive");
    if (!(cfg.ladder.beta > 0.0 && cfg.ladder.beta < 1.0))
        diags.emplace_back("ladder.beta must be in (0,1)");
    return diags;
}

}  // namespace cpslab
