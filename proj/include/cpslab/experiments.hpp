#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cpslab/config.hpp"
#include "cpslab/io.hpp"
#include "cpslab/measure.hpp"
#include "cpslab/pathgen.hpp"
#include "cpslab/version.hpp"

namespace cpslab {

struct ExperimentResult {
    int status = 0;  // 0 completed/PASS, 2 FAIL verdict (errors surface as exceptions)
    json report;
    std::string summary_csv;
    std::map<std::string, std::string> plots;  // filename -> svg content
};

namespace detail {

inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) row += ',';
        row += csv_quote(fields[i]);
    }
    row += '\n';
    return row;
}

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Minimal SVG heatmap of p-hat over the (delta, c) lattice per j.
inline std::string phat_heatmap_svg(const ConditionReport& report) {
    std::vector<double> deltas, cs;
    for (const auto& cell : report.cells) {
        const double d = cell.spec.delta_unbounded ? -1.0 : cell.spec.delta;
        if (std::find(deltas.begin(), deltas.end(), d) == deltas.end()) deltas.push_back(d);
        if (std::find(cs.begin(), cs.end(), cell.spec.c) == cs.end()) cs.push_back(cell.spec.c);
    }
    std::sort(deltas.begin(), deltas.end());
    std::sort(cs.begin(), cs.end());
    const std::vector<int> js = report.na_mode ? std::vector<int>{-1, 1}
                                               : std::vector<int>{-1, 0, 1};
    const int cell_px = 48, pad = 60, block_gap = 30;
    const int block_w = static_cast<int>(cs.size()) * cell_px;
    const int width = pad + static_cast<int>(js.size()) * (block_w + block_gap);
    const int height = pad + static_cast<int>(deltas.size()) * cell_px + 20;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    for (std::size_t jb = 0; jb < js.size(); ++jb) {
        svg << "<text x=\"" << pad + jb * (block_w + block_gap) << "\" y=\"20\">j=" << js[jb]
            << "</text>\n";
        for (std::size_t di = 0; di < deltas.size(); ++di) {
            for (std::size_t ci = 0; ci < cs.size(); ++ci) {
                double p = 0.0;
                std::size_t n = 0;
                for (const auto& cell : report.cells) {
                    const double d = cell.spec.delta_unbounded ? -1.0 : cell.spec.delta;
                    if (cell.spec.j == js[jb] && d == deltas[di] && cell.spec.c == cs[ci]) {
                        p += cell.estimate.p_hat;
                        ++n;
                    }
                }
                if (n) p /= static_cast<double>(n);
                const int shade = static_cast<int>(255.0 * (1.0 - p));
                svg << "<rect x=\"" << pad + jb * (block_w + block_gap) + ci * cell_px
                    << "\" y=\"" << 30 + di * cell_px << "\" width=\"" << cell_px
                    << "\" height=\"" << cell_px << "\" fill=\"rgb(" << shade << ","
                    << shade << ",255)\" stroke=\"black\"/>\n";
            }
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace detail

// ---- cps-build ----

inline ExperimentResult run_cps_build(const ExperimentConfig& cfg) {
    const TransformRegistry reg = cfg.make_registry();
    const LadderParams params(cfg.ladder.epsilon0, cfg.ladder.crossing_mode);

    std::vector<LadderResult> ladders(cfg.n_paths);
    std::vector<SandwichReport> sandwiches(cfg.n_paths);
    for_each_path(
        cfg.model, cfg.grid, cfg.n_paths, cfg.base_seed,
        [&](std::size_t i, const SamplePath& path) {
            ladders[i] = build_ladder(path, params);
            sandwiches[i] = validate_sandwich(path, ladders[i], params);
        },
        &reg);

    // deterministic sequential merge
    SandwichReport agg = sandwiches.front();
    std::size_t total_rungs = ladders.front().rung_count();
    std::size_t max_rungs = total_rungs;
    for (std::size_t i = 1; i < sandwiches.size(); ++i) {
        const auto& s = sandwiches[i];
        agg.factor_z_over_y_min = std::min(agg.factor_z_over_y_min, s.factor_z_over_y_min);
        agg.factor_z_over_y_max = std::max(agg.factor_z_over_y_max, s.factor_z_over_y_max);
        agg.factor_prev_over_t_min =
            std::min(agg.factor_prev_over_t_min, s.factor_prev_over_t_min);
        agg.factor_prev_over_t_max =
            std::max(agg.factor_prev_over_t_max, s.factor_prev_over_t_max);
        agg.factor_step_min = std::min(agg.factor_step_min, s.factor_step_min);
        agg.factor_step_max = std::max(agg.factor_step_max, s.factor_step_max);
        agg.n_checks += s.n_checks;
        agg.n_violations += s.n_violations;
        agg.max_overshoot_log = std::max(agg.max_overshoot_log, s.max_overshoot_log);
        total_rungs += ladders[i].rung_count();
        max_rungs = std::max(max_rungs, ladders[i].rung_count());
    }

    const ChainMeasure chain = make_chain_measure(cfg.ladder.epsilon0, cfg.ladder.beta);
    json reweight_json;
    try {
        const auto weights = reweight_ensemble(ladders, chain);
        CompensatedSum wz, w2;
        for (const auto& w : weights) {
            const double z_ret = ladders[w.ladder_index].z_values.back();
            wz.add(w.normalized_weight * z_ret);
        }
        const double wmean = wz.value();
        for (const auto& w : weights) {
            const double z_ret = ladders[w.ladder_index].z_values.back();
            w2.add(w.normalized_weight * w.normalized_weight * (z_ret - wmean) *
                   (z_ret - wmean));
        }
        reweight_json["weighted_terminal_mean"] = wmean;
        reweight_json["weighted_terminal_se"] = std::sqrt(w2.value());
        reweight_json["z0"] = ladders.front().z_values.front();
    } catch (const DegenerateEnsembleError& e) {
        reweight_json["degenerate"] = e.what();
    }

    ExperimentResult out;
    out.report["experiment"] = "cps-build";
    out.report["epsilon0"] = cfg.ladder.epsilon0;
    out.report["effective_epsilon"] = effective_epsilon(cfg.ladder.epsilon0);
    out.report["n_paths"] = cfg.n_paths;
    out.report["rungs"] = {{"total", total_rungs},
                           {"mean", static_cast<double>(total_rungs) /
                                        static_cast<double>(cfg.n_paths)},
                           {"max", max_rungs}};
    out.report["sandwich"] = to_json(agg);
    out.report["chain_measure"] = to_json(chain);
    out.report["reweight"] = reweight_json;

    std::ostringstream csv;
    csv << "metric,value\n";
    csv << detail::csv_row({"epsilon0", detail::num(cfg.ladder.epsilon0)});
    csv << detail::csv_row({"effective_epsilon",
                            detail::num(effective_epsilon(cfg.ladder.epsilon0))});
    csv << detail::csv_row({"mean_rungs", detail::num(static_cast<double>(total_rungs) /
                                                      static_cast<double>(cfg.n_paths))});
    csv << detail::csv_row({"sandwich_violations", std::to_string(agg.n_violations)});
    csv << detail::csv_row({"max_overshoot_log", detail::num(agg.max_overshoot_log)});
    out.summary_csv = csv.str();
    return out;
}

// ---- condition-test / na-test ----

inline ExperimentResult run_condition_experiment(const ExperimentConfig& cfg, bool na_mode) {
    const TransformRegistry reg = cfg.make_registry();
    const EventLattice lattice =
        cfg.event_lattice ? *cfg.event_lattice
                          : (na_mode ? default_na_lattice(cfg.grid.horizon)
                                     : default_condition_lattice(cfg.grid.horizon));
    const ConditionReport report =
        na_mode ? check_NA_condition(cfg.model, cfg.grid, lattice, cfg.n_paths,
                                     cfg.conditioning_bins, cfg.base_seed, &reg)
                : check_condition_A(cfg.model, cfg.grid, lattice, cfg.n_paths,
                                    cfg.conditioning_bins, cfg.base_seed, &reg);

    ExperimentResult out;
    out.status = report.pass ? 0 : 2;
    out.report["experiment"] = na_mode ? "na-test" : "condition-test";
    out.report["model"] = to_string(cfg.model.kind);
    out.report["result"] = to_json(report);

    std::ostringstream csv;
    csv << "j,tau_rule,h,delta,c,hits,n_paths,p_hat,wilson_lo,wilson_hi,pass\n";
    for (const auto& cell : report.cells) {
        csv << detail::csv_row(
            {std::to_string(cell.spec.j), cell.spec.tau_rule.describe(),
             detail::num(cell.spec.h),
             cell.spec.delta_unbounded ? "unbounded" : detail::num(cell.spec.delta),
             detail::num(cell.spec.c), std::to_string(cell.estimate.hits),
             std::to_string(cell.estimate.n_paths), detail::num(cell.estimate.p_hat),
             detail::num(cell.estimate.wilson_lo), detail::num(cell.estimate.wilson_hi),
             cell.pass ? "PASS" : "FAIL"});
    }
    out.summary_csv = csv.str();
    if (cfg.plots) out.plots["phat_heatmap.svg"] = detail::phat_heatmap_svg(report);
    return out;
}

// ---- arbitrage-scan ----

inline ExperimentResult run_arbitrage_scan(const ExperimentConfig& cfg) {
    const TransformRegistry reg = cfg.make_registry();
    const PriceMap price_map = cfg.make_price_map(reg);
    const auto ensemble =
        generate_ensemble(cfg.model, cfg.grid, cfg.n_paths, cfg.base_seed, &reg);
    StrategyLattice lattice;
    if (cfg.strategies.use_default_lattice) {
        lattice = default_strategy_lattice(cfg.grid.horizon);
    } else {
        lattice.hit_levels = cfg.strategies.hit_levels;
        lattice.deterministic_times = cfg.strategies.deterministic_times;
    }
    const ScanResult scan = scan_threshold_strategies(
        ensemble, cfg.strategies.min_wait, lattice, price_map, cfg.strategies.tol);

    ExperimentResult out;
    out.report["experiment"] = "arbitrage-scan";
    out.report["price_map"] = price_map.describe();
    out.report["certificate_found"] = scan.certificate_found;
    out.report["n_strategies_evaluated"] = scan.n_evaluated;
    out.report["best_strategy"] = to_json(scan.best_strategy);
    out.report["best_report"] = to_json(scan.best_report);
    out.report["replay"] = {{"base_seed", cfg.base_seed}, {"n_paths", cfg.n_paths}};
    out.report["note"] =
        "the lattice is a lower bound on arbitrage opportunities; absence of a "
        "certificate is not a no-arbitrage claim";

    std::ostringstream csv;
    csv << "metric,value\n";
    csv << detail::csv_row({"certificate_found", scan.certificate_found ? "true" : "false"});
    csv << detail::csv_row({"best_min_gain", detail::num(scan.best_report.min_gain)});
    csv << detail::csv_row({"best_mean_gain", detail::num(scan.best_report.mean_gain)});
    csv << detail::csv_row({"best_strategy", scan.best_strategy.describe()});
    out.summary_csv = csv.str();
    return out;
}

// ---- transform-analyze ----

inline ExperimentResult run_transform_analyze(const ExperimentConfig& cfg) {
    if (!cfg.transform_box) throw ConfigError("transform-analyze requires a transform_box block");
    const TransformRegistry reg = cfg.make_registry();
    const auto& spec = reg.get(cfg.transform_box->id);
    const auto analysis = analyze_drop(spec, cfg.transform_box->lo, cfg.transform_box->hi,
                                       cfg.transform_box->resolution);
    const TailClass tails = classify_limits(spec);

    ExperimentResult out;
    out.report["experiment"] = "transform-analyze";
    out.report["analysis"] = to_json(analysis);
    out.report["tail_class"] = to_string(tails);
    if (cfg.delta0 && tails != TailClass::neither)
        out.report["alpha_interval"] = to_json(alpha_bound(spec, *cfg.delta0, analysis));

    // documented cross-check constants for the two worked examples; the grid
    // oracle is the toolkit's ground truth and disagreements are flagged
    if (spec.builtin == BuiltinTransform::cubic_plus_square &&
        spec.kind == TransformKind::builtin) {
        const double critical_point = -4.0 / 27.0;  // f(0) - f(-2/3)
        const double stated = -12.0 / 27.0;
        out.report["cross_check"] = {
            {"critical_point_drop", critical_point},
            {"stated_drop", stated},
            {"oracle_matches_critical_point",
             std::fabs(analysis.d - critical_point) < 1e-3},
            {"oracle_matches_stated_drop", std::fabs(analysis.d - stated) < 1e-3}};
    }
    if (spec.builtin == BuiltinTransform::piecewise_ex3 && spec.kind == TransformKind::builtin) {
        out.report["cross_check"] = {{"stated_drop", -1.0},
                                     {"oracle_matches_stated_drop",
                                      std::fabs(analysis.d - (-1.0)) < 1e-3}};
    }

    std::ostringstream csv;
    csv << "metric,value\n";
    csv << detail::csv_row({"transform", spec.id});
    csv << detail::csv_row({"d", analysis.d_unbounded ? "unbounded_below"
                                                      : detail::num(analysis.d)});
    csv << detail::csv_row({"d0", analysis.d0_unbounded ? "unbounded_above"
                                                        : detail::num(analysis.d0)});
    csv << detail::csv_row({"tail_class", to_string(tails)});
    out.summary_csv = csv.str();
    return out;
}

// ---- cfs-witness ----

inline ExperimentResult run_cfs_witness(const ExperimentConfig& cfg) {
    const TransformRegistry reg = cfg.make_registry();
    const auto report =
        cfs_violation_witness(cfg.cfs_alpha, cfg.grid, cfg.n_paths, cfg.base_seed, reg);

    ExperimentResult out;
    out.status = report.n_inside_tube == 0 ? 0 : 2;
    out.report["experiment"] = "cfs-witness";
    out.report["result"] = to_json(report);
    out.report["expected_fraction_inside"] = 0.0;

    std::ostringstream csv;
    csv << "metric,value\n";
    csv << detail::csv_row({"alpha", detail::num(report.alpha)});
    csv << detail::csv_row({"n_inside_tube", std::to_string(report.n_inside_tube)});
    csv << detail::csv_row({"fraction_inside", detail::num(report.fraction_inside)});
    out.summary_csv = csv.str();
    return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto diags = validate_config(cfg);
    if (!diags.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& d : diags) msg += "\n  - " + d;
        throw ConfigError(msg);
    }
    ExperimentResult result;
    switch (cfg.experiment) {
        case ExperimentKind::cps_build: result = run_cps_build(cfg); break;
        case ExperimentKind::condition_test:
            result = run_condition_experiment(cfg, false);
            break;
        case ExperimentKind::na_test: result = run_condition_experiment(cfg, true); break;
        case ExperimentKind::arbitrage_scan: result = run_arbitrage_scan(cfg); break;
        case ExperimentKind::transform_analyze: result = run_transform_analyze(cfg); break;
        case ExperimentKind::cfs_witness: result = run_cfs_witness(cfg); break;
    }
    result.report["schema_version"] = 1;
    result.report["base_seed"] = cfg.base_seed;
    result.report["n_paths_config"] = cfg.n_paths;
    return result;
}

// Writes report.json, summary.csv, manifest.json, plots/*.svg into out_dir.
// The manifest carries the timestamp; report.json stays byte-stable across
// reruns of the same config.
inline void write_outputs(const ExperimentResult& result, const std::string& out_dir,
                          const std::string& config_text, std::uint64_t base_seed,
                          bool plots_enabled) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "report.json");
        f << result.report.dump(2) << '\n';
    }
    {
        std::ofstream f(fs::path(out_dir) / "summary.csv");
        f << result.summary_csv;
    }
    {
        json manifest;
        manifest["toolkit_version"] = kVersion;
        manifest["config_hash_fnv1a"] = detail::fnv1a_hex(config_text);
        manifest["base_seed"] = base_seed;
        manifest["timestamp_utc"] = static_cast<std::int64_t>(
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count());
        std::ofstream f(fs::path(out_dir) / "manifest.json");
        f << manifest.dump(2) << '\n';
    }
    if (plots_enabled && !result.plots.empty()) {
        fs::create_directories(fs::path(out_dir) / "plots");
        for (const auto& [name, svg] : result.plots) {
            std::ofstream f(fs::path(out_dir) / "plots" / name);
            f << svg;
        }
    }
}

}  // namespace cpslab
