#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "cpslab/config.hpp"
#include "cpslab/experiments.hpp"
#include "cpslab/io.hpp"
#include "cpslab/pathgen.hpp"

using namespace cpslab;

namespace {
json minimal_config(const std::string& experiment) {
    json j;
    j["experiment"] = experiment;
    j["model"] = {{"kind", "brownian"}};
    j["grid"] = {{"horizon", 1.0}, {"n_steps", 256}};
    j["n_paths"] = 1000;
    j["base_seed"] = 7;
    return j;
}
}  // namespace

TEST_CASE("path csv export uses the t,value header") {
    SamplePath p;
    p.grid = TimeGrid(1.0, 2);
    p.values = {0.0, 0.5, 1.0};
    std::ostringstream os;
    write_path_csv(p, os);
    const std::string out = os.str();
    REQUIRE(out.rfind("t,value\n", 0) == 0);
    REQUIRE(out.find("0.5,0.5") != std::string::npos);
}

TEST_CASE("binary ensemble container round-trips bit-exactly") {
    ModelSpec spec;
    spec.kind = ModelKind::brownian;
    const TimeGrid grid(2.0, 64);
    const auto ens = generate_ensemble(spec, grid, 10, 123);
    std::stringstream buf;
    write_ensemble_binary(ens, buf);
    const std::string blob = buf.str();
    REQUIRE(blob.compare(0, 8, "CPSLBIN1") == 0);
    const auto back = read_ensemble_binary(buf);
    REQUIRE(back.size() == ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        REQUIRE(back[i].values == ens[i].values);
        REQUIRE(back[i].seed == ens[i].seed);
        REQUIRE(back[i].grid.horizon == 2.0);
        REQUIRE(back[i].grid.n_steps == 64);
    }
}

TEST_CASE("binary reader rejects corrupt input") {
    std::stringstream bad("NOTMAGIC garbage");
    REQUIRE_THROWS_AS(read_ensemble_binary(bad), std::runtime_error);
    std::stringstream truncated(std::string("CPSLBIN1"));
    REQUIRE_THROWS_AS(read_ensemble_binary(truncated), std::runtime_error);
}

TEST_CASE("csv quoting follows RFC 4180") {
    REQUIRE(csv_quote("plain") == "plain");
    REQUIRE(csv_quote("a,b") == "\"a,b\"");
    REQUIRE(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    REQUIRE(csv_quote("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("config parsing fills defaults and rejects unknown keys") {
    auto j = minimal_config("cps-build");
    const auto cfg = parse_config(j);
    REQUIRE(cfg.experiment == ExperimentKind::cps_build);
    REQUIRE(cfg.n_paths == 1000);
    REQUIRE(cfg.base_seed == 7);
    REQUIRE(cfg.grid.n_steps == 256);
    REQUIRE(cfg.conditioning_bins == 8);
    REQUIRE(cfg.price_map_id == "exponential");

    j["typo_key"] = 1;
    REQUIRE_THROWS_AS(parse_config(j), ConfigError);
    auto j2 = minimal_config("cps-build");
    j2["model"]["volatility_typo"] = 1.0;
    REQUIRE_THROWS_AS(parse_config(j2), ConfigError);
    auto j3 = minimal_config("not-an-experiment");
    REQUIRE_THROWS_AS(parse_config(j3), ConfigError);
}

TEST_CASE("model block cross-field rules") {
    auto j = minimal_config("cps-build");
    j["model"] = {{"kind", "brownian"}, {"hurst", 0.7}};
    REQUIRE_THROWS_AS(parse_config(j), ConfigError);  // hurst only for fbm
    j["model"] = {{"kind", "fractional_brownian"}, {"hurst", 0.7}};
    REQUIRE(parse_config(j).model.hurst == 0.7);
    j["model"] = {{"kind", "brownian"}, {"transform", "piecewise_ex3"}};
    REQUIRE_THROWS_AS(parse_config(j), ConfigError);  // transform only for transformed
    j["model"] = {{"kind", "transformed"}, {"transform", "piecewise_ex3"}};
    const auto cfg = parse_config(j);
    REQUIRE(cfg.model.kind == ModelKind::transformed);
    REQUIRE(cfg.model.transform_id == "piecewise_ex3");
}

TEST_CASE("scaled transforms land in the registry") {
    auto j = minimal_config("cps-build");
    j["scaled_transforms"] = json::array(
        {{{"id", "half_fold"}, {"builtin", "piecewise_ex3"}, {"alpha", 0.5}}});
    const auto cfg = parse_config(j);
    const auto reg = cfg.make_registry();
    REQUIRE(reg.contains("half_fold"));
    REQUIRE(evaluate(reg.get("half_fold"), 2.0) == 1.0);
}

TEST_CASE("validate_config reports actionable diagnostics") {
    auto j = minimal_config("cps-build");
    auto cfg = parse_config(j);
    REQUIRE(validate_config(cfg).empty());

    cfg.model.kind = ModelKind::transformed;
    cfg.model.transform_id = "missing";
    cfg.model.driver_kind = ModelKind::brownian;
    const auto diags = validate_config(cfg);
    REQUIRE_FALSE(diags.empty());

    auto cfg2 = parse_config(minimal_config("cps-build"));
    cfg2.ladder.beta = 1.5;
    REQUIRE_FALSE(validate_config(cfg2).empty());

    auto cfg3 = parse_config(minimal_config("cps-build"));
    cfg3.price_map_id = "transform:missing";
    REQUIRE_FALSE(validate_config(cfg3).empty());
}

TEST_CASE("scaling-hypothesis validation flags an inadmissible alpha") {
    auto j = minimal_config("cps-build");
    j["model"] = {{"kind", "transformed"}, {"transform", "big_fold"}};
    j["scaled_transforms"] = json::array(
        {{{"id", "big_fold"}, {"builtin", "piecewise_ex3"}, {"alpha", 3.0}}});
    j["delta0"] = 1.0;  // drop of alpha*f is -3 <= -delta0: inadmissible
    auto cfg = parse_config(j);
    REQUIRE_FALSE(validate_config(cfg).empty());
    j["scaled_transforms"][0]["alpha"] = 0.5;  // drop -0.5 > -1: fine
    REQUIRE(validate_config(parse_config(j)).empty());
}

TEST_CASE("experiments produce byte-identical reports on identical configs") {
    auto j = minimal_config("transform-analyze");
    j["transform_box"] = {{"id", "cubic_plus_square"}, {"lo", -5.0}, {"hi", 5.0},
                          {"resolution", 20000}};
    j["delta0"] = 1.0;
    const auto r1 = run_experiment(parse_config(j));
    const auto r2 = run_experiment(parse_config(j));
    REQUIRE(r1.report.dump() == r2.report.dump());
    REQUIRE(r1.summary_csv == r2.summary_csv);

    auto jc = minimal_config("cfs-witness");
    jc["cfs_alpha"] = 0.5;
    jc["n_paths"] = 500;
    const auto c1 = run_experiment(parse_config(jc));
    const auto c2 = run_experiment(parse_config(jc));
    REQUIRE(c1.report.dump() == c2.report.dump());
    REQUIRE(c1.status == 0);
}

TEST_CASE("drop analysis serialization tags unbounded sides") {
    TransformSpec fold;
    fold.id = "piecewise_ex3";
    fold.builtin = BuiltinTransform::piecewise_ex3;
    const auto a = analyze_drop(fold, -5.0, 5.0, 10000);
    const json j = to_json(a);
    REQUIRE(j.at("d").is_number());
    REQUIRE(j.at("d0") == "unbounded_above");
    REQUIRE(j.at("grid_d0").is_number());
    REQUIRE(j.at("resolution") == 10000);
}
