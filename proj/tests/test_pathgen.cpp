#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cpslab/pathgen.hpp"
#include "cpslab/stats.hpp"

using namespace cpslab;

TEST_CASE("brownian paths are deterministic in the seed") {
    const TimeGrid grid(1.0, 512);
    const auto a = generate_brownian(grid, 1.0, 0.0, 42);
    const auto b = generate_brownian(grid, 1.0, 0.0, 42);
    const auto c = generate_brownian(grid, 1.0, 0.0, 43);
    REQUIRE(a.values == b.values);
    REQUIRE(a.values != c.values);
    REQUIRE(a.values.size() == grid.size());
    REQUIRE(a.values.front() == 0.0);
    REQUIRE(a.all_finite());
}

TEST_CASE("fbm paths are deterministic and start at x0") {
    const TimeGrid grid(1.0, 512);
    const auto a = generate_fbm(grid, 0.7, 1.0, 2.5, 7);
    const auto b = generate_fbm(grid, 0.7, 1.0, 2.5, 7);
    REQUIRE(a.values == b.values);
    REQUIRE(a.values.front() == 2.5);
    REQUIRE(a.all_finite());
}

TEST_CASE("brownian marginal variance matches sigma^2 t") {
    const TimeGrid grid(1.0, 256);
    const std::size_t n = 20000;
    const double sigma = 0.8;
    std::vector<double> terminal(n);
    for (std::size_t i = 0; i < n; ++i)
        terminal[i] = generate_brownian(grid, sigma, 0.0, derive_seed(99, i)).values.back();
    const double v = sample_variance(terminal);
    // var of the variance estimator ~ 2 sigma^4 / n; allow 5 sd
    const double tol = 5.0 * sigma * sigma * std::sqrt(2.0 / static_cast<double>(n));
    REQUIRE(std::fabs(v - sigma * sigma) < tol);
    REQUIRE(std::fabs(mean(terminal)) < 5.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fbm covariance matches the closed form at several (s,t)") {
    const double H = 0.7, sigma = 1.0;
    const TimeGrid grid(1.0, 128);
    const std::size_t n = 40000;
    FbmGenerator gen(grid, H, sigma);
    // accumulate B_s B_t for grid times s = 0.25, t = 0.75 and marginals
    const std::size_t is = 32, it = 96;
    CompensatedSum acc_st, acc_ss, acc_tt;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = gen.sample_path(0.0, derive_seed(7, i));
        acc_st.add(p.values[is] * p.values[it]);
        acc_ss.add(p.values[is] * p.values[is]);
        acc_tt.add(p.values[it] * p.values[it]);
    }
    const double nn = static_cast<double>(n);
    const double cov_st = acc_st.value() / nn;
    const double var_s = acc_ss.value() / nn;
    const double var_t = acc_tt.value() / nn;
    const double s = grid.time(is), t = grid.time(it);
    REQUIRE(std::fabs(var_s - fbm_covariance(H, sigma, s, s)) < 0.02);
    REQUIRE(std::fabs(var_t - fbm_covariance(H, sigma, t, t)) < 0.03);
    REQUIRE(std::fabs(cov_st - fbm_covariance(H, sigma, s, t)) < 0.03);
}

TEST_CASE("H = 1/2 fbm has Brownian marginal variance") {
    const TimeGrid grid(1.0, 128);
    const std::size_t n = 20000;
    FbmGenerator gen(grid, 0.5, 1.0);
    std::vector<double> terminal(n);
    for (std::size_t i = 0; i < n; ++i)
        terminal[i] = gen.sample_path(0.0, derive_seed(3, i)).values.back();
    REQUIRE(std::fabs(sample_variance(terminal) - 1.0) < 0.05);
}

TEST_CASE("ensemble generation is order-independent and registry-aware") {
    ModelSpec spec;
    spec.kind = ModelKind::transformed;
    spec.transform_id = "piecewise_ex3";
    spec.driver_kind = ModelKind::brownian;
    const TimeGrid grid(1.0, 128);
    const auto reg = TransformRegistry::with_builtins();
    const auto ens = generate_ensemble(spec, grid, 50, 11, &reg);
    REQUIRE(ens.size() == 50);
    EnsembleGenerator gen(spec, grid, &reg);
    // path i must not depend on how many other paths were generated
    const auto p17 = gen.path(11, 17);
    REQUIRE(p17.values == ens[17].values);
    REQUIRE(ens[0].model_tag == "transformed:piecewise_ex3");
    for (const auto& p : ens) REQUIRE(p.all_finite());
}

TEST_CASE("streaming iteration matches materialized ensemble") {
    ModelSpec spec;
    spec.kind = ModelKind::fractional_brownian;
    spec.hurst = 0.3;
    const TimeGrid grid(1.0, 64);
    const auto ens = generate_ensemble(spec, grid, 20, 5);
    std::vector<double> lasts(20);
    for_each_path(spec, grid, 20, 5,
                  [&](std::size_t i, const SamplePath& p) { lasts[i] = p.values.back(); });
    for (std::size_t i = 0; i < 20; ++i) REQUIRE(lasts[i] == ens[i].values.back());
}
