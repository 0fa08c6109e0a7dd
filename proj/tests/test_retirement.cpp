#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cpslab/pathgen.hpp"
#include "cpslab/retirement.hpp"
#include "cpslab/transforms.hpp"

using namespace cpslab;

namespace {
SamplePath make_path(double horizon, std::vector<double> values) {
    SamplePath p;
    p.grid = TimeGrid(horizon, values.size() - 1);
    p.values = std::move(values);
    return p;
}
}  // namespace

TEST_CASE("effective cost formula is exact on decimal inputs") {
    REQUIRE(effective_epsilon(0.1) == 0.331);
    REQUIRE(effective_epsilon(1.0) == 7.0);
    REQUIRE(effective_epsilon(0.0) == 0.0);
    // generic identity (1+e0)^3 - 1 up to rounding
    for (double e0 : {0.05, 0.2, 0.33, 0.7})
        REQUIRE(std::fabs(effective_epsilon(e0) - (std::pow(1.0 + e0, 3) - 1.0)) < 1e-14);
}

TEST_CASE("constant path retires immediately") {
    const auto p = make_path(1.0, {0.3, 0.3, 0.3, 0.3, 0.3});
    const LadderParams params(0.1, CrossingMode::interpolated);
    const auto lad = build_ladder(p, params);
    REQUIRE(lad.rung_count() == 0);
    REQUIRE(lad.taus == std::vector<double>{0.0, 1.0});
    REQUIRE(lad.signs == std::vector<int>{0});
    REQUIRE(lad.z_values.front() == lad.z_values.back());
    const auto rep = validate_sandwich(p, lad, params);
    REQUIRE(rep.n_violations == 0);
}

TEST_CASE("linear ramp crosses barriers at interpolated times") {
    const double e0 = 0.1;
    const double b = std::log1p(e0);
    // ramp from 0 to 2.5b: crossings of +b at t = 0.4 and +2b at t = 0.8
    const auto p = make_path(1.0, {0.0, 0.5 * 2.5 * b, 2.5 * b});
    const LadderParams params(e0, CrossingMode::interpolated);
    const auto lad = build_ladder(p, params);
    REQUIRE(lad.rung_count() == 2);
    REQUIRE(lad.signs == std::vector<int>{1, 1, 0});
    REQUIRE(lad.levels == std::vector<int>{0, 1, 2, 2});
    REQUIRE_THAT(lad.taus[1], Catch::Matchers::WithinAbs(0.4, 1e-12));
    REQUIRE_THAT(lad.taus[2], Catch::Matchers::WithinAbs(0.8, 1e-12));
    // anchors snap to the exact barrier lattice
    REQUIRE(lad.x_at_tau[1] == b);
    REQUIRE(lad.x_at_tau[2] == 2.0 * b);
    REQUIRE_THAT(lad.z_values[1], Catch::Matchers::WithinRel(1.0 + e0, 1e-14));
    REQUIRE_THAT(lad.z_values[2], Catch::Matchers::WithinRel((1.0 + e0) * (1.0 + e0), 1e-14));
    const auto rep = validate_sandwich(p, lad, params);
    REQUIRE(rep.n_violations == 0);
}

TEST_CASE("down-then-up path produces signed rungs") {
    const double e0 = 0.2;
    const double b = std::log1p(e0);
    const auto p = make_path(1.0, {0.0, -1.5 * b, 0.5 * b});
    const LadderParams params(e0, CrossingMode::interpolated);
    const auto lad = build_ladder(p, params);
    REQUIRE(lad.signs == std::vector<int>{-1, 1, 0});
    // first segment hits -b at theta = 2/3 of [0, 0.5]
    REQUIRE_THAT(lad.taus[1], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
    // second segment from -1.5b to 0.5b hits the new upper barrier 0 at
    // theta = 0.75 of [0.5, 1]
    REQUIRE_THAT(lad.taus[2], Catch::Matchers::WithinAbs(0.875, 1e-12));
    REQUIRE(validate_sandwich(p, lad, params).n_violations == 0);
}

TEST_CASE("several crossings within a single grid cell are resolved in order") {
    const double e0 = 0.1;
    const double b = std::log1p(e0);
    const auto p = make_path(1.0, {0.0, 1.75 * b, 3.5 * b});
    const LadderParams params(e0, CrossingMode::interpolated);
    const auto lad = build_ladder(p, params);
    REQUIRE(lad.rung_count() == 3);
    REQUIRE(lad.signs == std::vector<int>{1, 1, 1, 0});
    for (std::size_t k = 1; k < lad.taus.size(); ++k) REQUIRE(lad.taus[k] > lad.taus[k - 1]);
    REQUIRE(validate_sandwich(p, lad, params).n_violations == 0);
}

TEST_CASE("grid-snap mode exits at grid times with raw anchors") {
    const double e0 = 0.1;
    const double b = std::log1p(e0);
    const auto p = make_path(1.0, {0.0, 0.5 * b, 1.3 * b, 1.4 * b, 1.4 * b});
    const LadderParams params(e0, CrossingMode::grid_snap);
    const auto lad = build_ladder(p, params);
    REQUIRE(lad.rung_count() == 1);
    REQUIRE(lad.taus[1] == 0.5);         // grid time, not interpolated
    REQUIRE(lad.x_at_tau[1] == 1.3 * b);  // raw value, not snapped
    // overshoot beyond the barrier is reported, not hidden
    const auto rep = validate_sandwich(p, lad, params);
    REQUIRE(rep.max_overshoot_log > 0.0);
}

TEST_CASE("sandwich holds exactly on simulated ensembles") {
    const TimeGrid grid(1.0, 4096);
    for (double e0 : {0.1, 0.2}) {
        const LadderParams params(e0, CrossingMode::interpolated);
        for (std::size_t i = 0; i < 200; ++i) {
            const auto p = generate_brownian(grid, 1.0, 0.0, derive_seed(21, i));
            const auto lad = build_ladder(p, params);
            const auto rep = validate_sandwich(p, lad, params);
            REQUIRE(rep.n_violations == 0);
            REQUIRE(rep.factor_step_max <= rep.bound_hi);
            REQUIRE(rep.factor_step_min >= rep.bound_lo);
        }
    }
}

TEST_CASE("halving epsilon0 refines the ladder") {
    const TimeGrid grid(1.0, 2048);
    const auto p = generate_brownian(grid, 1.0, 0.0, 77);
    const auto coarse = build_ladder(p, LadderParams(0.2, CrossingMode::interpolated));
    const auto fine = build_ladder(p, LadderParams(0.1, CrossingMode::interpolated));
    REQUIRE(fine.rung_count() > coarse.rung_count());
}

TEST_CASE("affine rescaling with the matching barrier reproduces the ladder") {
    // doubling the path doubles the log-barrier: with epsilon0' chosen so
    // log(1+e0') = 2 log(1+e0), the ladder of 2X matches the ladder of X
    const TimeGrid grid(1.0, 2048);
    const double e0 = 0.3;
    const double e0p = (1.0 + e0) * (1.0 + e0) - 1.0;
    const auto base = generate_brownian(grid, 1.0, 0.0, 5);
    SamplePath doubled = base;
    for (auto& v : doubled.values) v *= 2.0;
    const auto lb = build_ladder(base, LadderParams(e0, CrossingMode::interpolated));
    const auto ld = build_ladder(doubled, LadderParams(e0p, CrossingMode::interpolated));
    REQUIRE(lb.signs == ld.signs);
    REQUIRE(lb.taus.size() == ld.taus.size());
    for (std::size_t k = 0; k < lb.taus.size(); ++k)
        REQUIRE_THAT(ld.taus[k], Catch::Matchers::WithinAbs(lb.taus[k], 1e-9));
    const LadderParams pd(e0p, CrossingMode::interpolated);
    REQUIRE(validate_sandwich(doubled, ld, pd).n_violations == 0);
}

TEST_CASE("validate_sandwich rejects mismatched inputs") {
    const auto p = make_path(1.0, {0.0, 0.1, 0.2});
    const LadderParams params(0.1, CrossingMode::interpolated);
    const auto lad = build_ladder(p, params);
    const LadderParams other(0.2, CrossingMode::interpolated);
    REQUIRE_THROWS_AS(validate_sandwich(p, lad, other), std::logic_error);
}
