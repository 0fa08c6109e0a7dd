#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cpslab/transforms.hpp"

using namespace cpslab;

namespace {
TransformSpec builtin_spec(BuiltinTransform b) {
    TransformSpec s;
    s.id = to_string(b);
    s.builtin = b;
    return s;
}
}  // namespace

TEST_CASE("builtin transforms evaluate correctly") {
    REQUIRE(evaluate_builtin(BuiltinTransform::identity, 2.0) == 2.0);
    REQUIRE(evaluate_builtin(BuiltinTransform::monotone_sigmoid_like, 0.0) == 0.0);
    REQUIRE(evaluate_builtin(BuiltinTransform::monotone_sigmoid_like, 1.0) ==
            1.0 + std::tanh(1.0));
    REQUIRE(evaluate_builtin(BuiltinTransform::cubic_plus_square, 1.0) == 2.0);
    REQUIRE(evaluate_builtin(BuiltinTransform::cubic_plus_square, -1.0) == 0.0);
    // the folded transform is continuous at the seam x = -1 and folds at 0
    REQUIRE(evaluate_builtin(BuiltinTransform::piecewise_ex3, -1.0) == 1.0);
    REQUIRE(evaluate_builtin(BuiltinTransform::piecewise_ex3, -1.5) == 0.5);
    REQUIRE(evaluate_builtin(BuiltinTransform::piecewise_ex3, -2.0) == 0.0);
    REQUIRE(evaluate_builtin(BuiltinTransform::piecewise_ex3, 0.5) == 0.5);
    REQUIRE(evaluate_builtin(BuiltinTransform::piecewise_ex3, -0.5) == 0.5);
}

TEST_CASE("registry stores builtins and scaled variants") {
    auto reg = TransformRegistry::with_builtins();
    REQUIRE(reg.contains("identity"));
    REQUIRE(reg.contains("piecewise_ex3"));
    REQUIRE_FALSE(reg.contains("nope"));
    reg.add_scaled("half_fold", BuiltinTransform::piecewise_ex3, 0.5);
    REQUIRE(evaluate(reg.get("half_fold"), -2.0) == 0.0);
    REQUIRE(evaluate(reg.get("half_fold"), 3.0) == 1.5);
    REQUIRE_THROWS(reg.get("nope"));
    REQUIRE_THROWS(reg.add_scaled("bad", BuiltinTransform::identity, -1.0));
}

TEST_CASE("tail classification") {
    REQUIRE(classify_limits(builtin_spec(BuiltinTransform::identity)) == TailClass::case_a);
    REQUIRE(classify_limits(builtin_spec(BuiltinTransform::monotone_sigmoid_like)) ==
            TailClass::case_a);
    REQUIRE(classify_limits(builtin_spec(BuiltinTransform::cubic_plus_square)) ==
            TailClass::case_a);
    REQUIRE(classify_limits(builtin_spec(BuiltinTransform::piecewise_ex3)) == TailClass::case_a);
    // a mirrored (decreasing) transform lands in case_b
    TransformSpec neg;
    neg.id = "neg_identity";
    neg.kind = TransformKind::scaled;
    neg.builtin = BuiltinTransform::identity;
    neg.alpha = -1.0;
    REQUIRE(classify_limits(neg) == TailClass::case_b);
}

TEST_CASE("drop oracle: folded transform has d = -1") {
    const auto spec = builtin_spec(BuiltinTransform::piecewise_ex3);
    const auto a = analyze_drop(spec, -5.0, 5.0, 200000);
    REQUIRE(std::fabs(a.d - (-1.0)) < 1e-3);
    REQUIRE(a.d0_unbounded);       // diverges at +inf
    REQUIRE_FALSE(a.d_unbounded);  // worst drop is attained, not a tail effect
}

TEST_CASE("drop oracle: cubic-plus-square drop is -4/27 (critical-point value)") {
    // f(x) = x^3 + x^2 has local max f(-2/3) = 4/27 and local min f(0) = 0;
    // the worst drop over ordered pairs is f(0) - f(-2/3) = -4/27. A commonly
    // quoted -12/27 disagrees with this grid oracle.
    const auto spec = builtin_spec(BuiltinTransform::cubic_plus_square);
    const auto a = analyze_drop(spec, -5.0, 5.0, 200000);
    REQUIRE(std::fabs(a.d - (-4.0 / 27.0)) < 1e-3);
    REQUIRE(std::fabs(a.d - (-12.0 / 27.0)) > 1e-2);
}

TEST_CASE("drop oracle: monotone transforms have zero drop") {
    const auto a =
        analyze_drop(builtin_spec(BuiltinTransform::monotone_sigmoid_like), -5.0, 5.0, 10000);
    REQUIRE(a.d == 0.0);
    const auto b = analyze_drop(builtin_spec(BuiltinTransform::identity), -5.0, 5.0, 10000);
    REQUIRE(b.d == 0.0);
}

TEST_CASE("drop oracle: box widening is monotone") {
    const auto spec = builtin_spec(BuiltinTransform::cubic_plus_square);
    const auto narrow = analyze_drop(spec, -1.0, 1.0, 50000);
    const auto wide = analyze_drop(spec, -5.0, 5.0, 50000);
    const auto wider = analyze_drop(spec, -20.0, 20.0, 50000);
    // tolerance absorbs O(grid spacing^2) jitter of the sampled extrema
    REQUIRE(wide.d <= narrow.d + 1e-6);
    REQUIRE(wider.d <= wide.d + 1e-6);
    REQUIRE(wide.d0 >= narrow.d0 - 1e-6);
    REQUIRE(wider.d0 >= wide.d0 - 1e-6);
}

TEST_CASE("drop oracle: scaling by alpha is linear to 1e-12") {
    TransformSpec scaled;
    scaled.id = "scaled_fold";
    scaled.kind = TransformKind::scaled;
    scaled.builtin = BuiltinTransform::piecewise_ex3;
    scaled.alpha = 0.37;
    const auto base = analyze_drop(builtin_spec(BuiltinTransform::piecewise_ex3), -4.0, 4.0, 20000);
    const auto sc = analyze_drop(scaled, -4.0, 4.0, 20000);
    REQUIRE(std::fabs(sc.d - 0.37 * base.d) < 1e-12);
    REQUIRE(std::fabs(sc.d0 - 0.37 * base.d0) < 1e-12);
}

TEST_CASE("alpha bound from drop analysis") {
    const auto fold = builtin_spec(BuiltinTransform::piecewise_ex3);
    const auto a_fold = analyze_drop(fold, -5.0, 5.0, 200000);
    const auto iv = alpha_bound(fold, 0.5, a_fold);
    REQUIRE(iv.lo == 0.0);
    REQUIRE_FALSE(iv.hi_unbounded);
    REQUIRE(std::fabs(iv.hi - 0.5) < 1e-3);  // delta0 / |d| = 0.5 / 1

    const auto cubic = builtin_spec(BuiltinTransform::cubic_plus_square);
    const auto a_cubic = analyze_drop(cubic, -5.0, 5.0, 200000);
    const auto iv2 = alpha_bound(cubic, 1.0, a_cubic);
    REQUIRE(std::fabs(iv2.hi - 27.0 / 4.0) < 0.1);  // delta0 / |oracle d|

    // monotone transform: any alpha is admissible
    const auto mono = builtin_spec(BuiltinTransform::monotone_sigmoid_like);
    const auto a_mono = analyze_drop(mono, -5.0, 5.0, 10000);
    REQUIRE(alpha_bound(mono, 1.0, a_mono).hi_unbounded);
}

TEST_CASE("alpha bound rejects bad inputs") {
    const auto fold = builtin_spec(BuiltinTransform::piecewise_ex3);
    const auto a = analyze_drop(fold, -5.0, 5.0, 10000);
    REQUIRE_THROWS_AS(alpha_bound(fold, 0.0, a), std::invalid_argument);
    const auto other = builtin_spec(BuiltinTransform::identity);
    REQUIRE_THROWS_AS(alpha_bound(other, 1.0, a), std::logic_error);
    REQUIRE_THROWS_AS(analyze_drop(fold, 5.0, -5.0, 10000), std::invalid_argument);
    REQUIRE_THROWS_AS(analyze_drop(fold, -5.0, 5.0, 10), std::invalid_argument);
}
