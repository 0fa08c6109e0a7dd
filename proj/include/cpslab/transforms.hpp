#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpslab {

enum class BuiltinTransform { identity, monotone_sigmoid_like, cubic_plus_square, piecewise_ex3 };

inline std::string to_string(BuiltinTransform b) {
    switch (b) {
        case BuiltinTransform::identity: return "identity";
        case BuiltinTransform::monotone_sigmoid_like: return "monotone_sigmoid_like";
        case BuiltinTransform::cubic_plus_square: return "cubic_plus_square";
        case BuiltinTransform::piecewise_ex3: return "piecewise_ex3";
    }
    return "?";
}

enum class TransformKind { builtin, scaled };

struct TransformSpec {
    std::string id;
    TransformKind kind = TransformKind::builtin;
    BuiltinTransform builtin = BuiltinTransform::identity;
    double alpha = 1.0;  // scaled kind wraps the builtin as alpha * f
};

inline double evaluate_builtin(BuiltinTransform b, double x) {
    switch (b) {
        case BuiltinTransform::identity:
            return x;
        case BuiltinTransform::monotone_sigmoid_like:
            return x + std::tanh(x);
        case BuiltinTransform::cubic_plus_square:
            return x * x * x + x * x;
        case BuiltinTransform::piecewise_ex3:
            return x >= -1.0 ? std::fabs(x) : x + 2.0;
    }
    return x;
}

inline double evaluate(const TransformSpec& spec, double x) {
    const double fx = evaluate_builtin(spec.builtin, x);
    return spec.kind == TransformKind::scaled ? spec.alpha * fx : fx;
}

// Immutable after construction; concurrent reads are safe.
class TransformRegistry {
public:
    static TransformRegistry with_builtins() {
        TransformRegistry reg;
        for (auto b : {BuiltinTransform::identity, BuiltinTransform::monotone_sigmoid_like,
                       BuiltinTransform::cubic_plus_square, BuiltinTransform::piecewise_ex3}) {
            TransformSpec spec;
            spec.id = to_string(b);
            spec.builtin = b;
            reg.add(spec);
        }
        return reg;
    }

    void add(TransformSpec spec) {
        if (spec.id.empty()) throw std::invalid_argument("transform id must be nonempty");
        if (spec.kind == TransformKind::scaled && !(spec.alpha > 0.0))
            throw std::invalid_argument("scaled transform needs alpha > 0");
        specs_[spec.id] = std::move(spec);
    }

    void add_scaled(const std::string& id, BuiltinTransform b, double alpha) {
        TransformSpec spec;
        spec.id = id;
        spec.kind = TransformKind::scaled;
        spec.builtin = b;
        spec.alpha = alpha;
        add(spec);
    }

    const TransformSpec& get(const std::string& id) const {
        auto it = specs_.find(id);
        if (it == specs_.end())
            throw std::runtime_error("unknown transform id: " + id);
        return it->second;
    }

    bool contains(const std::string& id) const { return specs_.count(id) != 0; }

private:
    std::map<std::string, TransformSpec> specs_;
};

enum class TailClass { case_a, case_b, neither };

inline std::string to_string(TailClass c) {
    switch (c) {
        case TailClass::case_a: return "case_a";
        case TailClass::case_b: return "case_b";
        case TailClass::neither: return "neither";
    }
    return "?";
}

// Numeric tail classification: case_a means f -> -inf / +inf at -inf / +inf,
// case_b the mirrored divergence. Probes at +-probe and +-2*probe and asks
// for monotone divergence of matching sign.
inline TailClass classify_limits(const TransformSpec& spec, double probe = 1e3) {
    if (!(probe >= 1e3)) throw std::invalid_argument("classify_limits: probe must be >= 1e3");
    const double fp = evaluate(spec, probe);
    const double fpp = evaluate(spec, 2.0 * probe);
    const double fm = evaluate(spec, -probe);
    const double fmm = evaluate(spec, -2.0 * probe);
    if (fp > 0.0 && fpp > fp && fm < 0.0 && fmm < fm) return TailClass::case_a;
    if (fp < 0.0 && fpp < fp && fm > 0.0 && fmm > fm) return TailClass::case_b;
    return TailClass::neither;
}

// Drop/rise functionals of f over ordered pairs y >= x, truncated to a box.
// d and d0 always carry the finite grid values; the unbounded flags mark the
// cases where the tail classification shows the true functional diverges.
struct DropAnalysis {
    std::string transform_id;
    double d = 0.0;        // min over grid pairs y >= x of f(y) - f(x), <= 0
    double d0 = 0.0;       // max over grid pairs y >= x of f(y) - f(x), >= 0
    bool d_unbounded = false;   // true drop is -inf (case_b tails)
    bool d0_unbounded = false;  // true rise is +inf (case_a tails)
    double box_lo = 0.0;
    double box_hi = 0.0;
    std::size_t resolution = 0;
};

inline DropAnalysis analyze_drop(const TransformSpec& spec, double lo, double hi,
                                 std::size_t resolution) {
    if (!(lo < hi)) throw std::invalid_argument("analyze_drop: box must be nonempty");
    if (resolution < 1000) throw std::invalid_argument("analyze_drop: resolution must be >= 1e3");

    std::vector<double> fs(resolution + 1);
    for (std::size_t i = 0; i <= resolution; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution);
        fs[i] = evaluate(spec, x);
    }
    // d = min_i (min_{j >= i} f_j - f_i) via a suffix-min sweep; d0 symmetric.
    double suffix_min = fs.back();
    double suffix_max = fs.back();
    double d = 0.0;
    double d0 = 0.0;
    for (std::size_t i = resolution + 1; i-- > 0;) {
        suffix_min = std::min(suffix_min, fs[i]);
        suffix_max = std::max(suffix_max, fs[i]);
        d = std::min(d, suffix_min - fs[i]);
        d0 = std::max(d0, suffix_max - fs[i]);
    }

    DropAnalysis out;
    out.transform_id = spec.id;
    out.d = d;
    out.d0 = d0;
    const TailClass tails = classify_limits(spec);
    out.d_unbounded = tails == TailClass::case_b;
    out.d0_unbounded = tails == TailClass::case_a;
    out.box_lo = lo;
    out.box_hi = hi;
    out.resolution = resolution;
    return out;
}

// Admissible scaling range (0, hi) for alpha * f; hi_unbounded marks the
// monotone case where any alpha works.
struct AlphaInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool hi_unbounded = false;
};

inline AlphaInterval alpha_bound(const TransformSpec& spec, double delta0,
                                 const DropAnalysis& analysis) {
    if (!(delta0 > 0.0)) throw std::invalid_argument("alpha_bound: delta0 must be positive");
    if (analysis.transform_id != spec.id)
        throw std::logic_error("alpha_bound: analysis was computed for a different transform");
    const TailClass tails = classify_limits(spec);
    AlphaInterval out;
    if (tails == TailClass::case_a) {
        if (analysis.d_unbounded)
            throw std::logic_error("alpha_bound: inconsistent analysis (d unbounded in case_a)");
        if (analysis.d == 0.0) {
            out.hi_unbounded = true;
        } else {
            out.hi = delta0 / std::fabs(analysis.d);
        }
    } else if (tails == TailClass::case_b) {
        if (analysis.d0_unbounded)
            throw std::logic_error("alpha_bound: inconsistent analysis (d0 unbounded in case_b)");
        if (analysis.d0 == 0.0) {
            out.hi_unbounded = true;
        } else {
            out.hi = delta0 / analysis.d0;
        }
    } else {
        throw std::logic_error("alpha_bound: transform has no divergent tails (neither case)");
    }
    return out;
}

}  // namespace cpslab
