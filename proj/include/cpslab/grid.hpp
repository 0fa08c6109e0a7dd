#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpslab {

// Uniform time grid on [0, T]. Off-grid values of any path are defined by
// linear interpolation between adjacent grid values; that convention is
// toolkit-wide so barrier crossings are well defined.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t n_steps = 2;

    TimeGrid() = default;
    TimeGrid(double T, std::size_t n) : horizon(T), n_steps(n) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
        if (n < 2) throw std::invalid_argument("TimeGrid: n_steps must be >= 2");
    }

    double dt() const { return horizon / static_cast<double>(n_steps); }
    double time(std::size_t i) const {
        return i == n_steps ? horizon
                            : horizon * (static_cast<double>(i) / static_cast<double>(n_steps));
    }
    std::size_t size() const { return n_steps + 1; }
};

struct SamplePath {
    TimeGrid grid;
    std::vector<double> values;  // log-price units, length n_steps + 1
    std::uint64_t seed = 0;
    std::string model_tag;

    // Linear interpolation at arbitrary t in [0, T].
    double at(double t) const {
        const double T = grid.horizon;
        if (t <= 0.0) return values.front();
        if (t >= T) return values.back();
        const double pos = t / T * static_cast<double>(grid.n_steps);
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= values.size()) return values.back();
        const double frac = pos - static_cast<double>(i);
        return values[i] + frac * (values[i + 1] - values[i]);
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

enum class ModelKind { brownian, fractional_brownian, transformed };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::brownian: return "brownian";
        case ModelKind::fractional_brownian: return "fractional_brownian";
        case ModelKind::transformed: return "transformed";
    }
    return "?";
}

// Generating-model description. For kind == transformed the driver fields
// describe the underlying Gaussian process and transform_id names the
// function composed onto it pointwise.
struct ModelSpec {
    ModelKind kind = ModelKind::brownian;
    double hurst = 0.5;       // fractional case only
    double volatility = 1.0;  // sigma > 0
    double initial_value = 0.0;
    std::string transform_id;                       // transformed case only
    ModelKind driver_kind = ModelKind::brownian;    // transformed case only
    double driver_hurst = 0.5;                      // transformed + fractional driver

    void check() const {
        if (!(volatility > 0.0))
            throw std::invalid_argument("ModelSpec: volatility must be positive");
        if (kind == ModelKind::fractional_brownian && !(hurst > 0.0 && hurst < 1.0))
            throw std::invalid_argument("ModelSpec: hurst must be in (0,1)");
        if (kind == ModelKind::transformed) {
            if (transform_id.empty())
                throw std::invalid_argument("ModelSpec: transformed model needs transform_id");
            if (driver_kind == ModelKind::transformed)
                throw std::invalid_argument("ModelSpec: driver cannot itself be transformed");
            if (driver_kind == ModelKind::fractional_brownian &&
                !(driver_hurst > 0.0 && driver_hurst < 1.0))
                throw std::invalid_argument("ModelSpec: driver_hurst must be in (0,1)");
        }
    }
};

}  // namespace cpslab
