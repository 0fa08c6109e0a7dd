#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpslab/fft.hpp"
#include "cpslab/grid.hpp"
#include "cpslab/parallel.hpp"
#include "cpslab/rng.hpp"
#include "cpslab/transforms.hpp"

namespace cpslab {

inline SamplePath generate_brownian(const TimeGrid& grid, double sigma, double x0,
                                    std::uint64_t seed) {
    if (!(sigma > 0.0)) throw std::invalid_argument("generate_brownian: sigma must be positive");
    SamplePath path;
    path.grid = grid;
    path.seed = seed;
    path.model_tag = "brownian";
    path.values.resize(grid.size());
    NormalRng rng(seed);
    const double step_sd = sigma * std::sqrt(grid.dt());
    double x = x0;
    path.values[0] = x;
    for (std::size_t i = 1; i < path.values.size(); ++i) {
        x += step_sd * rng();
        path.values[i] = x;
    }
    return path;
}

// Exact fractional Gaussian noise covariance at integer lag k, unit step.
inline double fgn_autocov(double hurst, std::size_t k) {
    const double kk = static_cast<double>(k);
    const double h2 = 2.0 * hurst;
    if (k == 0) return 1.0;
    return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(kk - 1.0, h2));
}

// Closed-form fBm covariance E[B^H_s B^H_t] = sigma^2/2 (s^2H + t^2H - |t-s|^2H).
inline double fbm_covariance(double hurst, double sigma, double s, double t) {
    const double h2 = 2.0 * hurst;
    return 0.5 * sigma * sigma *
           (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::fabs(t - s), h2));
}

// Circulant-embedding sampler for fractional Gaussian noise. The embedding
// spectrum is computed once per (n_steps, H) and shared read-only across
// paths; sampling is then one Hermitian FFT per path. When the embedding has
// eigenvalues below -1e-12 (relative to the unit-variance normalization) the
// sampler falls back to a dense Cholesky factor of the exact covariance.
class FbmGenerator {
public:
    FbmGenerator(const TimeGrid& grid, double hurst, double sigma)
        : grid_(grid), hurst_(hurst), sigma_(sigma) {
        if (!(hurst > 0.0 && hurst < 1.0))
            throw std::invalid_argument("FbmGenerator: hurst must be in (0,1)");
        if (!(sigma > 0.0)) throw std::invalid_argument("FbmGenerator: sigma must be positive");
        increment_sd_ = sigma * std::pow(grid.dt(), hurst);
        build_spectrum();
        if (!spectrum_ok_) build_dense_factor();
    }

    const TimeGrid& grid() const { return grid_; }
    bool uses_dense_fallback() const { return !spectrum_ok_; }

    // n_steps unit-variance-scaled increments, deterministic per seed.
    std::vector<double> sample_increments(std::uint64_t seed) const {
        return spectrum_ok_ ? sample_circulant(seed) : sample_dense(seed);
    }

    SamplePath sample_path(double x0, std::uint64_t seed) const {
        SamplePath path;
        path.grid = grid_;
        path.seed = seed;
        path.model_tag = "fbm";
        path.values.resize(grid_.size());
        const std::vector<double> incr = sample_increments(seed);
        double x = x0;
        path.values[0] = x;
        for (std::size_t i = 0; i < incr.size(); ++i) {
            x += increment_sd_ * incr[i];
            path.values[i + 1] = x;
        }
        return path;
    }

private:
    void build_spectrum() {
        const std::size_t n = grid_.n_steps;
        const std::size_t m = 2 * n;
        std::vector<std::complex<double>> row(m);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t lag = k <= n ? k : m - k;
            row[k] = fgn_autocov(hurst_, lag);
        }
        fft::forward(row);
        sqrt_eigs_.resize(m);
        spectrum_ok_ = true;
        for (std::size_t k = 0; k < m; ++k) {
            double lambda = row[k].real();
            if (lambda < 0.0) {
                if (lambda >= -1e-12) {
                    lambda = 0.0;  // numerical noise, clamp
                } else {
                    spectrum_ok_ = false;
                    return;
                }
            }
            sqrt_eigs_[k] = std::sqrt(lambda);
        }
    }

    std::vector<double> sample_circulant(std::uint64_t seed) const {
        const std::size_t n = grid_.n_steps;
        const std::size_t m = 2 * n;
        NormalRng rng(seed);
        std::vector<std::complex<double>> v(m);
        const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
        v[0] = sqrt_eigs_[0] * rng() * inv_sqrt_m;
        const double inv_sqrt_2m = inv_sqrt_m / std::sqrt(2.0);
        for (std::size_t k = 1; k < n; ++k) {
            const double a = rng();
            const double b = rng();
            v[k] = std::complex<double>(a, b) * (sqrt_eigs_[k] * inv_sqrt_2m);
            v[m - k] = std::conj(v[k]);
        }
        v[n] = sqrt_eigs_[n] * rng() * inv_sqrt_m;
        fft::forward(v);
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = v[i].real();
        return out;
    }

    void build_dense_factor() {
        const std::size_t n = grid_.n_steps;
        dense_lower_.assign(n * n, 0.0);
        // exact fGn covariance, Cholesky factorization
        std::vector<double> cov(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                cov[i * n + j] = fgn_autocov(hurst_, i - j);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double sum = cov[i * n + j];
                for (std::size_t k = 0; k < j; ++k)
                    sum -= dense_lower_[i * n + k] * dense_lower_[j * n + k];
                if (i == j) {
                    if (sum <= 0.0)
                        throw std::runtime_error(
                            "FbmGenerator: exact covariance factorization failed");
                    dense_lower_[i * n + j] = std::sqrt(sum);
                } else {
                    dense_lower_[i * n + j] = sum / dense_lower_[j * n + j];
                }
            }
        }
    }

    std::vector<double> sample_dense(std::uint64_t seed) const {
        const std::size_t n = grid_.n_steps;
        NormalRng rng(seed);
        std::vector<double> z(n);
        for (auto& x : z) x = rng();
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k <= i; ++k) acc += dense_lower_[i * n + k] * z[k];
            out[i] = acc;
        }
        return out;
    }

    TimeGrid grid_;
    double hurst_;
    double sigma_;
    double increment_sd_ = 1.0;
    bool spectrum_ok_ = false;
    std::vector<double> sqrt_eigs_;
    std::vector<double> dense_lower_;
};

inline SamplePath generate_fbm(const TimeGrid& grid, double hurst, double sigma, double x0,
                               std::uint64_t seed) {
    FbmGenerator gen(grid, hurst, sigma);
    return gen.sample_path(x0, seed);
}

// Shared per-ensemble state so the fBm spectrum is built once.
class EnsembleGenerator {
public:
    EnsembleGenerator(ModelSpec spec, const TimeGrid& grid,
                      const TransformRegistry* registry = nullptr)
        : spec_(std::move(spec)), grid_(grid) {
        spec_.check();
        if (spec_.kind == ModelKind::fractional_brownian)
            fbm_ = std::make_shared<FbmGenerator>(grid, spec_.hurst, spec_.volatility);
        if (spec_.kind == ModelKind::transformed) {
            if (!registry) throw std::runtime_error("transformed model requires a registry");
            transform_ = registry->get(spec_.transform_id);
            if (spec_.driver_kind == ModelKind::fractional_brownian)
                fbm_ = std::make_shared<FbmGenerator>(grid, spec_.driver_hurst, spec_.volatility);
        }
    }

    SamplePath path(std::uint64_t base_seed, std::size_t index) const {
        const std::uint64_t seed = derive_seed(base_seed, index);
        SamplePath p;
        switch (spec_.kind) {
            case ModelKind::brownian:
                p = generate_brownian(grid_, spec_.volatility, spec_.initial_value, seed);
                break;
            case ModelKind::fractional_brownian:
                p = fbm_->sample_path(spec_.initial_value, seed);
                break;
            case ModelKind::transformed: {
                if (spec_.driver_kind == ModelKind::brownian)
                    p = generate_brownian(grid_, spec_.volatility, spec_.initial_value, seed);
                else
                    p = fbm_->sample_path(spec_.initial_value, seed);
                for (auto& v : p.values) v = evaluate(transform_, v);
                p.model_tag = "transformed:" + transform_.id;
                break;
            }
        }
        return p;
    }

    const TimeGrid& grid() const { return grid_; }
    const ModelSpec& spec() const { return spec_; }

private:
    ModelSpec spec_;
    TimeGrid grid_;
    std::shared_ptr<FbmGenerator> fbm_;
    TransformSpec transform_;
};

inline std::vector<SamplePath> generate_ensemble(const ModelSpec& spec, const TimeGrid& grid,
                                                 std::size_t n_paths, std::uint64_t base_seed,
                                                 const TransformRegistry* registry = nullptr) {
    if (n_paths < 1) throw std::invalid_argument("generate_ensemble: n_paths must be >= 1");
    EnsembleGenerator gen(spec, grid, registry);
    std::vector<SamplePath> out(n_paths);
    parallel_for(n_paths, [&](std::size_t i) { out[i] = gen.path(base_seed, i); });
    return out;
}

// Streaming evaluation for ensembles too large to materialize. fn(i, path)
// must write results to per-index slots; content is independent of thread
// count by per-path seeding.
template <typename Fn>
void for_each_path(const ModelSpec& spec, const TimeGrid& grid, std::size_t n_paths,
                   std::uint64_t base_seed, Fn&& fn,
                   const TransformRegistry* registry = nullptr) {
    EnsembleGenerator gen(spec, grid, registry);
    parallel_for(n_paths, [&](std::size_t i) {
        const SamplePath p = gen.path(base_seed, i);
        fn(i, p);
    });
}

}  // namespace cpslab
