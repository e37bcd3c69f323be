#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qdiff/errors.hpp"
#include "qdiff/quantile_diffusion.hpp"
#include "qdiff/rng.hpp"

namespace qdiff {

struct TimeGrid {
    double t0 = 1e-3;
    double T = 1.0;
    std::size_t steps = 1000;

    [[nodiscard]] static TimeGrid with_dt(double t0, double T, double dt);
    [[nodiscard]] double dt() const { return (T - t0) / static_cast<double>(steps); }
    [[nodiscard]] double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt(); }
    void validate() const;
};

enum class PathLabel { Transform, Sde, Driver };
[[nodiscard]] std::string to_string(PathLabel l);

// values[p * times.size() + j] is path p at times[j].
struct PathBatch {
    TimeGrid grid;
    std::vector<double> times;
    std::size_t n_paths = 0;
    std::vector<double> values;
    std::uint64_t seed = 0;
    PathLabel label = PathLabel::Sde;

    [[nodiscard]] double at(std::size_t path, std::size_t j) const {
        return values[path * times.size() + j];
    }
    [[nodiscard]] std::size_t time_index(double t) const;
    // Cross-section of all paths at times[j].
    [[nodiscard]] std::vector<double> column(std::size_t j) const;
    [[nodiscard]] std::vector<double> marginal(double t) const { return column(time_index(t)); }
};

// Header `t,path_id,value`, one row per (time, path), time-major.
void write_csv(const PathBatch& batch, std::ostream& os);

struct SimOptions {
    // Grid times to keep; empty keeps every grid point. Each entry is snapped
    // to the nearest grid index.
    std::vector<double> record_times;
    StateBounds bounds;
    unsigned threads = 0;  // 0 = hardware concurrency
};

namespace detail {

std::vector<std::ptrdiff_t> record_slots(const TimeGrid& grid, const std::vector<double>& wanted,
                                         std::vector<double>& times);

// Splits [0, n) into contiguous chunks, one per worker; rethrows the first error.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace detail

inline constexpr double kBlowUp = 1e12;

// Explicit Euler-Maruyama for dZ = alpha dt + sigma_tilde dW. The start value
// comes from z0(path, rng) so that it may be random; the same per-path stream
// then drives the increments.
template <class Coeff, class Start>
PathBatch euler_maruyama(const Coeff& coeff, const Start& z0, const TimeGrid& grid,
                         std::size_t n_paths, std::uint64_t seed, const SimOptions& opt = {}) {
    grid.validate();
    if (n_paths == 0) throw DomainError("euler_maruyama: need at least one path");
    PathBatch b;
    b.grid = grid;
    b.seed = seed;
    b.label = PathLabel::Sde;
    b.n_paths = n_paths;
    const auto slots = detail::record_slots(grid, opt.record_times, b.times);
    const std::size_t nt = b.times.size();
    b.values.assign(n_paths * nt, 0.0);
    const double dt = grid.dt();
    const double sq = std::sqrt(dt);
    const StateBounds bounds = opt.bounds;

    detail::parallel_for(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxEngine eng(seed, p);
            NormalDist nd;
            double* row = b.values.data() + p * nt;
            double z = bounds.clip(z0(p, eng));
            if (slots[0] >= 0) row[slots[0]] = z;
            for (std::size_t k = 0; k < grid.steps; ++k) {
                const double t = grid.time(k);
                const CoefficientPair c = coeff(t, z);
                z += c.alpha * dt + c.sigma_tilde * sq * nd(eng);
                z = bounds.clip(z);
                if (!(std::fabs(z) <= kBlowUp))
                    throw BlowUpError("euler_maruyama: |Z| exceeded 1e12 on path " +
                                      std::to_string(p) + " at t=" + std::to_string(grid.time(k + 1)));
                if (slots[k + 1] >= 0) row[slots[k + 1]] = z;
            }
        }
    });
    return b;
}

template <class Coeff>
PathBatch euler_maruyama(const Coeff& coeff, double z0, const TimeGrid& grid, std::size_t n_paths,
                         std::uint64_t seed, const SimOptions& opt = {}) {
    return euler_maruyama(
        coeff, [z0](std::size_t, PhiloxEngine&) { return z0; }, grid, n_paths, seed, opt);
}

// Driver paths from exact transition draws, started at y0 at time 0.
[[nodiscard]] PathBatch simulate_driver_paths(const DiffusionSpec& spec, const TimeGrid& grid,
                                              std::size_t n_paths, std::uint64_t seed,
                                              const SimOptions& opt = {});

// Exact driver paths pushed through the composite map; with the same seed the
// result is pathwise co-monotone with simulate_driver_paths.
[[nodiscard]] PathBatch simulate_transform_paths(const CompositeMap& map, const TimeGrid& grid,
                                                 std::size_t n_paths, std::uint64_t seed,
                                                 const SimOptions& opt = {});

// Euler-Maruyama on sde_coefficients_general started from exact draws of Z_{t0}.
[[nodiscard]] PathBatch simulate_sde_paths(const CompositeMap& map, const TimeGrid& grid,
                                           std::size_t n_paths, std::uint64_t seed,
                                           const SimOptions& opt = {});

// Euler-Maruyama on the unified closed form of a true-law standardized g or h
// target over a Gaussian-type driver. Var(t) and sigma enter only through
// sigma^2/(2 Var) and sigma/sqrt(Var), tabulated once per step; the h inverse
// is warm-started from the previous state. Streams and start values match
// euler_maruyama with unified_*_coefficients.
struct UnifiedSde {
    TukeyFamily family = TukeyFamily::G;  // G or H
    double param = 0.5;                   // g or h
    std::function<double(double)> variance;
    double sigma = 1.0;
};
[[nodiscard]] PathBatch simulate_unified_paths(const CompositeMap& map, const UnifiedSde& sde,
                                               const TimeGrid& grid, std::size_t n_paths,
                                               std::uint64_t seed, const SimOptions& opt = {});

// Exact draw of Z_{t0} for path p from its own stream.
[[nodiscard]] double exact_start(const CompositeMap& map, double t0, PhiloxEngine& eng);

// Empirical law of a custom driver at t (Euler paths + Gaussian kernel).
[[nodiscard]] LawPtr empirical_marginal_law(const DiffusionSpec& spec, double t, std::size_t n_paths,
                                            std::uint64_t seed, std::size_t steps = 1000);

// sqrt(n) (Q_n(u) - F^-(u)) with Q_n(u) the k-th order statistic, (k-1)/n < u <= k/n.
[[nodiscard]] double empirical_quantile_process(std::vector<double> sample,
                                                const std::function<double(double)>& true_quantile,
                                                double u);
[[nodiscard]] double empirical_quantile_process_sorted(const std::vector<double>& sorted,
                                                       const std::function<double(double)>& true_quantile,
                                                       double u);

struct BahadurReport {
    double u = 0.5;
    std::vector<std::size_t> n;
    std::vector<double> remainder;
    double slope = 0.0;  // least-squares slope of log|R_n| against log n
};

// R_n = Y_n - eta - (Z_n - n(1-u)) / (n f(eta)) along prefixes of one i.i.d.
// stream, where Z_n counts observations above eta = F^-(u).
[[nodiscard]] BahadurReport bahadur_remainder(const std::vector<double>& sample_seq, double u,
                                              const UnivariateLaw& law,
                                              std::size_t min_exp = 10, std::size_t max_exp = 20);
// Draws 2^max_exp inverse-transform samples from law with the given seed.
[[nodiscard]] std::vector<double> iid_sample(const UnivariateLaw& law, std::size_t n,
                                             std::uint64_t seed);

struct KsResult {
    double statistic = 0.0;
    double critical_1 = 0.0;  // asymptotic critical values at 1% and 5%
    double critical_5 = 0.0;
    bool pass_1 = false;
    bool pass_5 = false;
};

// c(alpha) = sqrt(-ln(alpha/2)/2).
[[nodiscard]] double ks_c(double alpha);
[[nodiscard]] KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
[[nodiscard]] KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);

}  // namespace qdiff
