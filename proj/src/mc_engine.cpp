#include "qdiff/mc_engine.hpp"

#include <charconv>
#include <numeric>

#include "qdiff/special.hpp"

namespace qdiff {

TimeGrid TimeGrid::with_dt(double t0, double T, double dt) {
    if (!(dt > 0.0)) throw DomainError("TimeGrid: dt must be positive");
    const double n = std::round((T - t0) / dt);
    if (!(n >= 1.0)) throw DomainError("TimeGrid: need T > t0");
    return {t0, T, static_cast<std::size_t>(n)};
}

void TimeGrid::validate() const {
    if (!(t0 > 0.0)) throw DomainError("TimeGrid: t0 must be positive");
    if (!(T > t0)) throw DomainError("TimeGrid: T must exceed t0");
    if (steps == 0) throw DomainError("TimeGrid: steps must be positive");
}

std::string to_string(PathLabel l) {
    switch (l) {
        case PathLabel::Transform: return "transform";
        case PathLabel::Sde: return "sde";
        case PathLabel::Driver: return "driver";
    }
    return "?";
}

std::size_t PathBatch::time_index(double t) const {
    for (std::size_t j = 0; j < times.size(); ++j)
        if (std::fabs(times[j] - t) <= 1e-9 * std::max(1.0, std::fabs(t))) return j;
    throw DomainError("PathBatch: time " + std::to_string(t) + " was not recorded");
}

std::vector<double> PathBatch::column(std::size_t j) const {
    std::vector<double> out(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) out[p] = at(p, j);
    return out;
}

void write_csv(const PathBatch& batch, std::ostream& os) {
    os << "t,path_id,value\n";
    char buf[64];
    const auto put = [&](double v) {
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        os.write(buf, r.ptr - buf);
    };
    for (std::size_t j = 0; j < batch.times.size(); ++j) {
        for (std::size_t p = 0; p < batch.n_paths; ++p) {
            put(batch.times[j]);
            os << ',' << p << ',';
            put(batch.at(p, j));
            os << '\n';
        }
    }
}

namespace detail {

std::vector<std::ptrdiff_t> record_slots(const TimeGrid& grid, const std::vector<double>& wanted,
                                         std::vector<double>& times) {
    std::vector<std::ptrdiff_t> slots(grid.steps + 1, -1);
    std::vector<std::size_t> idx;
    if (wanted.empty()) {
        idx.resize(grid.steps + 1);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    } else {
        for (double t : wanted) {
            if (t < grid.t0 - 1e-12 || t > grid.T + 1e-12)
                throw DomainError("record time outside the grid");
            idx.push_back(static_cast<std::size_t>(std::llround((t - grid.t0) / grid.dt())));
        }
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    }
    times.clear();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        slots[idx[i]] = static_cast<std::ptrdiff_t>(i);
        times.push_back(idx[i] == grid.steps ? grid.T : grid.time(idx[i]));
    }
    return slots;
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    nt = static_cast<unsigned>(std::min<std::size_t>(nt, n));
    if (nt <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex mu;
    const std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned w = 0; w < nt; ++w) {
        const std::size_t b = w * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            try {
                body(b, e);
            } catch (...) {
                std::lock_guard lk(mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace detail

PathBatch simulate_driver_paths(const DiffusionSpec& spec, const TimeGrid& grid, std::size_t n_paths,
                                std::uint64_t seed, const SimOptions& opt) {
    grid.validate();
    if (!spec.has_exact_law()) throw DomainError("simulate_driver_paths: driver needs exact transitions");
    if (n_paths == 0) throw DomainError("simulate_driver_paths: need at least one path");
    PathBatch b;
    b.grid = grid;
    b.seed = seed;
    b.label = PathLabel::Driver;
    b.n_paths = n_paths;
    detail::record_slots(grid, opt.record_times, b.times);
    const std::size_t nt = b.times.size();
    b.values.assign(n_paths * nt, 0.0);
    detail::parallel_for(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxEngine eng(seed, p);
            NormalDist nd;
            double s = 0.0, y = spec.y0;
            for (std::size_t j = 0; j < nt; ++j) {
                y = sample_transition(spec, s, y, b.times[j], nd(eng));
                s = b.times[j];
                b.values[p * nt + j] = y;
            }
        }
    });
    return b;
}

PathBatch simulate_transform_paths(const CompositeMap& map, const TimeGrid& grid, std::size_t n_paths,
                                   std::uint64_t seed, const SimOptions& opt) {
    map.validate();
    PathBatch b = simulate_driver_paths(map.driver, grid, n_paths, seed, opt);
    b.label = PathLabel::Transform;
    const std::size_t nt = b.times.size();
    detail::parallel_for(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p)
            for (std::size_t j = 0; j < nt; ++j)
                b.values[p * nt + j] = random_level_value(map, b.times[j], b.values[p * nt + j]);
    });
    return b;
}

double exact_start(const CompositeMap& map, double t0, PhiloxEngine& eng) {
    NormalDist nd;
    const double y = sample_transition(map.driver, 0.0, map.driver.y0, t0, nd(eng));
    return random_level_value(map, t0, y);
}

namespace {

// x solving z = x exp(h x^2 / 2), Newton from a nearby guess.
double h_inverse_from(double z, double h, double guess) {
    double x = guess;
    for (int it = 0; it < 30; ++it) {
        const double E = std::exp(0.5 * h * x * x);
        const double dx = (x * E - z) / (E * (1.0 + h * x * x));
        x -= dx;
        if (std::fabs(dx) <= 1e-14 * (1.0 + std::fabs(x))) return x;
    }
    return tukey_x_of_z(TukeyFamily::H, z, {0.0, 1.0, 0.0, h});
}

}  // namespace

PathBatch simulate_unified_paths(const CompositeMap& map, const UnifiedSde& sde, const TimeGrid& grid,
                                 std::size_t n_paths, std::uint64_t seed, const SimOptions& opt) {
    map.validate();
    grid.validate();
    if (n_paths == 0) throw DomainError("simulate_unified_paths: need at least one path");
    const bool is_g = sde.family == TukeyFamily::G;
    if (!is_g && sde.family != TukeyFamily::H)
        throw DomainError("simulate_unified_paths: family must be g or h");
    if (is_g && std::fabs(sde.param) < kSmallG) throw DomainError("simulate_unified_paths: g must be nonzero");
    if (!is_g && sde.param < 0.0) throw DomainError("simulate_unified_paths: h must be nonnegative");
    if (!sde.variance) throw DomainError("simulate_unified_paths: missing variance function");

    PathBatch b;
    b.grid = grid;
    b.seed = seed;
    b.label = PathLabel::Sde;
    b.n_paths = n_paths;
    const auto slots = detail::record_slots(grid, opt.record_times, b.times);
    const std::size_t nt = b.times.size();
    b.values.assign(n_paths * nt, 0.0);
    const double dt = grid.dt(), sq = std::sqrt(dt);
    std::vector<double> drift_k(grid.steps), vol_k(grid.steps);
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double v = sde.variance(grid.time(k));
        if (!(v > 0.0)) throw DomainError("simulate_unified_paths: variance must be positive");
        drift_k[k] = sde.sigma * sde.sigma / (2.0 * v);
        vol_k[k] = std::fabs(sde.sigma) / std::sqrt(v);
    }
    StateBounds bounds = opt.bounds;
    if (!std::isfinite(bounds.lo) && !std::isfinite(bounds.hi)) bounds = state_bounds(map);
    const double p = sde.param, t0 = grid.t0;

    detail::parallel_for(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t path = begin; path < end; ++path) {
            PhiloxEngine eng(seed, path);
            NormalDist nd;
            double* row = b.values.data() + path * nt;
            double z = bounds.clip(exact_start(map, t0, eng));
            double x = is_g ? 0.0 : tukey_x_of_z(TukeyFamily::H, z, {0.0, 1.0, 0.0, p});
            if (slots[0] >= 0) row[slots[0]] = z;
            for (std::size_t k = 0; k < grid.steps; ++k) {
                double alpha, vol;
                if (is_g) {
                    const double w = p * z + 1.0;
                    alpha = drift_k[k] * (p - std::log1p(p * z) / p) * w;
                    vol = vol_k[k] * w;
                } else {
                    x = h_inverse_from(z, p, x);
                    const double x2 = x * x, E = std::exp(0.5 * p * x2);
                    alpha = drift_k[k] * x * E * (3.0 * p - 1.0 + p * (p - 1.0) * x2);
                    vol = vol_k[k] * (1.0 + p * x2) * E;
                }
                z += alpha * dt + vol * sq * nd(eng);
                z = bounds.clip(z);
                if (!(std::fabs(z) <= kBlowUp))
                    throw BlowUpError("simulate_unified_paths: |Z| exceeded 1e12 on path " + std::to_string(path));
                if (slots[k + 1] >= 0) row[slots[k + 1]] = z;
            }
        }
    });
    return b;
}

PathBatch simulate_sde_paths(const CompositeMap& map, const TimeGrid& grid, std::size_t n_paths,
                             std::uint64_t seed, const SimOptions& opt) {
    map.validate();
    SimOptions o = opt;
    if (!std::isfinite(o.bounds.lo) && !std::isfinite(o.bounds.hi)) o.bounds = state_bounds(map);
    const double t0 = grid.t0;
    return euler_maruyama(
        [&map](double t, double z) { return sde_coefficients_general(map, t, z); },
        [&map, t0](std::size_t, PhiloxEngine& eng) { return exact_start(map, t0, eng); }, grid,
        n_paths, seed, o);
}

LawPtr empirical_marginal_law(const DiffusionSpec& spec, double t, std::size_t n_paths,
                              std::uint64_t seed, std::size_t steps) {
    spec.validate();
    if (!(t > 0.0)) throw DomainError("empirical_marginal_law: t must be positive");
    std::vector<double> ys(n_paths);
    const double dt = t / static_cast<double>(steps), sq = std::sqrt(dt);
    detail::parallel_for(n_paths, 0, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxEngine eng(seed, p);
            NormalDist nd;
            double y = spec.y0;
            for (std::size_t k = 0; k < steps; ++k) {
                const double s = static_cast<double>(k) * dt;
                y += spec.drift(s, y) * dt + spec.vol(s, y) * sq * nd(eng);
            }
            ys[p] = y;
        }
    });
    return std::make_shared<KdeLaw>(std::move(ys));
}

double empirical_quantile_process_sorted(const std::vector<double>& sorted,
                                         const std::function<double(double)>& true_quantile, double u) {
    if (sorted.empty()) throw DomainError("empirical_quantile_process: empty sample");
    if (!(u > 0.0 && u < 1.0)) throw DomainError("empirical_quantile_process: u outside (0,1)");
    const double n = static_cast<double>(sorted.size());
    auto k = static_cast<std::size_t>(std::ceil(n * u));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    return std::sqrt(n) * (sorted[k - 1] - true_quantile(u));
}

double empirical_quantile_process(std::vector<double> sample,
                                  const std::function<double(double)>& true_quantile, double u) {
    std::sort(sample.begin(), sample.end());
    return empirical_quantile_process_sorted(sample, true_quantile, u);
}

std::vector<double> iid_sample(const UnivariateLaw& law, std::size_t n, std::uint64_t seed) {
    PhiloxEngine eng(seed, 0);
    std::vector<double> out(n);
    for (auto& x : out) x = law.quantile(eng.uniform());
    return out;
}

BahadurReport bahadur_remainder(const std::vector<double>& seq, double u, const UnivariateLaw& law,
                                std::size_t min_exp, std::size_t max_exp) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("bahadur_remainder: u outside (0,1)");
    if (min_exp > max_exp) throw DomainError("bahadur_remainder: empty exponent range");
    if (seq.size() < (std::size_t{1} << max_exp)) throw DomainError("bahadur_remainder: sample too short");
    const double eta = law.quantile(u);
    const double f = law.density(eta);
    if (!(f > 0.0)) throw DomainError("bahadur_remainder: density vanishes at the quantile");
    BahadurReport rep;
    rep.u = u;
    std::vector<double> buf;
    std::size_t above = 0, counted = 0;
    for (std::size_t e = min_exp; e <= max_exp; ++e) {
        const std::size_t n = std::size_t{1} << e;
        for (; counted < n; ++counted)
            if (seq[counted] > eta) ++above;
        buf.assign(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(n));
        auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * u));
        k = std::clamp<std::size_t>(k, 1, n);
        std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k - 1), buf.end());
        const double Y = buf[k - 1];
        const double nd = static_cast<double>(n);
        rep.n.push_back(n);
        rep.remainder.push_back(Y - eta - (static_cast<double>(above) - nd * (1.0 - u)) / (nd * f));
    }
    if (rep.n.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(rep.n.size());
        for (std::size_t i = 0; i < rep.n.size(); ++i) {
            const double x = std::log(static_cast<double>(rep.n[i]));
            const double y = std::log(std::max(std::fabs(rep.remainder[i]), 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return rep;
}

double ks_c(double alpha) { return std::sqrt(-0.5 * std::log(alpha / 2.0)); }

namespace {

KsResult verdict(double d, double scale) {
    KsResult r;
    r.statistic = d;
    r.critical_1 = ks_c(0.01) * scale;
    r.critical_5 = ks_c(0.05) * scale;
    r.pass_1 = d < r.critical_1;
    r.pass_5 = d < r.critical_5;
    return r;
}

}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return verdict(d, std::sqrt((n + m) / (n * m)));
}

KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
    if (a.empty()) throw DomainError("ks_one_sample: empty sample");
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double F = cdf(a[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return verdict(d, 1.0 / std::sqrt(n));
}

}  // namespace qdiff
