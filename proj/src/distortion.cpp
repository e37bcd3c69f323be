#include "qdiff/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "qdiff/errors.hpp"
#include "qdiff/mc_engine.hpp"
#include "qdiff/quadrature.hpp"
#include "qdiff/rng.hpp"
#include "qdiff/special.hpp"

namespace qdiff {

namespace {

void check_unit(double u, const char* who) {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError(std::string(who) + ": argument outside [0,1]");
}

}  // namespace

void DiscreteLaw::validate() const {
    if (values.empty() || values.size() != probs.size())
        throw DomainError("DiscreteLaw: values and probs must be non-empty and of equal length");
    double total = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (!(values[j] > 0.0) || !std::isfinite(values[j]))
            throw DomainError("DiscreteLaw: support must be positive and finite");
        if (!(probs[j] >= 0.0)) throw DomainError("DiscreteLaw: negative probability");
        total += probs[j];
    }
    if (std::fabs(total - 1.0) > 1e-12) throw DomainError("DiscreteLaw: probabilities must sum to 1");
}

double wang1(double u, double lambda) {
    check_unit(u, "wang1");
    if (u == 0.0 || u == 1.0) return u;
    return norm_cdf(norm_quantile(u) + lambda);
}

double wang2(double u, double lambda, double k) {
    check_unit(u, "wang2");
    if (!(k >= 1.0)) throw DomainError("wang2: degrees of freedom must be >= 1");
    if (u == 0.0 || u == 1.0) return u;
    return student_t_cdf(norm_quantile(u) + lambda, k);
}

double wang_gen_G_inverse(double u, const DiscreteLaw& V) {
    check_unit(u, "wang_gen");
    if (u == 0.0) return -kInf;
    if (u == 1.0) return kInf;
    const auto G = [&](double x) {
        double s = 0.0;
        for (std::size_t j = 0; j < V.values.size(); ++j) s += V.probs[j] * norm_cdf(x * V.values[j]);
        return s;
    };
    const auto g = [&](double x) {
        double s = 0.0;
        for (std::size_t j = 0; j < V.values.size(); ++j)
            s += V.probs[j] * V.values[j] * norm_pdf(x * V.values[j]);
        return s;
    };
    double vbar = 0.0;
    for (std::size_t j = 0; j < V.values.size(); ++j) vbar += V.probs[j] * V.values[j];
    double x = norm_quantile(u) / vbar;

    // Bracket, then safeguarded Newton.
    double lo = x, hi = x;
    double step = 1.0;
    while (G(lo) > u) lo -= (step *= 2.0);
    step = 1.0;
    while (G(hi) < u) hi += (step *= 2.0);
    for (int it = 0; it < 200; ++it) {
        const double r = G(x) - u;
        if (r == 0.0) return x;
        if (r > 0.0) hi = x; else lo = x;
        const double d = g(x);
        double nx = d > 0.0 ? x - r / d : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        if (std::fabs(nx - x) <= 1e-15 * std::max(1.0, std::fabs(x))) return nx;
        x = nx;
    }
    throw ConvergenceError("wang_gen: inversion of the mixture CDF did not converge");
}

double wang_gen(double u, double lambda, const DiscreteLaw& V) {
    V.validate();
    check_unit(u, "wang_gen");
    if (u == 0.0 || u == 1.0) return u;
    const double x = wang_gen_G_inverse(u, V);
    double s = 0.0;
    for (std::size_t j = 0; j < V.values.size(); ++j) s += V.probs[j] * norm_cdf(x * V.values[j] + lambda);
    return s;
}

double ph_transform(double s, double r) {
    if (!(r > 0.0)) throw DomainError("ph_transform: index r must be positive");
    check_unit(s, "ph_transform");
    if (s == 0.0 || s == 1.0) return s;
    return std::pow(s, r);
}

namespace {

// log of e^{lambda y} f(y); -inf where the density vanishes.
double log_tilted(const UnivariateLaw& law, double lambda, double y) {
    const double f = law.density(y);
    if (!(f > 0.0)) return -kInf;
    return lambda * y + std::log(f);
}

// Probes the tilted density along y = q 2^k in the direction of the tilt.
void esscher_divergence_probe(const UnivariateLaw& law, double lambda) {
    const Interval sup = law.support();
    const double dir = lambda > 0.0 ? 1.0 : -1.0;
    if ((dir > 0.0 && std::isfinite(sup.hi)) || (dir < 0.0 && std::isfinite(sup.lo))) return;
    const double q = std::max(1.0, std::fabs(law.quantile(dir > 0.0 ? 0.999 : 0.001)));
    double prev = -kInf;
    bool rising = false;
    for (int k = 1; k <= 24; ++k) {
        const double v = log_tilted(law, lambda, dir * q * std::ldexp(1.0, k));
        if (std::isnan(v)) break;
        rising = v > prev && std::isfinite(v);
        if (v == -kInf) return;
        prev = v;
    }
    if (rising) {
        std::ostringstream os;
        os << "esscher_cdf: exponential moment of " << law.name() << " diverges for lambda=" << lambda;
        throw DivergenceError(os.str());
    }
}

}  // namespace

double esscher_cdf(double x, const UnivariateLaw& law, double lambda) {
    if (lambda == 0.0) return law.cdf(x);
    esscher_divergence_probe(law, lambda);
    const Interval sup = law.support();
    if (x <= sup.lo) return 0.0;
    if (x >= sup.hi) return 1.0;
    // Centre the exponent at the median to keep the integrand in range.
    const double c = law.quantile(0.5);
    const auto w = [&](double y) {
        const double v = log_tilted(law, lambda, y) - lambda * c;
        return v == -kInf ? 0.0 : std::exp(v);
    };
    const double left = integrate_pieces(w, sup.lo, x, {c}, 1e-11).value;
    const double right = integrate_pieces(w, x, sup.hi, {c}, 1e-11).value;
    const double total = left + right;
    if (!(total > 0.0) || !std::isfinite(total))
        throw DivergenceError("esscher_cdf: normalizing integral not finite");
    return left / total;
}

double godin_distortion(double u, const UnivariateLaw& P, const UnivariateLaw& Q) {
    check_unit(u, "godin_distortion");
    if (u == 0.0 || u == 1.0) return u;
    return 1.0 - Q.cdf(P.quantile(1.0 - u));
}

std::string to_string(DistortionKind k) {
    switch (k) {
        case DistortionKind::Wang1: return "wang1";
        case DistortionKind::Wang2: return "wang2";
        case DistortionKind::WangGen: return "wang_gen";
        case DistortionKind::PH: return "ph";
        case DistortionKind::Esscher: return "esscher";
        case DistortionKind::Godin: return "godin";
        case DistortionKind::QuantileInduced: return "quantile_induced";
    }
    return "unknown";
}

DistortionOperator make_wang1(double lambda) {
    return {DistortionKind::Wang1, "wang1(" + std::to_string(lambda) + ")",
            [lambda](double u) { return wang1(u, lambda); }};
}

DistortionOperator make_wang2(double lambda, double k) {
    if (!(k >= 1.0)) throw DomainError("wang2: degrees of freedom must be >= 1");
    return {DistortionKind::Wang2, "wang2", [lambda, k](double u) { return wang2(u, lambda, k); }};
}

DistortionOperator make_wang_gen(double lambda, DiscreteLaw V) {
    V.validate();
    return {DistortionKind::WangGen, "wang_gen",
            [lambda, V = std::move(V)](double u) { return wang_gen(u, lambda, V); }};
}

DistortionOperator make_ph(double r) {
    if (!(r > 0.0)) throw DomainError("ph_transform: index r must be positive");
    return {DistortionKind::PH, "ph", [r](double u) { return ph_transform(u, r); }};
}

DistortionOperator make_esscher(LawPtr law, double lambda) {
    esscher_divergence_probe(*law, lambda);
    return {DistortionKind::Esscher, "esscher", [law, lambda](double u) {
                check_unit(u, "esscher");
                if (u == 0.0 || u == 1.0) return u;
                return esscher_cdf(law->quantile(u), *law, lambda);
            }};
}

DistortionOperator make_godin(LawPtr P, LawPtr Q) {
    return {DistortionKind::Godin, "godin",
            [P, Q](double u) { return godin_distortion(u, *P, *Q); }};
}

DistortionOperator make_quantile_induced(const CompositeMap& map, double t) {
    map.validate();
    if (!(t >= map.t0)) throw DomainError("quantile-induced distortion: t below t0");
    return {DistortionKind::QuantileInduced, "quantile_induced", [map, t](double u) {
                check_unit(u, "quantile_induced");
                if (u == 0.0 || u == 1.0) return u;
                const double y = map.driver_law->quantile(t, u);
                return induced_marginal_cdf(map, t, y);
            }};
}

MonotoneReport check_distortion(const std::function<double(double)>& nu, std::size_t n, double tol) {
    MonotoneReport r;
    r.zero_at_zero = std::fabs(nu(0.0)) <= tol;
    r.one_at_one = std::fabs(nu(1.0) - 1.0) <= tol;
    r.nondecreasing = true;
    double prev = nu(0.0);
    for (std::size_t i = 1; i <= n + 1; ++i) {
        const double v = nu(static_cast<double>(i) / static_cast<double>(n + 1));
        if (!std::isfinite(v) || v < prev - tol || v < -tol || v > 1.0 + tol) r.nondecreasing = false;
        prev = v;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Quantile-induced measure

double induced_marginal_cdf(const CompositeMap& map, double t, double y) {
    const Interval sup = map.target->support(t);
    if (y <= sup.lo) return 0.0;
    if (y >= sup.hi) return 1.0;
    const double ys = driver_state(map, t, y);
    if (ys == -kInf) return 0.0;
    if (ys == kInf) return 1.0;
    return map.driver_law->cdf(t, ys);
}

namespace {

void check_equivalent_supports(const CompositeMap& map, double t) {
    const Interval a = map.target->support(t);
    const Interval b = map.driver_law->support(t);
    if (a.lo != b.lo || a.hi != b.hi) {
        std::ostringstream os;
        os << "quantile_induced_cdf: target support (" << a.lo << ", " << a.hi
           << ") differs from driver support (" << b.lo << ", " << b.hi
           << "); the induced measure is not equivalent";
        throw DomainError(os.str());
    }
}

bool is_bm_tukey_true_law(const CompositeMap& map) {
    return map.tag == LawTag::TrueLaw && map.driver.kind == DriverKind::BmDrift &&
           tukey_target_info(map).has_value();
}

}  // namespace

double quantile_induced_cdf(const CompositeMap& map, double t, double y) {
    check_equivalent_supports(map, t);
    return induced_marginal_cdf(map, t, y);
}

double conditional_induced_cdf_generic(const CompositeMap& map, double s, double y_s, double t,
                                       double y) {
    if (!(s < t)) throw DomainError("conditional induced law: need s < t");
    const Interval sup = map.target->support(t);
    if (y <= sup.lo) return 0.0;
    if (y >= sup.hi) return 1.0;
    const double ys = driver_state(map, s, y_s);
    const double yt = driver_state(map, t, y);
    if (yt == -kInf) return 0.0;
    if (yt == kInf) return 1.0;
    return transition_law(map.driver, s, ys, t)->cdf(yt);
}

double bm_tukey_conditional_cdf(const CompositeMap& map, double s, double y_s, double t, double y) {
    if (!(s < t)) throw DomainError("bm_tukey_conditional_cdf: need s < t");
    if (!is_bm_tukey_true_law(map))
        throw DomainError("bm_tukey_conditional_cdf: needs a true-law drifted BM with a Tukey target");
    const Interval sup = map.target->support(t);
    if (y <= sup.lo) return 0.0;
    if (y >= sup.hi) return 1.0;
    const double xt = map.target->score(t, y);
    const double xs = map.target->score(s, y_s);
    return norm_cdf((std::sqrt(t) * xt - std::sqrt(s) * xs) / std::sqrt(t - s));
}

double quantile_induced_cdf(const CompositeMap& map, double s, double y_s, double t, double y) {
    check_equivalent_supports(map, t);
    if (is_bm_tukey_true_law(map)) return bm_tukey_conditional_cdf(map, s, y_s, t, y);
    return conditional_induced_cdf_generic(map, s, y_s, t, y);
}

double base_transition_density(const CompositeMap& map, double s, double y_s, double t, double y) {
    if (!(s < t)) throw DomainError("transition density: need s < t");
    return transition_law(map.driver, s, y_s, t)->density(y);
}

double induced_transition_density(const CompositeMap& map, double s, double y_s, double t, double y) {
    if (!(s < t)) throw DomainError("transition density: need s < t");
    const Interval sup = map.target->support(t);
    if (!(y > sup.lo && y < sup.hi)) return 0.0;
    const double ys = driver_state(map, s, y_s);
    const double yt = driver_state(map, t, y);
    if (!std::isfinite(yt)) return 0.0;
    const double f = map.law->density(t, yt);
    const double ftr = transition_law(map.driver, s, ys, t)->density(yt);
    const double fz = map.target->density(t, y);
    if (!(f > 0.0)) return 0.0;  // lost to rounding in the far tail
    const double v = ftr * fz / f;
    return std::isfinite(v) ? v : 0.0;
}

double base_transition_log_density(const CompositeMap& map, double s, double y_s, double t, double y) {
    if (!(s < t)) throw DomainError("transition density: need s < t");
    return transition_law(map.driver, s, y_s, t)->log_density(y);
}

double log_likelihood_ratio(const CompositeMap& map, double s, double y_s, double t, double y) {
    const double fz = induced_transition_density(map, s, y_s, t, y);
    if (fz == 0.0) return -kInf;
    const double lp = base_transition_log_density(map, s, y_s, t, y);
    if (lp == -kInf || std::isnan(lp)) return kInf;
    return std::log(fz) - lp;
}

double likelihood_ratio(const CompositeMap& map, double s, double y_s, double t, double y) {
    return std::exp(log_likelihood_ratio(map, s, y_s, t, y));
}

DistortedExpectation distorted_expectation(const CompositeMap& map, double s, double y_s, double t,
                                           const std::function<double(double)>& payoff,
                                           std::size_t mc_paths, std::uint64_t seed,
                                           std::vector<double> breakpoints) {
    if (!(s < t)) throw DomainError("distorted_expectation: need s < t");
    if (mc_paths < 2) throw DomainError("distorted_expectation: need at least two MC paths");
    const double ys = driver_state(map, s, y_s);
    const LawPtr trans = transition_law(map.driver, s, ys, t);

    // Quadrature against the induced transition density, split at the images
    // of a few driver quantiles so the bulk is resolved.
    for (double u : {0.001, 0.1, 0.5, 0.9, 0.999}) {
        const double z = random_level_value(map, t, trans->quantile(u));
        if (std::isfinite(z)) breakpoints.push_back(z);
    }
    const Interval sup = map.target->support(t);
    const auto integrand = [&](double y) {
        const double d = induced_transition_density(map, s, y_s, t, y);
        return d == 0.0 ? 0.0 : payoff(y) * d;
    };
    DistortedExpectation r;
    const QuadResult q = integrate_pieces(integrand, sup.lo, sup.hi, breakpoints, 1e-10);
    if (!std::isfinite(q.value))
        throw DivergenceError("distorted_expectation: payoff not integrable under the induced law");
    r.quadrature = q.value;

    // Monte Carlo over exact driver transitions; one stream per path.
    std::vector<double> vals(mc_paths);
    detail::parallel_for(mc_paths, 0, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            PhiloxEngine eng(seed, p);
            NormalDist nd;
            const double y = sample_transition(map.driver, s, ys, t, nd(eng));
            vals[p] = payoff(random_level_value(map, t, y));
        }
    });
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(mc_paths);
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    if (!std::isfinite(mean) || !std::isfinite(ss))
        throw DivergenceError("distorted_expectation: payoff not integrable along MC paths");
    r.mc_mean = mean;
    r.mc_stderr = std::sqrt(ss / static_cast<double>(mc_paths - 1) / static_cast<double>(mc_paths));
    const double gap = std::fabs(r.quadrature - r.mc_mean);
    r.agree = r.mc_stderr > 0.0 ? gap <= 3.0 * r.mc_stderr : gap <= 1e-9 * std::max(1.0, std::fabs(r.quadrature));
    return r;
}

// ---------------------------------------------------------------------------
// Layer pricing

double shifted_g_cdf(double y, double B, double g, double gamma, double t,
                     const UnivariateLaw& driver_law) {
    if (!(B > 0.0) || !(g > 0.0)) throw DomainError("shifted_g_cdf: B and g must be positive");
    if (!(y > 0.0)) return 0.0;
    return driver_law.cdf((std::log(g * y / B) - g * gamma * t) / g);
}

void LayerSchedule::validate() const {
    if (layers.empty()) throw DomainError("LayerSchedule: no layers");
    double prev_hi = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (!(l.lo >= 0.0) || !(l.lo < l.hi))
            throw DomainError("LayerSchedule: layer " + std::to_string(i) + " needs 0 <= lo < hi");
        if (l.lo < prev_hi)
            throw DomainError("LayerSchedule: layer " + std::to_string(i) + " overlaps its predecessor");
        prev_hi = l.hi;
    }
    if (!(display_unit > 0.0)) throw DomainError("LayerSchedule: display unit must be positive");
}

LayerSchedule LayerSchedule::reinsurance_default() {
    LayerSchedule s;
    const double k = 1000.0;
    const double edges[] = {0, 50, 100, 200, 300, 400, 500, 1000, 2000, 5000, 10000};
    for (std::size_t i = 0; i + 1 < std::size(edges); ++i) s.layers.push_back({edges[i] * k, edges[i + 1] * k});
    return s;
}

double layer_premium(const std::function<double(double)>& distorted_survival, double a, double b,
                     const std::vector<double>& breakpoints) {
    if (a == b) return 0.0;
    if (!(a < b)) throw DomainError("layer_premium: need a <= b");
    return integrate_pieces(distorted_survival, a, b, breakpoints, 1e-10).value;
}

std::function<double(double)> distorted_survival(const PricingOperator& op, LawPtr risk,
                                                 double driver_unit) {
    const auto S = [risk](double y) { return std::clamp(1.0 - risk->cdf(y), 0.0, 1.0); };
    if (op.name == "identity") return S;
    if (op.name == "ph") {
        if (!(op.r > 0.0)) throw DomainError("ph operator: r must be positive");
        return [S, r = op.r](double y) { return ph_transform(S(y), r); };
    }
    if (op.name == "wang") return [S, l = op.lambda](double y) { return wang1(S(y), l); };
    if (op.name == "tukey_g") {
        if (!(driver_unit > 0.0)) throw DomainError("tukey_g operator: driver unit must be positive");
        auto law = std::make_shared<ScaledLaw>(risk, 1.0 / driver_unit);
        return [law, op](double y) {
            return 1.0 - shifted_g_cdf(y, op.B, op.g, op.gamma, op.T, *law);
        };
    }
    throw DomainError("unknown pricing operator '" + op.name + "'");
}

std::vector<double> survival_breakpoints(const PricingOperator& op, double) {
    // Image of Y_T = 0, where the shifted-g survival leaves 1.
    if (op.name == "tukey_g") return {op.B * std::exp(op.g * op.gamma * op.T) / op.g};
    return {};
}

std::vector<PriceRow> price_table(LawPtr risk, const LayerSchedule& schedule,
                                  const std::vector<PricingOperator>& ops, double driver_unit) {
    schedule.validate();
    if (ops.empty()) throw DomainError("price_table: no operators");
    std::vector<std::function<double(double)>> surv;
    std::vector<std::vector<double>> bps;
    for (const auto& op : ops) {
        surv.push_back(distorted_survival(op, risk, driver_unit));
        bps.push_back(survival_breakpoints(op, driver_unit));
    }
    const std::size_t nl = schedule.layers.size(), no = ops.size();
    std::vector<PriceRow> rows(nl * no);
    detail::parallel_for(nl * no, 0, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
            const std::size_t i = c / no, j = c % no;
            const Layer& l = schedule.layers[i];
            rows[c] = {l, ops[j].name, layer_premium(surv[j], l.lo, l.hi, bps[j])};
        }
    });
    return rows;
}

CalibrationResult calibrate_gamma(double target, const Layer& layer, double g, double B, double T,
                                  LawPtr risk, double driver_unit, double lo, double hi) {
    if (!(target > 0.0)) throw CalibrationError("calibrate_gamma: target premium must be positive");
    if (!(lo < hi)) throw CalibrationError("calibrate_gamma: empty initial bracket");
    PricingOperator op{"tukey_g", 1.0, 0.0, g, B, 0.0, T};
    const auto premium = [&](double gamma) {
        op.gamma = gamma;
        return layer_premium(distorted_survival(op, risk, driver_unit), layer.lo, layer.hi,
                             survival_breakpoints(op, driver_unit));
    };
    // The premium increases with gamma; widen until the target is bracketed.
    double flo = premium(lo) - target, fhi = premium(hi) - target;
    for (int k = 0; k < 30 && flo * fhi > 0.0; ++k) {
        const double w = hi - lo;
        if (flo > 0.0) { hi = lo; fhi = flo; lo -= w; flo = premium(lo) - target; }
        else { lo = hi; flo = fhi; hi += w; fhi = premium(hi) - target; }
    }
    if (flo * fhi > 0.0) {
        std::ostringstream os;
        os << "calibrate_gamma: target " << target << " not bracketed; premium(" << lo
           << ") - target = " << flo << ", premium(" << hi << ") - target = " << fhi;
        throw CalibrationError(os.str());
    }
    CalibrationResult r;
    std::uintmax_t iters = 200;
    const auto tol = [](double a, double b) {
        return std::fabs(a - b) <= 1e-10 * std::max(1.0, std::fabs(a) + std::fabs(b));
    };
    const auto [a, b] = boost::math::tools::toms748_solve([&](double x) { return premium(x) - target; },
                                                          lo, hi, flo, fhi, tol, iters);
    if (iters >= 200) {
        std::ostringstream os;
        os << "calibrate_gamma: no convergence within 200 iterations in [" << a << ", " << b << "]";
        throw CalibrationError(os.str());
    }
    r.gamma = 0.5 * (a + b);
    r.premium = premium(r.gamma);
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    r.iterations = static_cast<std::size_t>(iters);
    return r;
}

}  // namespace qdiff
