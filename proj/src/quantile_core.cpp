#include "qdiff/quantile_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <boost/math/tools/roots.hpp>

#include "qdiff/errors.hpp"
#include "qdiff/special.hpp"

namespace qdiff {

namespace {

// Order-preserving map from doubles to unsigned keys.
std::uint64_t order_key(double x) {
    const auto b = std::bit_cast<std::uint64_t>(x);
    return (b & 0x8000000000000000ULL) ? ~b : (b | 0x8000000000000000ULL);
}

double from_order_key(std::uint64_t k) {
    const std::uint64_t b = (k & 0x8000000000000000ULL) ? (k & ~0x8000000000000000ULL) : ~k;
    return std::bit_cast<double>(b);
}

void check_unit(double u, const char* who) {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError(std::string(who) + ": u outside [0,1]");
}

TukeyParams canonical(TukeyFamily f, TukeyParams p) {
    if (f == TukeyFamily::G) p.h = 0.0;
    if (f == TukeyFamily::H) p.g = 0.0;
    p.validate();
    return p;
}

struct Kernel {
    double k, kd, kdd;
};

Kernel g_kernel(double x, double g) {
    if (std::fabs(g) < kSmallG) return {x, 1.0, 0.0};
    const double eg = std::exp(g * x);
    return {std::expm1(g * x) / g, eg, g * eg};
}

// Solves W + log W = L for the principal branch, used when exp(L) overflows.
double lambert_w0_from_log(double L) {
    double w = L - std::log(L);
    for (int i = 0; i < 50; ++i) {
        const double step = (w + std::log(w) - L) / (1.0 + 1.0 / w);
        w -= step;
        if (std::fabs(step) <= 1e-15 * w) break;
    }
    return w;
}

double g_x(double z, const TukeyParams& p) {
    const double w = (z - p.A) / p.B;
    if (std::fabs(p.g) < kSmallG) return w;
    const double a = p.g * w;
    if (a <= -1.0) return p.g > 0 ? -kInf : kInf;
    return std::log1p(a) / p.g;
}

double h_x(double z, const TukeyParams& p) {
    const double w = (z - p.A) / p.B;
    if (p.h == 0.0 || !std::isfinite(w) || w == 0.0) return w;
    const double y = p.h * w * w;
    if (std::isfinite(y)) return w * std::exp(-0.5 * lambert_w0(y));
    const double L = std::log(p.h) + 2.0 * std::log(std::fabs(w));
    return std::copysign(std::sqrt(lambert_w0_from_log(L) / p.h), w);
}

constexpr double kBracket = 40.0;

// Safeguarded Newton on T(x) = z inside |x| <= 40. Returns +-inf with
// bracketed = false when z lies beyond T(+-40).
double gh_x(double z, const TukeyParams& p, bool& bracketed) {
    bracketed = true;
    double lo = -kBracket, hi = kBracket;
    if (z < tukey_transform_value(lo, p)) {
        bracketed = false;
        return -kInf;
    }
    if (z > tukey_transform_value(hi, p)) {
        bracketed = false;
        return kInf;
    }
    double x = std::clamp(h_x(z, p), lo, hi);
    for (int it = 0; it < 400; ++it) {
        const TukeyTransform tt = tukey_transform(x, p);
        const double f = tt.value - z;
        if (f == 0.0) return x;
        if (f < 0.0) lo = x;
        else hi = x;
        double xn = x - f / tt.d1;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::fabs(xn - x) <= 1e-14 * (1.0 + std::fabs(x)) || hi - lo <= 1e-15 * (1.0 + std::fabs(x)))
            return xn;
        x = xn;
    }
    throw ConvergenceError("tukey_gh_cdf: Newton-bisection did not converge");
}

double x_of_z_canonical(double z, const TukeyParams& p, bool& bracketed) {
    bracketed = true;
    if (std::isnan(z)) return z;
    if (std::fabs(p.g) < kSmallG) return h_x(z, p);
    if (p.h == 0.0) return g_x(z, p);
    if (z == kInf || z == -kInf) return z;
    return gh_x(z, p, bracketed);
}

Interval support_canonical(const TukeyParams& p) {
    if (p.h > 0.0 || std::fabs(p.g) < kSmallG) return {};
    const double edge = p.A - p.B / p.g;
    return p.g > 0 ? Interval{edge, kInf} : Interval{-kInf, edge};
}

double density_canonical(double z, const TukeyParams& p) {
    bool bracketed = true;
    const double x = x_of_z_canonical(z, p, bracketed);
    if (!std::isfinite(x)) return 0.0;
    const double d1 = tukey_transform(x, p).d1;
    if (!(d1 > 0.0)) return 0.0;
    return norm_pdf(x) / d1;
}

double density_dz_canonical(double z, const TukeyParams& p) {
    bool bracketed = true;
    const double x = x_of_z_canonical(z, p, bracketed);
    if (!std::isfinite(x)) return 0.0;
    const Kernel kn = g_kernel(x, p.g);
    const double h = p.h;
    const double d1n = kn.kd + h * x * kn.k;
    const double d2n = kn.kdd + 2.0 * h * x * kn.kd + (h + h * h * x * x) * kn.k;
    const double t1 = p.B * std::exp(0.5 * h * x * x) * d1n;
    if (!(t1 > 0.0) || !std::isfinite(t1)) return 0.0;
    const double f = norm_pdf(x) / t1;
    return -f * (x + d2n / d1n) / t1;
}

double cdf_strict(double z, const TukeyParams& p, const char* who) {
    if (std::isnan(z)) throw DomainError(std::string(who) + ": NaN argument");
    const Interval s = support_canonical(p);
    if (z < s.lo || z > s.hi) throw DomainError(std::string(who) + ": z outside support");
    if (z == s.lo) return 0.0;
    if (z == s.hi) return 1.0;
    bool bracketed = true;
    const double x = x_of_z_canonical(z, p, bracketed);
    if (!bracketed)
        throw ConvergenceError(std::string(who) + ": root not bracketed within |x| <= 40");
    return norm_cdf(x);
}

double quantile_canonical(double u, const TukeyParams& p, const char* who) {
    check_unit(u, who);
    return tukey_transform_value(norm_quantile(u), p);
}

}  // namespace

double generalized_inverse(const std::function<double(double)>& F, double y) {
    if (std::isnan(y)) return y;
    if (F(-kInf) >= y) return -kInf;
    constexpr double big = std::numeric_limits<double>::max();
    if (F(big) < y) return kInf;
    if (F(-big) >= y) return -big;
    std::uint64_t lo = order_key(-big), hi = order_key(big);
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (F(from_order_key(mid)) >= y) hi = mid;
        else lo = mid;
    }
    const double x = from_order_key(hi);
    return x == 0.0 ? 0.0 : x;
}

std::string to_string(TukeyFamily f) {
    switch (f) {
        case TukeyFamily::G: return "g";
        case TukeyFamily::H: return "h";
        case TukeyFamily::GH: return "gh";
    }
    return "?";
}

TukeyFamily tukey_family_from_string(const std::string& s) {
    if (s == "g") return TukeyFamily::G;
    if (s == "h") return TukeyFamily::H;
    if (s == "gh") return TukeyFamily::GH;
    throw DomainError("unknown Tukey family '" + s + "'");
}

void TukeyParams::validate() const {
    if (!std::isfinite(A) || !std::isfinite(B) || !std::isfinite(g) || !std::isfinite(h))
        throw DomainError("TukeyParams: non-finite entry");
    if (!(B > 0.0)) throw DomainError("TukeyParams: B must be positive");
    if (h < 0.0) throw DomainError("TukeyParams: h must be nonnegative (quantile not monotone)");
}

TukeyTransform tukey_transform(double x, const TukeyParams& p) {
    const Kernel kn = g_kernel(x, p.g);
    const double h = p.h;
    const double E = h == 0.0 ? 1.0 : std::exp(0.5 * h * x * x);
    return {p.A + p.B * kn.k * E, p.B * E * (kn.kd + h * x * kn.k),
            p.B * E * (kn.kdd + 2.0 * h * x * kn.kd + (h + h * h * x * x) * kn.k)};
}

double tukey_transform_value(double x, const TukeyParams& p) {
    const double k = std::fabs(p.g) < kSmallG ? x : std::expm1(p.g * x) / p.g;
    if (p.h == 0.0) return p.A + p.B * k;
    return p.A + p.B * k * std::exp(0.5 * p.h * x * x);
}

double tukey_g_quantile(double u, const TukeyParams& p) {
    return quantile_canonical(u, canonical(TukeyFamily::G, p), "tukey_g_quantile");
}
double tukey_g_cdf(double z, const TukeyParams& p) {
    return cdf_strict(z, canonical(TukeyFamily::G, p), "tukey_g_cdf");
}
double tukey_g_density(double z, const TukeyParams& p) {
    return density_canonical(z, canonical(TukeyFamily::G, p));
}

double tukey_h_quantile(double u, const TukeyParams& p) {
    return quantile_canonical(u, canonical(TukeyFamily::H, p), "tukey_h_quantile");
}
double tukey_h_cdf(double z, const TukeyParams& p) {
    return cdf_strict(z, canonical(TukeyFamily::H, p), "tukey_h_cdf");
}
double tukey_h_density(double z, const TukeyParams& p) {
    return density_canonical(z, canonical(TukeyFamily::H, p));
}

double tukey_gh_quantile(double u, const TukeyParams& p) {
    return quantile_canonical(u, canonical(TukeyFamily::GH, p), "tukey_gh_quantile");
}
double tukey_gh_cdf(double z, const TukeyParams& p) {
    return cdf_strict(z, canonical(TukeyFamily::GH, p), "tukey_gh_cdf");
}
double tukey_gh_density(double z, const TukeyParams& p) {
    return density_canonical(z, canonical(TukeyFamily::GH, p));
}

Interval tukey_support(TukeyFamily f, const TukeyParams& p) {
    return support_canonical(canonical(f, p));
}

double tukey_x_of_z(TukeyFamily f, double z, const TukeyParams& p) {
    bool bracketed = true;
    return x_of_z_canonical(z, canonical(f, p), bracketed);
}

double tukey_quantile(TukeyFamily f, double u, const TukeyParams& p) {
    return quantile_canonical(u, canonical(f, p), "tukey_quantile");
}

double tukey_cdf(TukeyFamily f, double z, const TukeyParams& p) {
    return cdf_strict(z, canonical(f, p), "tukey_cdf");
}

double tukey_density(TukeyFamily f, double z, const TukeyParams& p) {
    return density_canonical(z, canonical(f, p));
}

double tukey_density_dz(TukeyFamily f, double z, const TukeyParams& p) {
    return density_dz_canonical(z, canonical(f, p));
}

double tukey_h_cdf_bracketed(double z, const TukeyParams& p) {
    const TukeyParams q = canonical(TukeyFamily::H, p);
    const auto T = [&](double x) { return tukey_transform_value(x, q) - z; };
    if (T(-kBracket) >= 0.0) return 0.0;
    if (T(kBracket) <= 0.0) return 1.0;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(
        T, -kBracket, kBracket, boost::math::tools::eps_tolerance<double>(52), iters);
    return norm_cdf(0.5 * (r.first + r.second));
}

double UnivariateLaw::quantile(double u) const {
    check_unit(u, "quantile");
    return generalized_inverse([this](double x) { return cdf(x); }, u);
}

double UnivariateLaw::score(double x) const { return norm_quantile(std::clamp(cdf(x), 0.0, 1.0)); }
double UnivariateLaw::quantile_from_score(double s) const { return quantile(norm_cdf(s)); }

double UnivariateLaw::density_dx(double x) const {
    const double d = 1e-6 * std::max(1.0, std::fabs(x));
    return (density(x + d) - density(x - d)) / (2.0 * d);
}

double UnivariateLaw::density_dxx(double x) const {
    const double d = 1e-4 * std::max(1.0, std::fabs(x));
    return (density(x + d) - 2.0 * density(x) + density(x - d)) / (d * d);
}

NormalLaw::NormalLaw(double mean, double sd) : m_(mean), s_(sd) {
    if (!(sd > 0.0)) throw DomainError("NormalLaw: sd must be positive");
}
double NormalLaw::cdf(double x) const { return norm_cdf((x - m_) / s_); }
double NormalLaw::quantile(double u) const { return m_ + s_ * norm_quantile(u); }
double NormalLaw::density(double x) const { return norm_pdf((x - m_) / s_) / s_; }
double NormalLaw::log_density(double x) const {
    const double z = (x - m_) / s_;
    return -0.5 * z * z - std::log(kSqrt2Pi * s_);
}
double NormalLaw::density_dx(double x) const {
    const double z = (x - m_) / s_;
    return -z * norm_pdf(z) / (s_ * s_);
}
double NormalLaw::density_dxx(double x) const {
    const double z = (x - m_) / s_;
    return (z * z - 1.0) * norm_pdf(z) / (s_ * s_ * s_);
}

UniformLaw::UniformLaw(double a, double b) : a_(a), b_(b) {
    if (!(b > a)) throw DomainError("UniformLaw: need a < b");
}
double UniformLaw::cdf(double x) const { return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0); }
double UniformLaw::quantile(double u) const {
    check_unit(u, "UniformLaw::quantile");
    return a_ + u * (b_ - a_);
}
double UniformLaw::density(double x) const { return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0; }

ParetoLaw::ParetoLaw(double theta, double alpha) : theta_(theta), alpha_(alpha) {
    if (!(theta > 0.0) || !(alpha > 0.0)) throw DomainError("ParetoLaw: parameters must be positive");
}
double ParetoLaw::survival(double x) const {
    if (x <= 0.0) return 1.0;
    return std::pow(theta_ / (theta_ + x), alpha_);
}
double ParetoLaw::cdf(double x) const { return 1.0 - survival(x); }
double ParetoLaw::quantile(double u) const {
    check_unit(u, "ParetoLaw::quantile");
    if (u == 1.0) return kInf;
    return theta_ * std::expm1(-std::log1p(-u) / alpha_);
}
double ParetoLaw::density(double x) const {
    if (x < 0.0) return 0.0;
    return alpha_ / theta_ * std::pow(theta_ / (theta_ + x), alpha_ + 1.0);
}
double ParetoLaw::density_dx(double x) const {
    if (x < 0.0) return 0.0;
    return -(alpha_ + 1.0) * density(x) / (theta_ + x);
}

LogNormalLaw::LogNormalLaw(double m, double s) : m_(m), s_(s) {
    if (!(s > 0.0)) throw DomainError("LogNormalLaw: s must be positive");
}
double LogNormalLaw::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    return norm_cdf((std::log(x) - m_) / s_);
}
double LogNormalLaw::score(double x) const { return x > 0.0 ? (std::log(x) - m_) / s_ : -kInf; }
double LogNormalLaw::quantile(double u) const { return std::exp(m_ + s_ * norm_quantile(u)); }
double LogNormalLaw::density(double x) const {
    if (x <= 0.0) return 0.0;
    return norm_pdf((std::log(x) - m_) / s_) / (s_ * x);
}
double LogNormalLaw::density_dx(double x) const {
    if (x <= 0.0) return 0.0;
    const double z = (std::log(x) - m_) / s_;
    return -density(x) * (1.0 + z / s_) / x;
}

TukeyLaw::TukeyLaw(TukeyFamily family, TukeyParams params)
    : family_(family), params_(canonical(family, params)) {}

double TukeyLaw::cdf(double z) const {
    const Interval s = support_canonical(params_);
    if (z <= s.lo) return 0.0;
    if (z >= s.hi) return 1.0;
    bool bracketed = true;
    return norm_cdf(x_of_z_canonical(z, params_, bracketed));
}
double TukeyLaw::quantile(double u) const { return quantile_canonical(u, params_, "TukeyLaw::quantile"); }
double TukeyLaw::score(double z) const {
    const Interval s = support_canonical(params_);
    if (z <= s.lo) return -kInf;
    if (z >= s.hi) return kInf;
    bool bracketed = true;
    return x_of_z_canonical(z, params_, bracketed);
}
double TukeyLaw::quantile_from_score(double s) const { return tukey_transform_value(s, params_); }
double TukeyLaw::density(double z) const { return density_canonical(z, params_); }
double TukeyLaw::density_dx(double z) const { return density_dz_canonical(z, params_); }
Interval TukeyLaw::support() const { return support_canonical(params_); }
std::string TukeyLaw::name() const { return "tukey_" + to_string(family_); }

ScaledLaw::ScaledLaw(LawPtr base, double scale) : base_(std::move(base)), scale_(scale) {
    if (!(scale > 0.0)) throw DomainError("ScaledLaw: scale must be positive");
}
double ScaledLaw::cdf(double x) const { return base_->cdf(x / scale_); }
double ScaledLaw::quantile(double u) const { return scale_ * base_->quantile(u); }
double ScaledLaw::density(double x) const { return base_->density(x / scale_) / scale_; }
double ScaledLaw::density_dx(double x) const {
    return base_->density_dx(x / scale_) / (scale_ * scale_);
}
Interval ScaledLaw::support() const {
    const Interval s = base_->support();
    return {s.lo * scale_, s.hi * scale_};
}

KdeLaw::KdeLaw(std::vector<double> samples, double bandwidth) : xs_(std::move(samples)) {
    if (xs_.empty()) throw DomainError("KdeLaw: empty sample");
    std::sort(xs_.begin(), xs_.end());
    bw_ = bandwidth;
    if (!(bw_ > 0.0)) {
        const double n = static_cast<double>(xs_.size());
        const double mean = std::accumulate(xs_.begin(), xs_.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : xs_) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / std::max(1.0, n - 1.0));
        bw_ = 1.06 * (sd > 0 ? sd : 1.0) * std::pow(n, -0.2);
    }
}
double KdeLaw::cdf(double x) const {
    double s = 0.0;
    for (double xi : xs_) s += norm_cdf((x - xi) / bw_);
    return s / static_cast<double>(xs_.size());
}
double KdeLaw::density(double x) const {
    double s = 0.0;
    for (double xi : xs_) s += norm_pdf((x - xi) / bw_);
    return s / (static_cast<double>(xs_.size()) * bw_);
}
double KdeLaw::density_dx(double x) const {
    double s = 0.0;
    for (double xi : xs_) {
        const double z = (x - xi) / bw_;
        s -= z * norm_pdf(z);
    }
    return s / (static_cast<double>(xs_.size()) * bw_ * bw_);
}

double rank_transmutation_map(const UnivariateLaw& F1, const UnivariateLaw& F2, double u) {
    check_unit(u, "rank_transmutation_map");
    if (u == 0.0) return 0.0;
    if (u == 1.0) return 1.0;
    return F2.cdf(F1.quantile(u));
}

ElongationReport elongation_check(const std::function<double(double)>& T,
                                  const std::vector<double>& grid) {
    ElongationReport r;
    std::vector<double> w;
    for (double x : grid)
        if (x > 0.0 && std::isfinite(x)) w.push_back(x);
    std::sort(w.begin(), w.end());

    r.symmetric = true;
    for (double x : w) {
        const double a = T(x), b = T(-x);
        if (std::fabs(a - b) > 1e-12 * std::max(1.0, std::fabs(a))) r.symmetric = false;
    }

    // w T(w) = w + O(w^2): the transformed variable is tangent to the identity.
    r.near_identity = true;
    for (int k = 1; k <= 6; ++k) {
        const double s = std::pow(10.0, -k);
        for (double x : {s, -s})
            if (!(std::fabs(x * T(x) - x) <= 10.0 * x * x)) r.near_identity = false;
    }

    r.increasing = !w.empty();
    r.convex = !w.empty();
    for (double x : w) {
        const double d = 1e-2 * std::max(x, 1e-2);
        const double tp = T(x + d), t0 = T(x), tm = T(x - d);
        if (!((tp - tm) / (2.0 * d) > 0.0)) r.increasing = false;
        if (!((tp - 2.0 * t0 + tm) / (d * d) > 1e-7 * std::max(1.0, std::fabs(t0)))) r.convex = false;
    }
    return r;
}

}  // namespace qdiff
