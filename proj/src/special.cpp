#include "qdiff/special.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "qdiff/errors.hpp"

namespace qdiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Acklam's rational approximation for the lower half, p in (0, 0.5].
double acklam_lower(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double refined_lower(double p) {
    double x = acklam_lower(p);
    // Residual computed in the form that keeps relative accuracy near the median.
    const double e = p > 0.25 ? 0.5 * std::erf(x / kSqrt2) - (p - 0.5)
                              : 0.5 * std::erfc(-x / kSqrt2) - p;
    const double dd = e * kSqrt2Pi * std::exp(0.5 * x * x);
    if (std::isfinite(dd)) x -= dd / (1.0 + 0.5 * x * dd);
    return x;
}

}  // namespace

double norm_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_quantile(double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("norm_quantile: u outside [0,1]");
    if (u == 0.0) return -kInf;
    if (u == 1.0) return kInf;
    if (u <= 0.5) return refined_lower(u);
    return -refined_lower(1.0 - u);
}

double erf_inv(double y) {
    if (!(y >= -1.0 && y <= 1.0)) throw DomainError("erf_inv: argument outside [-1,1]");
    if (y == -1.0) return -kInf;
    if (y == 1.0) return kInf;
    if (y == 0.0) return 0.0;
    const double ay = std::fabs(y);
    double x = norm_quantile(0.5 + 0.5 * ay) / kSqrt2;
    const double e = ay < 0.5 ? std::erf(x) - ay : (1.0 - ay) - std::erfc(x);
    x -= e / (2.0 / std::sqrt(kPi) * std::exp(-x * x));
    return y < 0 ? -x : x;
}

double lambert_w0(double x) {
    constexpr double inv_e = 0.36787944117144232160;
    if (std::isnan(x) || x < -inv_e) throw DomainError("lambert_w0: argument below -1/e");
    if (x == -inv_e) return -1.0;
    if (x == 0.0) return 0.0;
    if (x == kInf) return kInf;
    if (std::fabs(x) < 1e-8) return x * (1.0 - x * (1.0 - 1.5 * x));
    double w;
    if (x < -0.3) {
        const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
        w = -1.0 + p * (1.0 - p / 3.0 + 11.0 / 72.0 * p * p);
    } else {
        const double l = std::log1p(x);
        w = l * (1.0 - std::log1p(l) / (2.0 + l));
    }
    for (int it = 0; it < 32; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) break;
        const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if (std::fabs(step) <= 1e-15 * std::fabs(w)) break;
    }
    return w;
}

double student_t_cdf(double x, double k) {
    if (!(k > 0)) throw DomainError("student_t_cdf: degrees of freedom must be positive");
    if (x == -kInf) return 0.0;
    if (x == kInf) return 1.0;
    return boost::math::cdf(boost::math::students_t_distribution<double>(k), x);
}

}  // namespace qdiff
