#include "qdiff/quantile_diffusion.hpp"

#include <cmath>

#include "qdiff/errors.hpp"
#include "qdiff/special.hpp"

namespace qdiff {

void CompositeMap::validate() const {
    if (!target || !law || !driver_law) throw DomainError("CompositeMap: missing law");
    if (!(t0 > 0.0)) throw DomainError("CompositeMap: t0 must be positive");
    driver.validate();
}

CompositeMap true_law_map(const DiffusionSpec& driver, MarginalPtr target, double t0) {
    CompositeMap m;
    m.driver = driver;
    m.law = marginal_law(driver);
    m.driver_law = m.law;
    m.target = std::move(target);
    m.tag = LawTag::TrueLaw;
    m.t0 = t0;
    m.validate();
    return m;
}

CompositeMap false_law_map(const DiffusionSpec& driver, MarginalPtr law, MarginalPtr target,
                           double t0) {
    CompositeMap m;
    m.driver = driver;
    m.law = std::move(law);
    m.driver_law = driver.has_exact_law() ? marginal_law(driver) : m.law;
    m.target = std::move(target);
    m.tag = LawTag::FalseLaw;
    m.t0 = t0;
    m.validate();
    return m;
}

MarginalPtr tukey_target(TukeyFamily family, const TukeyParams& p) {
    return make_static(std::make_shared<TukeyLaw>(family, p));
}

std::optional<TukeyTargetInfo> tukey_target_info(const CompositeMap& map) {
    const auto* st = dynamic_cast<const StaticMarginal*>(map.target.get());
    if (!st) return std::nullopt;
    const auto* tk = dynamic_cast<const TukeyLaw*>(st->law().get());
    if (!tk) return std::nullopt;
    return TukeyTargetInfo{tk->family(), tk->params()};
}

namespace {

void check_time(const CompositeMap& map, double t) {
    if (!(t >= map.t0)) throw DomainError("quantile diffusion: t below t0");
}

TukeyParams standardized(const CompositeMap& map, TukeyFamily family, const char* who) {
    const auto info = tukey_target_info(map);
    if (!info || info->family != family)
        throw DomainError(std::string(who) + ": target is not a Tukey-" + to_string(family) + " law");
    if (info->params.A != 0.0 || info->params.B != 1.0)
        throw DomainError(std::string(who) + ": closed form assumes A = 0, B = 1");
    return info->params;
}

// Shared tail of both closed forms: first drift term given 1/f_zeta.
double first_drift_term(const CompositeMap& map, double t, double y, double inv_fz) {
    const double f = map.law->density(t, y);
    const double fp = map.law->density_dy(t, y);
    const double sg = map.driver.vol(t, y);
    if (map.tag == LawTag::FalseLaw)
        return (map.law->dt_cdf(t, y) + map.driver.drift(t, y) * f + 0.5 * sg * sg * fp) * inv_fz;
    return (sg * sg * fp + 0.5 * f * map.driver.dy_vol2(t, y)) * inv_fz;
}

}  // namespace

double random_level_value(const CompositeMap& map, double t, double y) {
    check_time(map, t);
    return map.target->quantile_from_score(t, map.law->score(t, y));
}

double driver_state(const CompositeMap& map, double t, double z) {
    check_time(map, t);
    return map.law->quantile_from_score(t, map.target->score(t, z));
}

CoefficientPair sde_coefficients_general(const CompositeMap& map, double t, double z) {
    check_time(map, t);
    const double fz = map.target->density(t, z);
    if (!(fz > 0.0) || !std::isfinite(fz))
        throw SingularityError("sde_coefficients_general: target density vanishes at z");
    const double fzp = map.target->density_dy(t, z);
    const double y = driver_state(map, t, z);
    const double f = map.law->density(t, y);
    const double fp = map.law->density_dy(t, y);
    const double mu = map.driver.drift(t, y);
    const double sg = map.driver.vol(t, y);
    const double s2 = sg * sg;

    const double curvature = -0.5 * s2 * f * f * fzp / (fz * fz * fz);
    const double moving_target = -map.target->dt_cdf(t, z) / fz;
    double alpha;
    if (map.tag == LawTag::FalseLaw)
        alpha = (map.law->dt_cdf(t, y) + mu * f + 0.5 * s2 * fp) / fz + curvature + moving_target;
    else
        alpha = (s2 * fp + 0.5 * f * map.driver.dy_vol2(t, y)) / fz + curvature + moving_target;
    return {alpha, std::fabs(sg) * f / fz};
}

CoefficientPair g_sde_coefficients(const CompositeMap& map, double t, double z) {
    check_time(map, t);
    const TukeyParams p = standardized(map, TukeyFamily::G, "g_sde_coefficients");
    const double g = p.g;
    if (std::fabs(g) < kSmallG) throw DomainError("g_sde_coefficients: g must be nonzero");
    const double w = g * z + 1.0;
    if (!(w > 0.0)) throw DomainError("g_sde_coefficients: z on or beyond the boundary -1/g");
    const double L = std::log1p(g * z);
    const double E1 = std::exp(L * L / (2.0 * g * g));
    const double inv_fz = kSqrt2Pi * w * E1;
    const double y = map.law->quantile_from_score(t, L / g);
    const double f = map.law->density(t, y);
    const double sg = map.driver.vol(t, y);
    const double fE = f * E1;
    const double second = sg * sg * fE * fE * kPi * w * (g + L / g);
    return {first_drift_term(map, t, y, inv_fz) + second, std::fabs(sg) * f * inv_fz};
}

CoefficientPair h_sde_coefficients(const CompositeMap& map, double t, double z) {
    check_time(map, t);
    const TukeyParams p = standardized(map, TukeyFamily::H, "h_sde_coefficients");
    const double h = p.h;
    const double x = tukey_x_of_z(TukeyFamily::H, z, p);
    const double x2 = x * x;
    const double inv_fz = kSqrt2Pi * (1.0 + h * x2) * std::exp(0.5 * (h + 1.0) * x2);
    const double y = map.law->quantile_from_score(t, x);
    const double f = map.law->density(t, y);
    const double sg = map.driver.vol(t, y);
    const double second = sg * sg * f * f * kPi * x * std::exp(0.5 * (h + 2.0) * x2) *
                          (1.0 + 3.0 * h + h * (1.0 + h) * x2);
    return {first_drift_term(map, t, y, inv_fz) + second, std::fabs(sg) * f * inv_fz};
}

CoefficientPair gbm_g_coefficients(double g, double t, double z) {
    if (!(t > 0.0)) throw DomainError("gbm_g_coefficients: t must be positive");
    const double w = g * z + 1.0;
    if (!(w > 0.0)) throw DomainError("gbm_g_coefficients: z outside the g domain");
    const double L = std::log1p(g * z);
    return {(g / (2.0 * t) - L / (2.0 * g * t)) * w, w / std::sqrt(t)};
}

CoefficientPair ou_g_coefficients(double g, double theta, double t, double z) {
    if (!(t > 0.0)) throw DomainError("ou_g_coefficients: t must be positive");
    if (!(theta > 0.0)) throw DomainError("ou_g_coefficients: theta must be positive");
    const double w = g * z + 1.0;
    if (!(w > 0.0)) throw DomainError("ou_g_coefficients: z outside the g domain");
    const double L = std::log1p(g * z);
    const double d = -std::expm1(-2.0 * theta * t);
    return {(g * theta / d - theta * L / (g * d)) * w, std::sqrt(2.0 * theta) * w / std::sqrt(d)};
}

CoefficientPair unified_g_coefficients(double g, double driver_var, double sigma, double z) {
    if (!(driver_var > 0.0)) throw DomainError("unified_g_coefficients: variance must be positive");
    const double w = g * z + 1.0;
    if (!(w > 0.0)) throw DomainError("unified_g_coefficients: z outside the g domain");
    const double L = std::log1p(g * z);
    return {sigma * sigma / (2.0 * driver_var) * (g - L / g) * w,
            std::fabs(sigma) / std::sqrt(driver_var) * w};
}

CoefficientPair unified_h_coefficients(double h, double driver_var, double sigma, double z) {
    if (!(driver_var > 0.0)) throw DomainError("unified_h_coefficients: variance must be positive");
    if (h < 0.0) throw DomainError("unified_h_coefficients: h must be nonnegative");
    const TukeyParams p{0.0, 1.0, 0.0, h};
    const double x = tukey_x_of_z(TukeyFamily::H, z, p);
    const double x2 = x * x;
    const double E = std::exp(0.5 * h * x2);
    return {sigma * sigma / (2.0 * driver_var) * x * E * (3.0 * h - 1.0 + h * (h - 1.0) * x2),
            std::fabs(sigma) / std::sqrt(driver_var) * (1.0 + h * x2) * E};
}

StateBounds g_state_bounds(double g, double A, double B) {
    if (std::fabs(g) < kSmallG) return {};
    const double edge = A + B * (kBoundaryEps - 1.0) / g;
    return g > 0 ? StateBounds{edge, kInf} : StateBounds{-kInf, edge};
}

StateBounds state_bounds(const CompositeMap& map) {
    const auto info = tukey_target_info(map);
    if (info && info->family == TukeyFamily::G)
        return g_state_bounds(info->params.g, info->params.A, info->params.B);
    const Interval s = map.target->support(map.t0);
    return {s.lo, s.hi};
}

bool LipschitzReport::all_bounded() const {
    for (const auto& c : conditions)
        if (!c.bounded) return false;
    return true;
}

const LimitSeries& LipschitzReport::find(const std::string& name, const std::string& boundary) const {
    for (const auto& c : conditions)
        if (c.name == name && c.boundary == boundary) return c;
    throw DomainError("LipschitzReport: no condition " + name + " at " + boundary);
}

bool bounded_verdict(const std::vector<double>& values) {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    if (values.size() < 5) return true;
    const std::size_t n = values.size();
    double inc[4];
    for (int i = 0; i < 4; ++i) {
        inc[i] = std::fabs(values[n - 4 + i]) - std::fabs(values[n - 5 + i]);
        if (!(inc[i] > 0.0)) return true;
    }
    return !(inc[3] >= 0.25 * inc[0]);
}

LipschitzReport lipschitz_diagnostics(const CompositeMap& map, TukeyFamily family, double t) {
    check_time(map, t);
    const auto info = tukey_target_info(map);
    if (!info || info->family != family || family == TukeyFamily::GH)
        throw DomainError("lipschitz_diagnostics: target must be a Tukey-g or Tukey-h law");
    const TukeyParams p = info->params;

    LipschitzReport rep{family, t, {}};
    constexpr int kPoints = 12;

    struct Point {
        double u, z, f, fp, fpp, x;
    };
    const auto point = [&](double u) {
        const double z = map.target->quantile(t, u);
        const double y = map.law->quantile(t, u);
        return Point{u, z, map.law->density(t, y), map.law->density_dy(t, y),
                     map.law->density_dyy(t, y), norm_quantile(u)};
    };

    const auto add = [&](const std::string& name, const std::string& side, auto&& expr) {
        LimitSeries s;
        s.name = name;
        s.boundary = side;
        for (int k = 1; k <= kPoints; ++k) {
            const double e = std::pow(10.0, -k);
            const double u = side == "left" ? e : 1.0 - e;
            const Point pt = point(u);
            s.levels.push_back(u);
            s.z.push_back(pt.z);
            s.values.push_back(expr(pt));
        }
        s.bounded = bounded_verdict(s.values);
        rep.conditions.push_back(std::move(s));
    };

    const auto pair = [&](int first, auto&& expr) {
        add("L" + std::to_string(first), "left", expr);
        add("L" + std::to_string(first + 1), "right", expr);
    };

    if (family == TukeyFamily::G) {
        const double g = p.g;
        const auto Lz = [g](const Point& q) { return g * q.x; };  // ln(gz + 1)
        pair(1, [&](const Point& q) {
            const double L = Lz(q);
            return q.f * (g + L / g) * std::exp(L * L / (2.0 * g * g));
        });
        pair(3, [](const Point& q) { return q.fp / q.f; });
        pair(5, [&](const Point& q) {
            const double L = Lz(q);
            return q.f * q.f * (2.0 * L * L / (g * g) + 3.0 * L + g * g + 1.0) *
                   std::exp(L * L / (g * g));
        });
        pair(7, [](const Point& q) { return q.fpp / q.f; });
    } else {
        const double h = p.h;
        pair(1, [](const Point& q) { return q.fp / q.f; });
        pair(3, [&](const Point& q) {
            const double e = q.x / kSqrt2;
            return q.f * (h + 1.0) * e * std::exp(e * e);
        });
        pair(5, [](const Point& q) { return q.fpp / q.f; });
        pair(7, [&](const Point& q) {
            const double e = q.x / kSqrt2, e2 = e * e;
            const double d = 1.0 + 2.0 * h * e2;
            return q.f * q.f * e2 * e2 * e2 * std::exp(e2) / (d * d);
        });
        pair(9, [](const Point& q) {
            const double e = q.x / kSqrt2;
            return q.f * q.f * e * e * std::exp(2.0 * e * e);
        });
    }

    // Coefficient slopes by central differences in z.
    const auto slope = [&](const Point& q, bool drift) {
        const double d = 1e-5 * std::max(1.0, std::fabs(q.z));
        const StateBounds b = state_bounds(map);
        double zp = q.z + d, zm = q.z - d;
        if (std::isfinite(b.lo) && zm <= b.lo) zm = 0.5 * (q.z + b.lo);
        if (std::isfinite(b.hi) && zp >= b.hi) zp = 0.5 * (q.z + b.hi);
        const CoefficientPair cp = sde_coefficients_general(map, t, zp);
        const CoefficientPair cm = sde_coefficients_general(map, t, zm);
        return ((drift ? cp.alpha : cp.sigma_tilde) - (drift ? cm.alpha : cm.sigma_tilde)) / (zp - zm);
    };
    for (const char* side : {"left", "right"}) {
        add("dalpha_dz", side, [&](const Point& q) { return slope(q, true); });
        add("dsigma_dz", side, [&](const Point& q) { return slope(q, false); });
    }
    return rep;
}

}  // namespace qdiff
