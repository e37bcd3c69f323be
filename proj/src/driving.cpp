#include "qdiff/driving.hpp"

#include <algorithm>
#include <cmath>

#include "qdiff/errors.hpp"
#include "qdiff/special.hpp"

namespace qdiff {

std::string to_string(DriverKind k) {
    switch (k) {
        case DriverKind::BmDrift: return "bm";
        case DriverKind::Gbm: return "gbm";
        case DriverKind::Ou: return "ou";
        case DriverKind::Custom: return "custom";
    }
    return "?";
}

DriverKind driver_kind_from_string(const std::string& s) {
    if (s == "bm" || s == "bm_drift") return DriverKind::BmDrift;
    if (s == "gbm") return DriverKind::Gbm;
    if (s == "ou") return DriverKind::Ou;
    if (s == "custom") return DriverKind::Custom;
    throw DomainError("unknown driver kind '" + s + "'");
}

std::string to_string(LawTag t) { return t == LawTag::TrueLaw ? "true" : "false"; }

DiffusionSpec DiffusionSpec::bm(double mu, double sigma, double y0) {
    DiffusionSpec s;
    s.kind = DriverKind::BmDrift;
    s.mu = mu;
    s.sigma = sigma;
    s.y0 = y0;
    s.validate();
    return s;
}

DiffusionSpec DiffusionSpec::gbm(double mu, double sigma, double y0) {
    DiffusionSpec s;
    s.kind = DriverKind::Gbm;
    s.mu = mu;
    s.sigma = sigma;
    s.y0 = y0;
    s.validate();
    return s;
}

DiffusionSpec DiffusionSpec::ou(double theta, double mu, double sigma, double y0) {
    DiffusionSpec s;
    s.kind = DriverKind::Ou;
    s.theta = theta;
    s.mu = mu;
    s.sigma = sigma;
    s.y0 = y0;
    s.validate();
    return s;
}

DiffusionSpec DiffusionSpec::custom(std::function<double(double, double)> drift,
                                    std::function<double(double, double)> vol, double y0) {
    DiffusionSpec s;
    s.kind = DriverKind::Custom;
    s.custom_drift = std::move(drift);
    s.custom_vol = std::move(vol);
    s.y0 = y0;
    s.validate();
    return s;
}

double DiffusionSpec::drift(double t, double y) const {
    switch (kind) {
        case DriverKind::BmDrift: return mu;
        case DriverKind::Gbm: return mu * y;
        case DriverKind::Ou: return theta * (mu - y);
        case DriverKind::Custom: return custom_drift(t, y);
    }
    return 0.0;
}

double DiffusionSpec::vol(double t, double y) const {
    switch (kind) {
        case DriverKind::BmDrift: return sigma;
        case DriverKind::Gbm: return sigma * y;
        case DriverKind::Ou: return sigma;
        case DriverKind::Custom: return custom_vol(t, y);
    }
    return 0.0;
}

double DiffusionSpec::dy_vol2(double t, double y) const {
    switch (kind) {
        case DriverKind::BmDrift:
        case DriverKind::Ou: return 0.0;
        case DriverKind::Gbm: return 2.0 * sigma * sigma * y;
        case DriverKind::Custom: {
            const double d = 1e-6 * std::max(1.0, std::fabs(y));
            const double a = custom_vol(t, y + d), b = custom_vol(t, y - d);
            return (a * a - b * b) / (2.0 * d);
        }
    }
    return 0.0;
}

Interval DiffusionSpec::support() const {
    if (kind == DriverKind::Gbm) return {0.0, kInf};
    return {};
}

void DiffusionSpec::validate() const {
    switch (kind) {
        case DriverKind::BmDrift:
            if (!(sigma >= 0.0)) throw DomainError("bm driver: sigma must be nonnegative");
            break;
        case DriverKind::Gbm:
            if (!(sigma >= 0.0)) throw DomainError("gbm driver: sigma must be nonnegative");
            if (!(y0 > 0.0)) throw DomainError("gbm driver: y0 must be positive");
            break;
        case DriverKind::Ou:
            if (!(theta > 0.0)) throw DomainError("ou driver: theta must be positive");
            if (!(sigma > 0.0)) throw DomainError("ou driver: sigma must be positive");
            break;
        case DriverKind::Custom:
            if (!custom_drift || !custom_vol) throw DomainError("custom driver: missing coefficients");
            break;
    }
}

GaussianMarginal::GaussianMarginal(double origin, std::function<Moments(double)> moments)
    : origin_(origin), moments_(std::move(moments)) {}

GaussianMarginal::Moments GaussianMarginal::moments(double t) const {
    if (!(t > origin_)) throw DomainError("marginal law: t must exceed the conditioning time");
    return moments_(t);
}

double GaussianMarginal::cdf(double t, double y) const {
    const Moments m = moments(t);
    return norm_cdf((y - m.m) / std::sqrt(m.v));
}

double GaussianMarginal::quantile(double t, double u) const {
    const Moments m = moments(t);
    return m.m + std::sqrt(m.v) * norm_quantile(u);
}

double GaussianMarginal::score(double t, double y) const {
    const Moments m = moments(t);
    return (y - m.m) / std::sqrt(m.v);
}

double GaussianMarginal::quantile_from_score(double t, double s) const {
    const Moments m = moments(t);
    return m.m + std::sqrt(m.v) * s;
}

double GaussianMarginal::density(double t, double y) const {
    const Moments m = moments(t);
    const double s = std::sqrt(m.v);
    return norm_pdf((y - m.m) / s) / s;
}

double GaussianMarginal::log_density(double t, double y) const {
    const Moments m = moments(t);
    const double z = (y - m.m) / std::sqrt(m.v);
    return -0.5 * z * z - 0.5 * std::log(2.0 * kPi * m.v);
}

double GaussianMarginal::density_dy(double t, double y) const {
    const Moments m = moments(t);
    const double s = std::sqrt(m.v);
    const double x = (y - m.m) / s;
    return -x * norm_pdf(x) / m.v;
}

double GaussianMarginal::density_dyy(double t, double y) const {
    const Moments m = moments(t);
    const double s = std::sqrt(m.v);
    const double x = (y - m.m) / s;
    return (x * x - 1.0) * norm_pdf(x) / (m.v * s);
}

double GaussianMarginal::dt_cdf(double t, double y) const {
    const Moments m = moments(t);
    const double s = std::sqrt(m.v);
    const double x = (y - m.m) / s;
    return norm_pdf(x) * (-m.dm / s - x * m.dv / (2.0 * m.v));
}

LogNormalMarginal::LogNormalMarginal(double origin,
                                     std::function<GaussianMarginal::Moments(double)> moments)
    : origin_(origin), moments_(std::move(moments)) {}

GaussianMarginal::Moments LogNormalMarginal::moments(double t) const {
    if (!(t > origin_)) throw DomainError("marginal law: t must exceed the conditioning time");
    return moments_(t);
}

double LogNormalMarginal::cdf(double t, double y) const {
    if (y <= 0.0) return 0.0;
    const auto m = moments(t);
    return norm_cdf((std::log(y) - m.m) / std::sqrt(m.v));
}

double LogNormalMarginal::quantile(double t, double u) const {
    const auto m = moments(t);
    return std::exp(m.m + std::sqrt(m.v) * norm_quantile(u));
}

double LogNormalMarginal::score(double t, double y) const {
    if (y <= 0.0) return -kInf;
    const auto m = moments(t);
    return (std::log(y) - m.m) / std::sqrt(m.v);
}

double LogNormalMarginal::quantile_from_score(double t, double s) const {
    const auto m = moments(t);
    return std::exp(m.m + std::sqrt(m.v) * s);
}

double LogNormalMarginal::density(double t, double y) const {
    if (y <= 0.0) return 0.0;
    const auto m = moments(t);
    const double s = std::sqrt(m.v);
    return norm_pdf((std::log(y) - m.m) / s) / (s * y);
}

double LogNormalMarginal::log_density(double t, double y) const {
    if (y <= 0.0) return -kInf;
    const auto m = moments(t);
    const double z = (std::log(y) - m.m) / std::sqrt(m.v);
    return -0.5 * z * z - 0.5 * std::log(2.0 * kPi * m.v) - std::log(y);
}

double LogNormalMarginal::density_dy(double t, double y) const {
    if (y <= 0.0) return 0.0;
    const auto m = moments(t);
    const double s = std::sqrt(m.v);
    const double x = (std::log(y) - m.m) / s;
    return -density(t, y) * (1.0 + x / s) / y;
}

double LogNormalMarginal::density_dyy(double t, double y) const {
    if (y <= 0.0) return 0.0;
    const auto m = moments(t);
    const double s = std::sqrt(m.v);
    const double x = (std::log(y) - m.m) / s;
    const double a = -(1.0 + x / s) / y;
    const double da = -1.0 / (m.v * y * y) + (1.0 + x / s) / (y * y);
    return density(t, y) * (a * a + da);
}

double LogNormalMarginal::dt_cdf(double t, double y) const {
    if (y <= 0.0) return 0.0;
    const auto m = moments(t);
    const double s = std::sqrt(m.v);
    const double x = (std::log(y) - m.m) / s;
    return norm_pdf(x) * (-m.dm / s - x * m.dv / (2.0 * m.v));
}

double MarginalLaw::score(double t, double y) const {
    return norm_quantile(std::clamp(cdf(t, y), 0.0, 1.0));
}
double MarginalLaw::quantile_from_score(double t, double s) const { return quantile(t, norm_cdf(s)); }

MarginalPtr make_static(LawPtr law) { return std::make_shared<StaticMarginal>(std::move(law)); }

MarginalPtr transition_law(const DiffusionSpec& spec, double s, double y_s) {
    spec.validate();
    if (!(s >= 0.0)) throw DomainError("transition_law: s must be nonnegative");
    if (!spec.support().contains(y_s) || (spec.kind == DriverKind::Gbm && !(y_s > 0.0)))
        throw DomainError("transition_law: y_s outside the driver support");
    using M = GaussianMarginal::Moments;
    switch (spec.kind) {
        case DriverKind::BmDrift: {
            const double mu = spec.mu, s2 = spec.sigma * spec.sigma;
            return std::make_shared<GaussianMarginal>(
                s, [=](double t) { return M{y_s + mu * (t - s), s2 * (t - s), mu, s2}; });
        }
        case DriverKind::Ou: {
            const double th = spec.theta, mu = spec.mu, s2 = spec.sigma * spec.sigma;
            return std::make_shared<GaussianMarginal>(s, [=](double t) {
                const double e1 = std::exp(-th * (t - s));
                const double e2 = e1 * e1;
                return M{mu + (y_s - mu) * e1, s2 * (-std::expm1(-2.0 * th * (t - s))) / (2.0 * th),
                         -th * (y_s - mu) * e1, s2 * e2};
            });
        }
        case DriverKind::Gbm: {
            const double s2 = spec.sigma * spec.sigma, a = spec.mu - 0.5 * s2, ly = std::log(y_s);
            return std::make_shared<LogNormalMarginal>(
                s, [=](double t) { return M{ly + a * (t - s), s2 * (t - s), a, s2}; });
        }
        case DriverKind::Custom: break;
    }
    throw DomainError("custom drivers have no analytic law; use empirical_marginal_law");
}

MarginalPtr marginal_law(const DiffusionSpec& spec) { return transition_law(spec, 0.0, spec.y0); }

LawPtr marginal_law(const DiffusionSpec& spec, double t) {
    if (!(t > 0.0)) throw DomainError("marginal_law: t must be positive (mass concentrated on y0)");
    return std::make_shared<SliceLaw>(marginal_law(spec), t);
}

LawPtr transition_law(const DiffusionSpec& spec, double s, double y_s, double t) {
    if (!(t > s)) throw DomainError("transition_law: need s < t");
    return std::make_shared<SliceLaw>(transition_law(spec, s, y_s), t);
}

double driver_variance(const DiffusionSpec& spec, double s, double t) {
    const double tau = t - s;
    const double s2 = spec.sigma * spec.sigma;
    switch (spec.kind) {
        case DriverKind::BmDrift:
        case DriverKind::Gbm: return s2 * tau;
        case DriverKind::Ou: return s2 * (-std::expm1(-2.0 * spec.theta * tau)) / (2.0 * spec.theta);
        case DriverKind::Custom: break;
    }
    throw DomainError("driver_variance: not available for custom drivers");
}

double sample_transition(const DiffusionSpec& spec, double s, double y_s, double t, double normal) {
    if (t == s) return y_s;
    const double tau = t - s;
    switch (spec.kind) {
        case DriverKind::BmDrift: return y_s + spec.mu * tau + spec.sigma * std::sqrt(tau) * normal;
        case DriverKind::Gbm: {
            const double s2 = spec.sigma * spec.sigma;
            return y_s * std::exp((spec.mu - 0.5 * s2) * tau + spec.sigma * std::sqrt(tau) * normal);
        }
        case DriverKind::Ou: {
            const double e1 = std::exp(-spec.theta * tau);
            return spec.mu + (y_s - spec.mu) * e1 + std::sqrt(driver_variance(spec, s, t)) * normal;
        }
        case DriverKind::Custom: break;
    }
    throw DomainError("sample_transition: custom drivers have no exact transition");
}

double fokker_planck_dtF(const DiffusionSpec& spec, const MarginalLaw& law, double t, double y) {
    const double f = law.density(t, y);
    const double fp = law.density_dy(t, y);
    const double sg = spec.vol(t, y);
    return -spec.drift(t, y) * f + 0.5 * (sg * sg * fp + f * spec.dy_vol2(t, y));
}

}  // namespace qdiff
