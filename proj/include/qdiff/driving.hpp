#pragma once

#include <cmath>

#include <functional>
#include <memory>
#include <string>

#include "qdiff/quantile_core.hpp"

namespace qdiff {

enum class DriverKind { BmDrift, Gbm, Ou, Custom };
enum class LawTag { TrueLaw, FalseLaw };

[[nodiscard]] std::string to_string(DriverKind k);
[[nodiscard]] DriverKind driver_kind_from_string(const std::string& s);
[[nodiscard]] std::string to_string(LawTag t);

// dY = mu(t,Y) dt + sigma(t,Y) dW.
//   BmDrift: mu, sigma constants.
//   Gbm:     mu Y, sigma Y.
//   Ou:      theta (mu - Y), sigma.
struct DiffusionSpec {
    DriverKind kind = DriverKind::BmDrift;
    double mu = 0.0;
    double sigma = 1.0;
    double theta = 0.0;
    double y0 = 0.0;
    std::function<double(double, double)> custom_drift;
    std::function<double(double, double)> custom_vol;

    static DiffusionSpec bm(double mu, double sigma, double y0 = 0.0);
    static DiffusionSpec gbm(double mu, double sigma, double y0 = 1.0);
    static DiffusionSpec ou(double theta, double mu, double sigma, double y0 = 0.0);
    static DiffusionSpec custom(std::function<double(double, double)> drift,
                                std::function<double(double, double)> vol, double y0);

    [[nodiscard]] double drift(double t, double y) const;
    [[nodiscard]] double vol(double t, double y) const;
    // d/dy of sigma(t,y)^2.
    [[nodiscard]] double dy_vol2(double t, double y) const;
    [[nodiscard]] bool has_exact_law() const { return kind != DriverKind::Custom; }
    [[nodiscard]] Interval support() const;
    void validate() const;
};

// Time-indexed distribution F(t,.), Q(t,.), f(t,.) with the derivatives the
// quantile SDE coefficients need.
class MarginalLaw {
public:
    virtual ~MarginalLaw() = default;
    [[nodiscard]] virtual double cdf(double t, double y) const = 0;
    [[nodiscard]] virtual double quantile(double t, double u) const = 0;
    [[nodiscard]] virtual double density(double t, double y) const = 0;
    // Finite far beyond where density underflows, for the closed-form laws.
    [[nodiscard]] virtual double log_density(double t, double y) const { return std::log(density(t, y)); }
    // Normal score Phi^-1(F(t, y)) and its inverse; see UnivariateLaw::score.
    [[nodiscard]] virtual double score(double t, double y) const;
    [[nodiscard]] virtual double quantile_from_score(double t, double s) const;
    [[nodiscard]] virtual double density_dy(double t, double y) const = 0;
    [[nodiscard]] virtual double density_dyy(double t, double y) const = 0;
    [[nodiscard]] virtual double dt_cdf(double t, double y) const = 0;
    [[nodiscard]] virtual Interval support(double t) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

using MarginalPtr = std::shared_ptr<const MarginalLaw>;

// N(m(t), v(t)) for t > origin.
class GaussianMarginal final : public MarginalLaw {
public:
    struct Moments {
        double m, v, dm, dv;
    };
    GaussianMarginal(double origin, std::function<Moments(double)> moments);
    double cdf(double t, double y) const override;
    double quantile(double t, double u) const override;
    double density(double t, double y) const override;
    double log_density(double t, double y) const override;
    double score(double t, double y) const override;
    double quantile_from_score(double t, double s) const override;
    double density_dy(double t, double y) const override;
    double density_dyy(double t, double y) const override;
    double dt_cdf(double t, double y) const override;
    Interval support(double) const override { return {}; }
    std::string name() const override { return "gaussian"; }
    [[nodiscard]] Moments moments(double t) const;

private:
    double origin_;
    std::function<Moments(double)> moments_;
};

// exp(N(m(t), v(t))) for t > origin.
class LogNormalMarginal final : public MarginalLaw {
public:
    LogNormalMarginal(double origin, std::function<GaussianMarginal::Moments(double)> moments);
    double cdf(double t, double y) const override;
    double quantile(double t, double u) const override;
    double density(double t, double y) const override;
    double log_density(double t, double y) const override;
    double score(double t, double y) const override;
    double quantile_from_score(double t, double s) const override;
    double density_dy(double t, double y) const override;
    double density_dyy(double t, double y) const override;
    double dt_cdf(double t, double y) const override;
    Interval support(double) const override { return {0.0, kInf}; }
    std::string name() const override { return "lognormal"; }

private:
    GaussianMarginal::Moments moments(double t) const;
    double origin_;
    std::function<GaussianMarginal::Moments(double)> moments_;
};

// A time-free law viewed as a marginal (stationary or static target).
class StaticMarginal final : public MarginalLaw {
public:
    explicit StaticMarginal(LawPtr law) : law_(std::move(law)) {}
    double cdf(double, double y) const override { return law_->cdf(y); }
    double quantile(double, double u) const override { return law_->quantile(u); }
    double density(double, double y) const override { return law_->density(y); }
    double log_density(double, double y) const override { return law_->log_density(y); }
    double score(double, double y) const override { return law_->score(y); }
    double quantile_from_score(double, double s) const override { return law_->quantile_from_score(s); }
    double density_dy(double, double y) const override { return law_->density_dx(y); }
    double density_dyy(double, double y) const override { return law_->density_dxx(y); }
    double dt_cdf(double, double) const override { return 0.0; }
    Interval support(double) const override { return law_->support(); }
    std::string name() const override { return "static_" + law_->name(); }
    [[nodiscard]] const LawPtr& law() const { return law_; }

private:
    LawPtr law_;
};

// Fixed-time view of a marginal law.
class SliceLaw final : public UnivariateLaw {
public:
    SliceLaw(MarginalPtr law, double t) : law_(std::move(law)), t_(t) {}
    double cdf(double y) const override { return law_->cdf(t_, y); }
    double quantile(double u) const override { return law_->quantile(t_, u); }
    double density(double y) const override { return law_->density(t_, y); }
    double log_density(double y) const override { return law_->log_density(t_, y); }
    double score(double y) const override { return law_->score(t_, y); }
    double quantile_from_score(double s) const override { return law_->quantile_from_score(t_, s); }
    double density_dx(double y) const override { return law_->density_dy(t_, y); }
    double density_dxx(double y) const override { return law_->density_dyy(t_, y); }
    Interval support() const override { return law_->support(t_); }
    std::string name() const override { return law_->name(); }

private:
    MarginalPtr law_;
    double t_;
};

[[nodiscard]] MarginalPtr make_static(LawPtr law);

// True law of Y_t given Y_0 = y0 (t > 0). Throws DomainError for custom drivers.
[[nodiscard]] MarginalPtr marginal_law(const DiffusionSpec& spec);
// Slice at time t; DomainError at t <= 0 where the mass sits on y0.
[[nodiscard]] LawPtr marginal_law(const DiffusionSpec& spec, double t);

// Law of Y_t given Y_s = y_s, as a function of t > s.
[[nodiscard]] MarginalPtr transition_law(const DiffusionSpec& spec, double s, double y_s);
[[nodiscard]] LawPtr transition_law(const DiffusionSpec& spec, double s, double y_s, double t);

// Conditional variance of the Gaussian state (log-state for GBM) over (s, t].
[[nodiscard]] double driver_variance(const DiffusionSpec& spec, double s, double t);

// One exact transition draw from (s, y_s) to t given a standard normal variate.
[[nodiscard]] double sample_transition(const DiffusionSpec& spec, double s, double y_s, double t,
                                       double normal);

// -mu f + (sigma^2 f' + f d_y sigma^2) / 2, the CDF form of the forward equation.
[[nodiscard]] double fokker_planck_dtF(const DiffusionSpec& spec, const MarginalLaw& law, double t,
                                       double y);

}  // namespace qdiff
