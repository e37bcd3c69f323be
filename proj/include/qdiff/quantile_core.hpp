#pragma once

#include <cmath>

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace qdiff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lo = -kInf;
    double hi = kInf;

    [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
    [[nodiscard]] bool interior(double x) const { return x > lo && x < hi; }
    bool operator==(const Interval&) const = default;
};

// inf{x : F(x) >= y} for nondecreasing F, with inf of the empty set = +inf.
// Bisection over the ordered bit patterns of doubles, exact to one ulp.
[[nodiscard]] double generalized_inverse(const std::function<double(double)>& F, double y);

enum class TukeyFamily { G, H, GH };

[[nodiscard]] std::string to_string(TukeyFamily f);
[[nodiscard]] TukeyFamily tukey_family_from_string(const std::string& s);

struct TukeyParams {
    double A = 0.0;
    double B = 1.0;
    double g = 0.0;
    double h = 0.0;

    // Throws DomainError when B <= 0, h < 0 or any entry is not finite.
    void validate() const;
};

// Below this magnitude g is treated as the analytic g -> 0 limit.
inline constexpr double kSmallG = 1e-8;

// Transform T(x) = A + B (exp(g x) - 1)/g * exp(h x^2 / 2) of a standard normal x
// together with its first two x-derivatives.
struct TukeyTransform {
    double value;
    double d1;
    double d2;
};
[[nodiscard]] TukeyTransform tukey_transform(double x, const TukeyParams& p);
[[nodiscard]] double tukey_transform_value(double x, const TukeyParams& p);

[[nodiscard]] double tukey_g_quantile(double u, const TukeyParams& p);
[[nodiscard]] double tukey_g_cdf(double z, const TukeyParams& p);
[[nodiscard]] double tukey_g_density(double z, const TukeyParams& p);

[[nodiscard]] double tukey_h_quantile(double u, const TukeyParams& p);
[[nodiscard]] double tukey_h_cdf(double z, const TukeyParams& p);
[[nodiscard]] double tukey_h_density(double z, const TukeyParams& p);

[[nodiscard]] double tukey_gh_quantile(double u, const TukeyParams& p);
[[nodiscard]] double tukey_gh_cdf(double z, const TukeyParams& p);
[[nodiscard]] double tukey_gh_density(double z, const TukeyParams& p);

// Family dispatch. tukey_x_of_z returns the normal score x_u with T(x_u) = z;
// it is -inf / +inf at or beyond the support ends.
[[nodiscard]] Interval tukey_support(TukeyFamily f, const TukeyParams& p);
[[nodiscard]] double tukey_x_of_z(TukeyFamily f, double z, const TukeyParams& p);
[[nodiscard]] double tukey_quantile(TukeyFamily f, double u, const TukeyParams& p);
[[nodiscard]] double tukey_cdf(TukeyFamily f, double z, const TukeyParams& p);
[[nodiscard]] double tukey_density(TukeyFamily f, double z, const TukeyParams& p);
[[nodiscard]] double tukey_density_dz(TukeyFamily f, double z, const TukeyParams& p);

// h-family inversion through bracketed root finding instead of Lambert W.
[[nodiscard]] double tukey_h_cdf_bracketed(double z, const TukeyParams& p);

class UnivariateLaw {
public:
    virtual ~UnivariateLaw() = default;
    [[nodiscard]] virtual double cdf(double x) const = 0;
    // Defaults to the generalized inverse of cdf.
    [[nodiscard]] virtual double quantile(double u) const;
    [[nodiscard]] virtual double density(double x) const = 0;
    [[nodiscard]] virtual double log_density(double x) const { return std::log(density(x)); }
    // Normal score Phi^-1(F(x)) and its inverse. The defaults pass through F,
    // which leaves about 1e-16 of resolution near u = 1; laws built on a normal
    // score override both.
    [[nodiscard]] virtual double score(double x) const;
    [[nodiscard]] virtual double quantile_from_score(double s) const;
    // Defaults to a central difference of density.
    [[nodiscard]] virtual double density_dx(double x) const;
    [[nodiscard]] virtual double density_dxx(double x) const;
    [[nodiscard]] virtual Interval support() const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

using LawPtr = std::shared_ptr<const UnivariateLaw>;

class NormalLaw final : public UnivariateLaw {
public:
    NormalLaw(double mean = 0.0, double sd = 1.0);
    double cdf(double x) const override;
    double quantile(double u) const override;
    double score(double x) const override { return (x - m_) / s_; }
    double quantile_from_score(double s) const override { return m_ + s_ * s; }
    double density(double x) const override;
    double log_density(double x) const override;
    double density_dx(double x) const override;
    double density_dxx(double x) const override;
    Interval support() const override { return {}; }
    std::string name() const override { return "normal"; }
    double mean() const { return m_; }
    double sd() const { return s_; }

private:
    double m_, s_;
};

class UniformLaw final : public UnivariateLaw {
public:
    UniformLaw(double a = 0.0, double b = 1.0);
    double cdf(double x) const override;
    double quantile(double u) const override;
    double density(double x) const override;
    double density_dx(double) const override { return 0.0; }
    double density_dxx(double) const override { return 0.0; }
    Interval support() const override { return {a_, b_}; }
    std::string name() const override { return "uniform"; }

private:
    double a_, b_;
};

// Lomax form: survival (theta / (theta + x))^alpha on [0, inf).
class ParetoLaw final : public UnivariateLaw {
public:
    ParetoLaw(double theta, double alpha);
    double cdf(double x) const override;
    double survival(double x) const;
    double quantile(double u) const override;
    double density(double x) const override;
    double density_dx(double x) const override;
    Interval support() const override { return {0.0, kInf}; }
    std::string name() const override { return "pareto"; }

private:
    double theta_, alpha_;
};

// log X ~ N(m, s^2).
class LogNormalLaw final : public UnivariateLaw {
public:
    LogNormalLaw(double m, double s);
    double cdf(double x) const override;
    double quantile(double u) const override;
    double score(double x) const override;
    double quantile_from_score(double s) const override { return std::exp(m_ + s_ * s); }
    double density(double x) const override;
    double density_dx(double x) const override;
    Interval support() const override { return {0.0, kInf}; }
    std::string name() const override { return "lognormal"; }

private:
    double m_, s_;
};

class PointMassLaw final : public UnivariateLaw {
public:
    explicit PointMassLaw(double c) : c_(c) {}
    double cdf(double x) const override { return x >= c_ ? 1.0 : 0.0; }
    double density(double) const override { return 0.0; }
    Interval support() const override { return {c_, c_}; }
    std::string name() const override { return "point_mass"; }

private:
    double c_;
};

class TukeyLaw final : public UnivariateLaw {
public:
    TukeyLaw(TukeyFamily family, TukeyParams params);
    double cdf(double z) const override;
    double quantile(double u) const override;
    double score(double z) const override;
    double quantile_from_score(double s) const override;
    double density(double z) const override;
    double density_dx(double z) const override;
    Interval support() const override;
    std::string name() const override;
    TukeyFamily family() const { return family_; }
    const TukeyParams& params() const { return params_; }

private:
    TukeyFamily family_;
    TukeyParams params_;
};

// Law of scale * X for X ~ base, scale > 0.
class ScaledLaw final : public UnivariateLaw {
public:
    ScaledLaw(LawPtr base, double scale);
    double cdf(double x) const override;
    double quantile(double u) const override;
    double score(double x) const override { return base_->score(x / scale_); }
    double quantile_from_score(double s) const override { return scale_ * base_->quantile_from_score(s); }
    double density(double x) const override;
    double density_dx(double x) const override;
    Interval support() const override;
    std::string name() const override { return "scaled_" + base_->name(); }

private:
    LawPtr base_;
    double scale_;
};

// Gaussian kernel density estimate; Silverman bandwidth when bandwidth <= 0.
class KdeLaw final : public UnivariateLaw {
public:
    explicit KdeLaw(std::vector<double> samples, double bandwidth = 0.0);
    double cdf(double x) const override;
    double density(double x) const override;
    double density_dx(double x) const override;
    Interval support() const override { return {}; }
    std::string name() const override { return "kde"; }
    double bandwidth() const { return bw_; }

private:
    std::vector<double> xs_;
    double bw_;
};

// F2(F1^-(u)); fixes 0 and 1.
[[nodiscard]] double rank_transmutation_map(const UnivariateLaw& F1, const UnivariateLaw& F2,
                                            double u);

struct ElongationReport {
    bool symmetric = false;
    bool near_identity = false;  // w T(w) - w = O(w^2) near the mode
    bool increasing = false;     // T' > 0 for w > 0
    bool convex = false;         // T'' > 0 for w > 0
    [[nodiscard]] bool all() const { return symmetric && near_identity && increasing && convex; }
};

// grid holds the positive abscissae; symmetry is probed at +-w.
[[nodiscard]] ElongationReport elongation_check(const std::function<double(double)>& T,
                                                const std::vector<double>& grid);

}  // namespace qdiff
