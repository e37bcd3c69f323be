#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qdiff/quantile_diffusion.hpp"

namespace qdiff {

// Finite-support positive random variable V with P(V = values[j]) = probs[j].
struct DiscreteLaw {
    std::vector<double> values;
    std::vector<double> probs;
    void validate() const;
};

// Phi(Phi^-1(u) + lambda).
[[nodiscard]] double wang1(double u, double lambda);
// T_k(Phi^-1(u) + lambda), T_k the Student t CDF with k degrees of freedom.
[[nodiscard]] double wang2(double u, double lambda, double k);
// sum_j p_j Phi(G^-1(u) v_j + lambda) with G(x) = sum_j p_j Phi(x v_j).
[[nodiscard]] double wang_gen(double u, double lambda, const DiscreteLaw& V);
// Inverse of G(x) = sum_j p_j Phi(x v_j).
[[nodiscard]] double wang_gen_G_inverse(double u, const DiscreteLaw& V);
// s^r applied to a survival probability.
[[nodiscard]] double ph_transform(double s, double r);
// Exponentially tilted CDF; throws DivergenceError when the tilt is not integrable.
[[nodiscard]] double esscher_cdf(double x, const UnivariateLaw& law, double lambda);
// 1 - F_Q(F_P^-(1 - u)).
[[nodiscard]] double godin_distortion(double u, const UnivariateLaw& P, const UnivariateLaw& Q);

enum class DistortionKind { Wang1, Wang2, WangGen, PH, Esscher, Godin, QuantileInduced };
[[nodiscard]] std::string to_string(DistortionKind k);

// A distortion nu: [0,1] -> [0,1] with nu(0) = 0, nu(1) = 1.
struct DistortionOperator {
    DistortionKind kind;
    std::string label;
    std::function<double(double)> nu;

    [[nodiscard]] double operator()(double u) const { return nu(u); }
};

[[nodiscard]] DistortionOperator make_wang1(double lambda);
[[nodiscard]] DistortionOperator make_wang2(double lambda, double k);
[[nodiscard]] DistortionOperator make_wang_gen(double lambda, DiscreteLaw V);
[[nodiscard]] DistortionOperator make_ph(double r);
// nu(u) = Esscher CDF at F^-(u).
[[nodiscard]] DistortionOperator make_esscher(LawPtr law, double lambda);
[[nodiscard]] DistortionOperator make_godin(LawPtr P, LawPtr Q);
// nu(u) = F_Z(t, F_Y^-(t, u)): the curve (F^P(y), F^{P^Z}(y)) at time t.
[[nodiscard]] DistortionOperator make_quantile_induced(const CompositeMap& map, double t);

struct MonotoneReport {
    bool zero_at_zero = false;
    bool one_at_one = false;
    bool nondecreasing = false;
    [[nodiscard]] bool ok() const { return zero_at_zero && one_at_one && nondecreasing; }
};
// Checks nu on the grid i/(n+1), i = 0..n+1 (n interior points).
[[nodiscard]] MonotoneReport check_distortion(const std::function<double(double)>& nu,
                                              std::size_t n = 999, double tol = 1e-12);

// Law of Z_t: F_Y(t, Q(t, F_zeta(y))) with F_Y the actual driver law.
[[nodiscard]] double induced_marginal_cdf(const CompositeMap& map, double t, double y);
// The same value read as the distorted law of Y_t; requires D_Y = D_zeta.
[[nodiscard]] double quantile_induced_cdf(const CompositeMap& map, double t, double y);
// P^Z(Y_t <= y | Y_s = y_s) = P(Z_t <= y | Z_s = y_s). Dispatches to the closed
// form for a true-law drifted BM with a Tukey target, otherwise transforms the
// driver transition law.
[[nodiscard]] double quantile_induced_cdf(const CompositeMap& map, double s, double y_s, double t,
                                          double y);
[[nodiscard]] double conditional_induced_cdf_generic(const CompositeMap& map, double s, double y_s,
                                                     double t, double y);
// Phi((sqrt(t) x(y) - sqrt(s) x(y_s)) / sqrt(t - s)) with x = Phi^-1 o F_zeta.
[[nodiscard]] double bm_tukey_conditional_cdf(const CompositeMap& map, double s, double y_s, double t,
                                              double y);

// Transition density of Y under P (from Y_s = y_s) and under P^Z (from Z_s = y_s).
[[nodiscard]] double base_transition_density(const CompositeMap& map, double s, double y_s, double t,
                                             double y);
[[nodiscard]] double induced_transition_density(const CompositeMap& map, double s, double y_s,
                                                double t, double y);
[[nodiscard]] double base_transition_log_density(const CompositeMap& map, double s, double y_s, double t,
                                                 double y);
// Ratio of the two densities above: 0 outside the target support, +inf where
// only the P density vanishes. Formed in log space so that it stays finite
// where the P density underflows but its logarithm does not.
[[nodiscard]] double likelihood_ratio(const CompositeMap& map, double s, double y_s, double t, double y);
// log of the ratio; -inf outside the target support.
[[nodiscard]] double log_likelihood_ratio(const CompositeMap& map, double s, double y_s, double t,
                                          double y);

struct DistortedExpectation {
    double quadrature = 0.0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
    bool agree = false;  // |quadrature - mc_mean| <= 3 stderr
};

// E^{P^Z}[phi(Y_t) | Y_s = y_s] = E[phi(Z_t) | Z_s = y_s], by quadrature against
// the induced transition density and by Monte Carlo over exact driver draws.
[[nodiscard]] DistortedExpectation distorted_expectation(const CompositeMap& map, double s, double y_s,
                                                         double t,
                                                         const std::function<double(double)>& payoff,
                                                         std::size_t mc_paths = 1000000,
                                                         std::uint64_t seed = 1,
                                                         std::vector<double> breakpoints = {});

// F_Y(t, (ln(g y / B) - g gamma t) / g) for Z_t = B exp(g Y_t + g gamma t) / g; 0 for y <= 0.
[[nodiscard]] double shifted_g_cdf(double y, double B, double g, double gamma, double t,
                                   const UnivariateLaw& driver_law);

struct Layer {
    double lo;
    double hi;
};

struct LayerSchedule {
    std::vector<Layer> layers;
    double display_unit = 1000.0;  // layers are printed in thousands

    void validate() const;
    // Layer boundaries in dollars for the reinsurance study.
    [[nodiscard]] static LayerSchedule reinsurance_default();
};

// int_a^b S*(y) dy.
[[nodiscard]] double layer_premium(const std::function<double(double)>& distorted_survival, double a,
                                   double b, const std::vector<double>& breakpoints = {});

struct PricingOperator {
    std::string name;  // identity, ph, wang, tukey_g
    double r = 1.0;
    double lambda = 0.0;
    double g = 0.0;
    double B = 0.01;
    double gamma = 0.0;
    double T = 1.0;
};

// Distorted survival of the risk law under op. The Tukey-g operator reads the
// driver in units of driver_unit (the risk law scaled by 1/driver_unit).
[[nodiscard]] std::function<double(double)> distorted_survival(const PricingOperator& op,
                                                               LawPtr risk, double driver_unit);
[[nodiscard]] std::vector<double> survival_breakpoints(const PricingOperator& op, double driver_unit);

struct PriceRow {
    Layer layer;
    std::string op;
    double premium;
};

// Rows ordered by layer, then operator.
[[nodiscard]] std::vector<PriceRow> price_table(LawPtr risk, const LayerSchedule& schedule,
                                                const std::vector<PricingOperator>& ops,
                                                double driver_unit = 1000.0);

struct CalibrationResult {
    double gamma = 0.0;
    double premium = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    std::size_t iterations = 0;
};

// Solves for gamma so that the Tukey-g layer premium equals target.
[[nodiscard]] CalibrationResult calibrate_gamma(double target, const Layer& layer, double g, double B,
                                                double T, LawPtr risk, double driver_unit = 1000.0,
                                                double lo = -20.0, double hi = 20.0);

}  // namespace qdiff
