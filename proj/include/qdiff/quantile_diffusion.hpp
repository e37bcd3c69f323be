#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdiff/driving.hpp"
#include "qdiff/quantile_core.hpp"

namespace qdiff {

// Z_t = Q_zeta(F(t, Y_t)).
//   target      law of zeta (static laws wrapped with make_static)
//   law         the F used inside the map
//   tag         whether law is the actual marginal of the driver
//   driver      coefficients of Y
//   driver_law  actual law of Y_t; the true marginal unless a stationary
//               or otherwise known law is supplied
struct CompositeMap {
    MarginalPtr target;
    MarginalPtr law;
    LawTag tag = LawTag::TrueLaw;
    DiffusionSpec driver;
    MarginalPtr driver_law;
    double t0 = 1e-3;

    void validate() const;
};

[[nodiscard]] CompositeMap true_law_map(const DiffusionSpec& driver, MarginalPtr target,
                                        double t0 = 1e-3);
[[nodiscard]] CompositeMap false_law_map(const DiffusionSpec& driver, MarginalPtr law,
                                         MarginalPtr target, double t0 = 1e-3);
[[nodiscard]] MarginalPtr tukey_target(TukeyFamily family, const TukeyParams& p);

// Family and parameters when the target is a static Tukey law.
struct TukeyTargetInfo {
    TukeyFamily family;
    TukeyParams params;
};
[[nodiscard]] std::optional<TukeyTargetInfo> tukey_target_info(const CompositeMap& map);

struct CoefficientPair {
    double alpha;
    double sigma_tilde;
};

[[nodiscard]] double random_level_value(const CompositeMap& map, double t, double y);
// Driver state mapped to z, i.e. Q(t, F_zeta(z)).
[[nodiscard]] double driver_state(const CompositeMap& map, double t, double z);

// Drift and volatility of Z for any map. All driver quantities are evaluated
// at y = Q(t, F_zeta(z)). A time-dependent target adds -d_tF_zeta / f_zeta.
[[nodiscard]] CoefficientPair sde_coefficients_general(const CompositeMap& map, double t, double z);

// Closed forms for standardized (A = 0, B = 1) Tukey targets.
[[nodiscard]] CoefficientPair g_sde_coefficients(const CompositeMap& map, double t, double z);
[[nodiscard]] CoefficientPair h_sde_coefficients(const CompositeMap& map, double t, double z);

// True-law Gaussian-type drivers with a standardized g target.
[[nodiscard]] CoefficientPair gbm_g_coefficients(double g, double t, double z);
[[nodiscard]] CoefficientPair ou_g_coefficients(double g, double theta, double t, double z);
[[nodiscard]] CoefficientPair unified_g_coefficients(double g, double driver_var, double sigma,
                                                     double z);
// h counterpart of the unified form: with x solving z = x exp(h x^2 / 2),
//   alpha = sigma^2/(2 Var) x e^{h x^2/2} (3h - 1 + h(h-1) x^2)
//   sigma_tilde = sigma/sqrt(Var) (1 + h x^2) e^{h x^2/2}.
[[nodiscard]] CoefficientPair unified_h_coefficients(double h, double driver_var, double sigma,
                                                     double z);

// Admissible state range for simulation. g targets keep g w + 1 >= 1e-12
// with w = (z - A)/B; everything else is unbounded.
struct StateBounds {
    double lo = -kInf;
    double hi = kInf;
    [[nodiscard]] double clip(double z) const { return z < lo ? lo : (z > hi ? hi : z); }
};
inline constexpr double kBoundaryEps = 1e-12;
[[nodiscard]] StateBounds g_state_bounds(double g, double A = 0.0, double B = 1.0);
[[nodiscard]] StateBounds state_bounds(const CompositeMap& map);

struct LimitSeries {
    std::string name;      // L1, L2, ..., or dalpha_dz / dsigma_dz
    std::string boundary;  // "left" (u -> 0) or "right" (u -> 1)
    std::vector<double> levels;
    std::vector<double> z;
    std::vector<double> values;
    bool bounded = true;
};

struct LipschitzReport {
    TukeyFamily family;
    double t;
    std::vector<LimitSeries> conditions;
    [[nodiscard]] bool all_bounded() const;
    [[nodiscard]] const LimitSeries& find(const std::string& name, const std::string& boundary) const;
};

// Boundedness heuristic: unbounded when the magnitudes grow strictly over the
// last five points without the increments collapsing, or a value is not finite.
[[nodiscard]] bool bounded_verdict(const std::vector<double>& values);

// Evaluates the limit expressions on u = 10^-k and 1 - 10^-k, k = 1..12.
[[nodiscard]] LipschitzReport lipschitz_diagnostics(const CompositeMap& map, TukeyFamily family,
                                                    double t = 1.0);

}  // namespace qdiff
