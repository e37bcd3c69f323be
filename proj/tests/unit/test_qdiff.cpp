#include <cmath>

#include "doctest.h"
#include "qdiff/errors.hpp"
#include "qdiff/quantile_diffusion.hpp"
#include "qdiff/special.hpp"

using namespace qdiff;

namespace {

// Ito's formula applied to phi(t, y) = Q_zeta(F(t, y)) with every derivative
// taken by finite differences of the map itself.
CoefficientPair ito_oracle(const CompositeMap& map, double t, double z) {
    const double y = driver_state(map, t, z);
    const auto phi = [&](double tt, double yy) { return random_level_value(map, tt, yy); };
    const double hy = 1e-4 * std::max(1.0, std::fabs(y)), ht = 1e-5;
    const double py = (phi(t, y + hy) - phi(t, y - hy)) / (2 * hy);
    const double pyy = (phi(t, y + hy) - 2 * phi(t, y) + phi(t, y - hy)) / (hy * hy);
    const double pt = (phi(t + ht, y) - phi(t - ht, y)) / (2 * ht);
    const double mu = map.driver.drift(t, y), s = map.driver.vol(t, y);
    return {pt + mu * py + 0.5 * s * s * pyy, s * py};
}

}  // namespace

TEST_CASE("general coefficients satisfy Ito's formula for true and false laws") {
    const auto tg = tukey_target(TukeyFamily::G, {0, 1, 0.5, 0});
    const auto th = tukey_target(TukeyFamily::H, {0, 1, 0, 0.2});
    const auto tgh = tukey_target(TukeyFamily::GH, {0.1, 1.3, -0.3, 0.1});
    const std::vector<CompositeMap> maps = {
        true_law_map(DiffusionSpec::bm(0.5, 1.0), tg),
        true_law_map(DiffusionSpec::ou(1.5, 0.5, 0.8), th),
        true_law_map(DiffusionSpec::gbm(0.05, 0.2, 1.0), tgh),
        false_law_map(DiffusionSpec::bm(0.0, 1.0), make_static(std::make_shared<NormalLaw>(0.5, 1.0)), tg),
    };
    for (const auto& map : maps) {
        for (double t : {0.3, 1.0}) {
            for (double u : {0.05, 0.4, 0.8}) {
                const double z = map.target->quantile(t, u);
                const auto c = sde_coefficients_general(map, t, z);
                const auto o = ito_oracle(map, t, z);
                CAPTURE(t);
                CAPTURE(z);
                CHECK(c.alpha == doctest::Approx(o.alpha).epsilon(1e-4).scale(1.0));
                CHECK(c.sigma_tilde == doctest::Approx(o.sigma_tilde).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("closed forms agree with the general coefficients") {
    const double g = 0.7, h = 0.3;
    for (const auto& drv : {DiffusionSpec::bm(0.2, 1.3), DiffusionSpec::ou(2.0, 0.0, 0.6, 0.4),
                            DiffusionSpec::gbm(0.1, 0.25, 1.0)}) {
        const auto mg = true_law_map(drv, tukey_target(TukeyFamily::G, {0, 1, g, 0}));
        const auto mh = true_law_map(drv, tukey_target(TukeyFamily::H, {0, 1, 0, h}));
        for (double t : {0.2, 1.5}) {
            for (double z : {-0.9, 0.0, 1.7}) {
                const auto a = g_sde_coefficients(mg, t, z), b = sde_coefficients_general(mg, t, z);
                CHECK(a.alpha == doctest::Approx(b.alpha).epsilon(1e-9));
                CHECK(a.sigma_tilde == doctest::Approx(b.sigma_tilde).epsilon(1e-9));
                const auto c = h_sde_coefficients(mh, t, z), d = sde_coefficients_general(mh, t, z);
                CHECK(c.alpha == doctest::Approx(d.alpha).epsilon(1e-9));
                CHECK(c.sigma_tilde == doctest::Approx(d.sigma_tilde).epsilon(1e-9));
                // Volatility parameter of the unified form: sigma for BM and OU, the
                // log-volatility for GBM.
                const double var = driver_variance(drv, 0.0, t);
                const double sig = drv.sigma;
                const auto ug = unified_g_coefficients(g, var, sig, z);
                const auto uh = unified_h_coefficients(h, var, sig, z);
                if (drv.kind == DriverKind::BmDrift || drv.kind == DriverKind::Gbm || drv.kind == DriverKind::Ou) {
                    CHECK(ug.alpha == doctest::Approx(a.alpha).epsilon(1e-9));
                    CHECK(ug.sigma_tilde == doctest::Approx(a.sigma_tilde).epsilon(1e-9));
                    CHECK(uh.alpha == doctest::Approx(c.alpha).epsilon(1e-9));
                    CHECK(uh.sigma_tilde == doctest::Approx(c.sigma_tilde).epsilon(1e-9));
                }
            }
        }
    }
    CHECK(gbm_g_coefficients(g, 0.8, 0.3).alpha ==
          doctest::Approx(g_sde_coefficients(true_law_map(DiffusionSpec::gbm(0.3, 1.0), tukey_target(TukeyFamily::G, {0, 1, g, 0})), 0.8, 0.3).alpha)
              .epsilon(1e-9));
}

TEST_CASE("the map sends driver states to target quantiles") {
    const auto map = true_law_map(DiffusionSpec::bm(0.0, 2.0), tukey_target(TukeyFamily::G, {0, 1, 0.5, 0}));
    const double t = 0.5;
    const double y = 2.0 * std::sqrt(t) * norm_quantile(0.3);
    CHECK(random_level_value(map, t, y) == doctest::Approx(tukey_g_quantile(0.3, {0, 1, 0.5, 0})));
    CHECK(driver_state(map, t, random_level_value(map, t, y)) == doctest::Approx(y));
}

TEST_CASE("state bounds keep the g target inside its support") {
    const auto b = g_state_bounds(0.5);
    CHECK(b.lo == doctest::Approx(-2.0 + 2e-12).epsilon(1e-14));
    CHECK(b.hi == INFINITY);
    CHECK(b.clip(-5.0) == b.lo);
    const auto n = g_state_bounds(-0.5, 1.0, 2.0);
    CHECK(n.hi == doctest::Approx(1.0 + 4.0).epsilon(1e-10));
    const auto mh = true_law_map(DiffusionSpec::bm(0, 1), tukey_target(TukeyFamily::H, {0, 1, 0, 0.1}));
    CHECK(state_bounds(mh).lo == -INFINITY);
}

TEST_CASE("maps are validated") {
    auto map = true_law_map(DiffusionSpec::bm(0, 1), tukey_target(TukeyFamily::G, {0, 1, 0.5, 0}));
    CHECK_NOTHROW(map.validate());
    map.t0 = 0.0;
    CHECK_THROWS_AS(map.validate(), DomainError);
    CHECK(tukey_target_info(true_law_map(DiffusionSpec::bm(0, 1), tukey_target(TukeyFamily::H, {0, 1, 0, 0.4})))->params.h ==
          0.4);
}

TEST_CASE("boundedness verdict") {
    CHECK(bounded_verdict({1, 1.5, 1.75, 1.875, 1.9375, 1.96875, 1.984}));
    CHECK_FALSE(bounded_verdict({1, 2, 4, 8, 16, 32, 64, 128}));
    CHECK_FALSE(bounded_verdict({1, 2, NAN}));
}

TEST_CASE("Lipschitz diagnostics cover both boundaries on the decade grid") {
    const auto map = true_law_map(DiffusionSpec::bm(0, 1), tukey_target(TukeyFamily::H, {0, 1, 0, 0.1}));
    const auto rep = lipschitz_diagnostics(map, TukeyFamily::H, 1.0);
    REQUIRE_FALSE(rep.conditions.empty());
    for (const auto& c : rep.conditions) {
        CHECK(c.levels.size() == 12);
        CHECK(c.values.size() == 12);
        CHECK((c.boundary == "left" || c.boundary == "right"));
    }
    // For BM with variance t, sigma_tilde = (1 + h x^2) e^{h x^2/2} / sqrt(t) and
    // z = x e^{h x^2/2}, so d sigma_tilde / dz = (2 h x / (1 + h x^2) + h x) / sqrt(t).
    const double h = 0.1;
    for (const char* side : {"left", "right"}) {
        const auto& ds = rep.find("dsigma_dz", side);
        for (std::size_t k = 0; k < ds.levels.size(); ++k) {
            const double x = norm_quantile(ds.levels[k]);
            CHECK(ds.values[k] == doctest::Approx(2 * h * x / (1 + h * x * x) + h * x).epsilon(1e-4));
        }
        CHECK_FALSE(ds.bounded);
    }
}
