#include <cmath>

#include "doctest.h"
#include "qdiff/distortion.hpp"
#include "qdiff/errors.hpp"
#include "qdiff/quadrature.hpp"
#include "qdiff/special.hpp"

using namespace qdiff;

namespace {

CompositeMap bm_g_map(double mu = 0.3, double g = 0.5) {
    return true_law_map(DiffusionSpec::bm(mu, 1.0), tukey_target(TukeyFamily::G, {0, 1, g, 0}), 0.01);
}

}  // namespace

TEST_CASE("Wang transforms") {
    CHECK(wang1(0.5, 0.1) == doctest::Approx(0.5398278372770290));
    CHECK(wang1(0.0, 0.7) == 0.0);
    CHECK(wang1(1.0, 0.7) == 1.0);
    CHECK(wang2(0.3, 0.2, 1e7) == doctest::Approx(wang1(0.3, 0.2)).epsilon(1e-6));
    CHECK(wang2(0.5, 0.0, 3.0) == doctest::Approx(0.5));
    const DiscreteLaw one{{1.0}, {1.0}};
    for (double u : {0.01, 0.3, 0.75}) CHECK(wang_gen(u, 0.4, one) == doctest::Approx(wang1(u, 0.4)).epsilon(1e-12));
    const DiscreteLaw mix{{0.5, 1.0, 2.0}, {0.2, 0.5, 0.3}};
    for (double u : {0.001, 0.2, 0.5, 0.999}) {
        const double x = wang_gen_G_inverse(u, mix);
        double G = 0;
        for (std::size_t j = 0; j < 3; ++j) G += mix.probs[j] * norm_cdf(x * mix.values[j]);
        CHECK(G == doctest::Approx(u).epsilon(1e-12));
    }
    CHECK_THROWS_AS((DiscreteLaw{{1.0, -1.0}, {0.5, 0.5}}.validate()), DomainError);
    CHECK_THROWS_AS((DiscreteLaw{{1.0, 2.0}, {0.5, 0.6}}.validate()), DomainError);
}

TEST_CASE("proportional hazards transform") {
    CHECK(ph_transform(0.25, 0.9245) == doctest::Approx(std::exp(0.9245 * std::log(0.25))));
    CHECK(ph_transform(0.25, 0.9245) == doctest::Approx(0.2776).epsilon(1e-3));
    CHECK(ph_transform(1.0, 0.5) == 1.0);
    CHECK_THROWS_AS((void)ph_transform(0.5, 0.0), DomainError);
}

TEST_CASE("Esscher tilt of a normal law is a shifted normal") {
    NormalLaw n(0.0, 1.0);
    for (double x : {-2.0, 0.0, 0.5, 1.7}) CHECK(esscher_cdf(x, n, 0.5) == doctest::Approx(norm_cdf(x - 0.5)).epsilon(1e-8));
    NormalLaw m(1.0, 2.0);
    CHECK(esscher_cdf(2.0, m, 0.25) == doctest::Approx(norm_cdf((2.0 - 1.0 - 0.25 * 4.0) / 2.0)).epsilon(1e-8));
}

TEST_CASE("Esscher tilt of a heavy tail diverges") {
    ParetoLaw p(2000.0, 1.2);
    CHECK_THROWS_AS((void)esscher_cdf(1000.0, p, 0.01), DivergenceError);
    CHECK_NOTHROW((void)esscher_cdf(1000.0, p, -0.01));
}

TEST_CASE("Godin distortion") {
    NormalLaw a(0, 1), b(0.5, 1);
    for (double u : {0.1, 0.5, 0.9}) {
        CHECK(godin_distortion(u, a, a) == doctest::Approx(u));
        // 1 - Phi(Phi^-1(1-u) - 0.5) = Phi(Phi^-1(u) + 0.5)
        CHECK(godin_distortion(u, a, b) == doctest::Approx(wang1(u, 0.5)));
    }
}

TEST_CASE("distortion operators are monotone maps of the unit interval") {
    const std::vector<DistortionOperator> ops = {
        make_wang1(0.3), make_wang2(-0.2, 4.0), make_wang_gen(0.2, {{0.5, 1.5}, {0.5, 0.5}}), make_ph(0.8),
        make_esscher(std::make_shared<NormalLaw>(), 0.4),
        make_godin(std::make_shared<NormalLaw>(), std::make_shared<NormalLaw>(0.2, 1.5))};
    for (const auto& op : ops) {
        CAPTURE(op.label);
        CHECK(check_distortion(op.nu, 199).ok());
    }
    CHECK_FALSE(check_distortion([](double u) { return u * (1 - u) * 4; }, 99).ok());
    CHECK(to_string(DistortionKind::PH) == "ph");
}

TEST_CASE("quantile-induced distortion is the identity when target and driver laws agree") {
    const double t = 0.5;
    const auto drv = DiffusionSpec::bm(0.0, 1.0);
    const auto map = true_law_map(drv, marginal_law(drv), 0.01);
    const auto op = make_quantile_induced(map, t);
    for (double u : {0.0, 0.1, 0.5, 0.93, 1.0}) CHECK(op(u) == doctest::Approx(u).epsilon(1e-12));
}

TEST_CASE("false-law distortion is a Wang transform") {
    // F = N(-lambda, 1) in place of the N(0, t) law; zeta standard normal.
    const double t = 1.0, lambda = 0.6;
    const auto drv = DiffusionSpec::bm(0.0, 1.0);
    const auto map = false_law_map(drv, make_static(std::make_shared<NormalLaw>(-lambda, 1.0)),
                                   make_static(std::make_shared<NormalLaw>()), 0.01);
    const auto op = make_quantile_induced(map, t);
    CHECK(check_distortion(op.nu, 99).ok());
    for (double u : {0.05, 0.5, 0.8}) CHECK(op(u) == doctest::Approx(wang1(u, -lambda)).epsilon(1e-10));
}

TEST_CASE("marginal quantile-induced CDF needs matching supports") {
    CHECK_THROWS_AS((void)quantile_induced_cdf(bm_g_map(), 0.5, 0.1), DomainError);
    const auto drv = DiffusionSpec::bm(0.0, 1.0);
    const auto h = true_law_map(drv, tukey_target(TukeyFamily::H, {0, 1, 0, 0.2}), 0.01);
    CHECK(quantile_induced_cdf(h, 0.5, 0.3) == doctest::Approx(tukey_h_cdf(0.3, {0, 1, 0, 0.2})));
}

TEST_CASE("conditional CDF: closed form against the generic transform") {
    const auto map = bm_g_map();
    for (double ys : {-1.2, 0.0, 0.8})
        for (double y : {-1.5, -0.3, 0.5, 2.5})
            CHECK(bm_tukey_conditional_cdf(map, 0.4, ys, 1.0, y) ==
                  doctest::Approx(conditional_induced_cdf_generic(map, 0.4, ys, 1.0, y)).epsilon(1e-10));
}

TEST_CASE("induced transition density integrates to one and is the CDF derivative") {
    const auto map = bm_g_map();
    const double s = 0.3, ys = 0.4, t = 0.9;
    const double lo = -2.0 + 1e-12;
    const auto f = [&](double y) { return induced_transition_density(map, s, ys, t, y); };
    CHECK(integrate(f, lo, kInf, 1e-10).value == doctest::Approx(1.0).epsilon(1e-8));
    for (double y : {-1.0, 0.2, 1.5, 4.0}) {
        const double h = 1e-5;
        const double dF =
            (conditional_induced_cdf_generic(map, s, ys, t, y + h) - conditional_induced_cdf_generic(map, s, ys, t, y - h)) / (2 * h);
        CHECK(f(y) == doctest::Approx(dF).epsilon(1e-6));
        const double lr = likelihood_ratio(map, s, ys, t, y);
        CHECK(lr == doctest::Approx(dF / base_transition_density(map, s, ys, t, y)).epsilon(1e-5));
    }
    CHECK_THROWS_AS((void)quantile_induced_cdf(map, s, ys, t, 0.0), DomainError);
    CHECK(likelihood_ratio(map, s, ys, t, -3.0) == 0.0);
    CHECK(log_likelihood_ratio(map, s, ys, t, -3.0) == -INFINITY);
}

TEST_CASE("likelihood ratio has unit mean under the base law") {
    const auto map = bm_g_map();
    const double s = 0.2, ys = 0.0, t = 1.0;
    const auto integrand = [&](double y) {
        return std::exp(log_likelihood_ratio(map, s, ys, t, y) + base_transition_log_density(map, s, ys, t, y));
    };
    CHECK(integrate(integrand, -2.0 + 1e-12, kInf, 1e-10).value == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("distorted expectation by quadrature and Monte Carlo") {
    const auto map = bm_g_map();
    const auto r = distorted_expectation(map, 0.3, 0.2, 1.0, [](double y) { return std::max(y - 0.5, 0.0); }, 40000, 5);
    CHECK(r.agree);
    CHECK(r.mc_stderr > 0);
    CHECK(std::fabs(r.quadrature - r.mc_mean) <= 3 * r.mc_stderr);
}

TEST_CASE("shifted g CDF is the plug-in formula and increases with gamma") {
    LogNormalLaw drv(0.0, 0.5);
    const double B = 0.01, g = 0.08, T = 1.0;
    for (double y : {0.005, 0.02, 0.3}) {
        const double gamma = -3.0;
        const double x = (std::log(g * y / B) - g * gamma * T) / g;
        CHECK(shifted_g_cdf(y, B, g, gamma, T, drv) == doctest::Approx(drv.cdf(x)));
        // Larger gamma moves Z up, so its CDF falls.
        CHECK(shifted_g_cdf(y, B, g, gamma + 1, T, drv) <= shifted_g_cdf(y, B, g, gamma, T, drv));
    }
    CHECK(shifted_g_cdf(-1.0, B, g, 0.0, T, drv) == 0.0);
}

TEST_CASE("layer premiums") {
    const double theta = 2000, alpha = 1.2;
    auto risk = std::make_shared<ParetoLaw>(theta, alpha);
    const auto S = distorted_survival({"identity"}, risk, 1000.0);
    const auto exact = [&](double a, double b) {
        const auto G = [&](double y) { return -theta / (alpha - 1) * std::pow(theta / (theta + y), alpha - 1); };
        return G(b) - G(a);
    };
    CHECK(layer_premium(S, 0, 50000) == doctest::Approx(exact(0, 50000)).epsilon(1e-9));
    CHECK(layer_premium(S, 1e6, 2e6) == doctest::Approx(exact(1e6, 2e6)).epsilon(1e-9));
    CHECK(layer_premium(S, 0, 3e5) == doctest::Approx(layer_premium(S, 0, 1e5) + layer_premium(S, 1e5, 3e5)).epsilon(1e-9));
    const auto ph = distorted_survival({"ph", 0.9}, risk, 1000.0);
    CHECK(layer_premium(ph, 0, 50000) > layer_premium(S, 0, 50000));
    const auto w = distorted_survival({"wang", 1.0, 0.1}, risk, 1000.0);
    CHECK(w(5000) == doctest::Approx(wang1(risk->survival(5000), 0.1)));
}

TEST_CASE("price table rows are ordered by layer then operator") {
    auto risk = std::make_shared<ParetoLaw>(2000.0, 1.2);
    LayerSchedule sch{{{0, 50000}, {50000, 100000}}};
    CHECK_NOTHROW(sch.validate());
    const auto rows = price_table(risk, sch, {{"identity"}, {"ph", 0.9245}});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].op == "identity");
    CHECK(rows[1].op == "ph");
    CHECK(rows[2].layer.lo == 50000);
    CHECK(LayerSchedule::reinsurance_default().layers.size() == 10);
    CHECK_THROWS_AS((LayerSchedule{{{100, 50}}}.validate()), DomainError);
}

TEST_CASE("gamma calibration recovers a known gamma and reports failure") {
    auto risk = std::make_shared<ParetoLaw>(2000.0, 1.2);
    const Layer layer{200000, 300000};
    const double g = 0.08, B = 0.01, T = 1.0;
    PricingOperator op{"tukey_g", 1.0, 0.0, g, B, -7.5, T};
    const double target = layer_premium(distorted_survival(op, risk, 1000.0), layer.lo, layer.hi,
                                        survival_breakpoints(op, 1000.0));
    const auto r = calibrate_gamma(target, layer, g, B, T, risk);
    CHECK(r.gamma == doctest::Approx(-7.5).epsilon(1e-6));
    CHECK(r.premium == doctest::Approx(target).epsilon(1e-8));
    CHECK_THROWS_AS((void)calibrate_gamma(2e5, layer, g, B, T, risk), CalibrationError);
}
