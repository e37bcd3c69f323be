#include <cmath>
#include <memory>

#include "doctest.h"
#include "qdiff/errors.hpp"
#include "qdiff/quantile_core.hpp"
#include "qdiff/special.hpp"

using namespace qdiff;

namespace {

double num_deriv(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

const double kLevels[] = {1e-10, 1e-4, 0.01, 0.2, 0.5, 0.77, 0.99, 1 - 1e-6};

}  // namespace

TEST_CASE("Tukey quantile and CDF round trip in all three families") {
    const TukeyParams pg{0.3, 1.7, 0.6, 0.0}, ph{-1.0, 0.5, 0.0, 0.35}, pgh{0.0, 2.0, -0.4, 0.2};
    for (auto [fam, p] : {std::pair{TukeyFamily::G, pg}, {TukeyFamily::H, ph}, {TukeyFamily::GH, pgh}}) {
        for (double u : kLevels) {
            const double z = tukey_quantile(fam, u, p);
            CHECK(tukey_cdf(fam, z, p) == doctest::Approx(u).epsilon(1e-10));
        }
    }
}

TEST_CASE("Tukey quantile is the transform of a normal score") {
    const TukeyParams p{0.5, 2.0, 0.7, 0.1};
    for (double u : kLevels) {
        const double x = norm_quantile(u);
        const double ref = 0.5 + 2.0 * std::expm1(0.7 * x) / 0.7 * std::exp(0.1 * x * x / 2);
        CHECK(tukey_gh_quantile(u, p) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("Tukey densities are derivatives of their CDFs") {
    const TukeyParams p{0.0, 1.0, 0.8, 0.15};
    for (auto fam : {TukeyFamily::G, TukeyFamily::H, TukeyFamily::GH}) {
        TukeyParams q = p;
        if (fam == TukeyFamily::G) q.h = 0;
        if (fam == TukeyFamily::H) q.g = 0;
        for (double z : {-1.1, -0.3, 0.0, 0.4, 2.0, 5.0}) {
            const double fd = num_deriv([&](double y) { return tukey_cdf(fam, y, q); }, z);
            CHECK(tukey_density(fam, z, q) == doctest::Approx(fd).epsilon(1e-6));
            const double fdd = num_deriv([&](double y) { return tukey_density(fam, y, q); }, z, 1e-4);
            CHECK(tukey_density_dz(fam, z, q) == doctest::Approx(fdd).epsilon(1e-5).scale(1e-3));
        }
    }
}

TEST_CASE("transform derivatives match finite differences") {
    const TukeyParams p{0.2, 1.5, -0.6, 0.25};
    for (double x : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
        const auto tt = tukey_transform(x, p);
        CHECK(tt.value == doctest::Approx(tukey_transform_value(x, p)));
        CHECK(tt.d1 == doctest::Approx(num_deriv([&](double y) { return tukey_transform_value(y, p); }, x)).epsilon(1e-7));
        CHECK(tt.d2 == doctest::Approx(num_deriv([&](double y) { return tukey_transform(y, p).d1; }, x)).epsilon(1e-6));
    }
}

TEST_CASE("small g falls back to the normal limit") {
    const TukeyParams p{1.0, 2.0, 1e-12, 0.0};
    for (double u : {0.01, 0.5, 0.9}) CHECK(tukey_g_quantile(u, p) == doctest::Approx(1.0 + 2.0 * norm_quantile(u)));
}

TEST_CASE("h inversion through Lambert W matches bracketing") {
    const TukeyParams p{0.0, 1.0, 0.0, 0.6};
    for (double z : {-40.0, -3.0, -0.2, 0.0, 1.0, 7.5, 1e4}) CHECK(tukey_h_cdf(z, p) == doctest::Approx(tukey_h_cdf_bracketed(z, p)).epsilon(1e-12));
}

TEST_CASE("g support is a half line and the x score saturates beyond it") {
    const TukeyParams p{0.0, 1.0, 0.5, 0.0};
    const Interval s = tukey_support(TukeyFamily::G, p);
    CHECK(s.lo == doctest::Approx(-2.0));
    CHECK(s.hi == INFINITY);
    CHECK(tukey_x_of_z(TukeyFamily::G, -3.0, p) == -INFINITY);
    CHECK_THROWS_AS((void)tukey_cdf(TukeyFamily::G, -2.5, p), DomainError);
    CHECK(TukeyLaw(TukeyFamily::G, p).cdf(-2.5) == 0.0);
    const TukeyParams neg{0.0, 1.0, -0.5, 0.0};
    CHECK(tukey_support(TukeyFamily::G, neg).hi == doctest::Approx(2.0));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS((TukeyParams{0, 0.0, 0.1, 0}.validate()), DomainError);
    CHECK_THROWS_AS((TukeyParams{0, 1.0, 0.1, -0.1}.validate()), DomainError);
    CHECK_THROWS_AS((TukeyParams{NAN, 1.0, 0.1, 0}.validate()), DomainError);
    CHECK_NOTHROW(TukeyParams{0, 1.0, 0.1, 0.1}.validate());
    CHECK(tukey_family_from_string(to_string(TukeyFamily::GH)) == TukeyFamily::GH);
}

TEST_CASE("generalized inverse on continuous, flat and jump CDFs") {
    CHECK(generalized_inverse([](double x) { return norm_cdf(x); }, 0.3) == doctest::Approx(norm_quantile(0.3)));
    // Flat on [1, 2]: the infimum is the left end of the flat piece.
    const auto flat = [](double x) { return x < 1 ? std::max(0.0, x / 2) : (x < 2 ? 0.5 : std::min(1.0, x / 4)); };
    CHECK(generalized_inverse(flat, 0.5) == doctest::Approx(1.0));
    PointMassLaw pm(2.0);
    CHECK(generalized_inverse([&](double x) { return pm.cdf(x); }, 0.4) == 2.0);
    CHECK(generalized_inverse([](double) { return 0.5; }, 0.9) == INFINITY);
}

TEST_CASE("closed-form laws: round trip and densities") {
    const std::vector<std::shared_ptr<UnivariateLaw>> laws = {
        std::make_shared<NormalLaw>(1.0, 2.0), std::make_shared<UniformLaw>(-1.0, 3.0),
        std::make_shared<ParetoLaw>(2000.0, 1.2), std::make_shared<LogNormalLaw>(0.1, 0.7),
        std::make_shared<TukeyLaw>(TukeyFamily::GH, TukeyParams{0, 1, 0.4, 0.1}),
        std::make_shared<ScaledLaw>(std::make_shared<ParetoLaw>(2000.0, 1.2), 1e-3)};
    for (const auto& law : laws) {
        CAPTURE(law->name());
        for (double u : {0.05, 0.3, 0.5, 0.9}) {
            const double x = law->quantile(u);
            CHECK(law->cdf(x) == doctest::Approx(u).epsilon(1e-10));
            const double h = 1e-6 * std::max(1.0, std::fabs(x));
            CHECK(law->density(x) == doctest::Approx((law->cdf(x + h) - law->cdf(x - h)) / (2 * h)).epsilon(1e-5));
        }
    }
    ParetoLaw par(2000.0, 1.2);
    CHECK(par.survival(2000.0) == doctest::Approx(std::pow(0.5, 1.2)));
    NormalLaw n(1.0, 2.0);
    CHECK(n.log_density(-60.0) == doctest::Approx(-std::log(2.0 * kSqrt2Pi) - 61.0 * 61.0 / 8.0));
}

TEST_CASE("kernel density estimate integrates to one") {
    std::vector<double> xs;
    for (int i = 1; i < 400; ++i) xs.push_back(norm_quantile(i / 400.0));
    KdeLaw k(xs);
    CHECK(k.bandwidth() > 0);
    CHECK(k.cdf(-20) == doctest::Approx(0.0));
    CHECK(k.cdf(20) == doctest::Approx(1.0));
    CHECK(k.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(k.density(0.0) == doctest::Approx(kInvSqrt2Pi).epsilon(0.05));
}

TEST_CASE("rank transmutation fixes the ends and is the identity for equal laws") {
    NormalLaw a(0, 1), b(0.5, 2);
    CHECK(rank_transmutation_map(a, b, 0.0) == 0.0);
    CHECK(rank_transmutation_map(a, b, 1.0) == 1.0);
    CHECK(rank_transmutation_map(a, a, 0.37) == doctest::Approx(0.37));
    CHECK(rank_transmutation_map(a, b, 0.6) == doctest::Approx(norm_cdf((norm_quantile(0.6) - 0.5) / 2)));
}

TEST_CASE("elongation properties of the h factor and failures of the g factor") {
    const std::vector<double> grid = {0.01, 0.1, 0.5, 1, 2, 4};
    const auto h = [](double w) { return std::exp(0.3 * w * w / 2); };
    CHECK(elongation_check(h, grid).all());
    const auto g = [](double w) { return w == 0 ? 1.0 : std::expm1(0.5 * w) / (0.5 * w); };
    CHECK_FALSE(elongation_check(g, grid).symmetric);
    CHECK_FALSE(elongation_check([](double) { return 1.0; }, grid).convex);
}
