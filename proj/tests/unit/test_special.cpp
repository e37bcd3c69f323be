#include <cmath>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/lambert_w.hpp>

#include "doctest.h"
#include "qdiff/errors.hpp"
#include "qdiff/special.hpp"

using namespace qdiff;

TEST_CASE("norm_quantile agrees with an independent erf inverse") {
    for (double u : {1e-300, 1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97575, 0.999, 1 - 1e-9}) {
        const double ref = -kSqrt2 * boost::math::erfc_inv(2.0 * u);
        CHECK(norm_quantile(u) == doctest::Approx(ref).epsilon(1e-13));
    }
    CHECK(norm_quantile(0.0) == -INFINITY);
    CHECK(norm_quantile(1.0) == INFINITY);
    CHECK_THROWS_AS((void)norm_quantile(1.5), DomainError);
    CHECK_THROWS_AS((void)norm_quantile(-0.1), DomainError);
}

TEST_CASE("norm_cdf inverts norm_quantile and matches erfc") {
    for (double x : {-37.0, -8.0, -1.3, 0.0, 0.4, 2.5, 6.0}) {
        CHECK(norm_cdf(x) == doctest::Approx(0.5 * std::erfc(-x / kSqrt2)).epsilon(1e-14));
        if (std::fabs(x) < 5) CHECK(norm_quantile(norm_cdf(x)) == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK(norm_pdf(0.0) == doctest::Approx(kInvSqrt2Pi));
}

TEST_CASE("erf_inv against boost") {
    for (double y : {-0.999999, -0.5, 0.0, 0.25, 0.9, 0.99999999})
        CHECK(erf_inv(y) == doctest::Approx(boost::math::erf_inv(y)).epsilon(1e-13));
}

TEST_CASE("lambert_w0 against boost and its defining identity") {
    for (double x : {-0.36787944117144233, -0.2, 0.0, 1e-8, 0.5, 1.0, 10.0, 1e6}) {
        const double w = lambert_w0(x);
        CHECK(w == doctest::Approx(boost::math::lambert_w0(x)).epsilon(1e-12));
        CHECK(w * std::exp(w) == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK_THROWS_AS((void)lambert_w0(-0.5), DomainError);
}

TEST_CASE("student_t_cdf closed forms for one and two degrees of freedom") {
    for (double x : {-5.0, -1.0, 0.0, 0.3, 2.0}) {
        CHECK(student_t_cdf(x, 1.0) == doctest::Approx(0.5 + std::atan(x) / kPi).epsilon(1e-13));
        CHECK(student_t_cdf(x, 2.0) == doctest::Approx(0.5 + x / (2.0 * std::sqrt(2.0 + x * x))).epsilon(1e-13));
    }
}
