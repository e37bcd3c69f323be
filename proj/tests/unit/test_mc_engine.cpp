#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "qdiff/errors.hpp"
#include "qdiff/mc_engine.hpp"
#include "qdiff/special.hpp"

using namespace qdiff;

TEST_CASE("time grid") {
    const auto g = TimeGrid::with_dt(0.01, 1.0, 1e-3);
    CHECK(g.steps == 990);
    CHECK(g.time(g.steps) == doctest::Approx(1.0));
    CHECK_THROWS_AS((TimeGrid{1.0, 0.5, 10}.validate()), DomainError);
}

TEST_CASE("parallel_for covers the range once and rethrows") {
    std::vector<int> hits(1001, 0);
    detail::parallel_for(hits.size(), 4, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(detail::parallel_for(10, 2, [](std::size_t, std::size_t) { throw BlowUpError("x"); }), BlowUpError);
}

TEST_CASE("Euler-Maruyama has first weak order on a linear drift") {
    // dZ = Z dt over a unit interval from Z = 1: the scheme gives (1 + dt)^N against e.
    const auto err = [](std::size_t steps) {
        const auto b = euler_maruyama([](double, double z) { return CoefficientPair{z, 0.0}; }, 1.0,
                                      TimeGrid{1.0, 2.0, steps}, 2, 1, {{2.0}, {}, 1});
        return std::fabs(b.at(0, 0) - std::exp(1.0));
    };
    const double ratio = err(10) / err(100);
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 30.0);
}

TEST_CASE("Euler-Maruyama on geometric Brownian motion matches the exact mean") {
    const double a = 0.3, s = 0.4;
    const auto b = euler_maruyama([&](double, double z) { return CoefficientPair{a * z, s * z}; }, 1.0,
                                  TimeGrid{1.0, 2.0, 200}, 40000, 11, {{2.0}, {}, 0});
    const auto col = b.column(0);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
    const double se = std::exp(a) * std::sqrt(std::expm1(s * s) / col.size());
    CHECK(std::fabs(mean - std::exp(a)) < 4 * se + std::exp(a) * a * a / 400);
}

TEST_CASE("paths are reproducible and independent of the thread count") {
    const auto coeff = [](double, double z) { return CoefficientPair{-z, 1.0}; };
    const auto a = euler_maruyama(coeff, 0.0, TimeGrid{1.0, 2.0, 50}, 37, 5, {{}, {}, 1});
    const auto b = euler_maruyama(coeff, 0.0, TimeGrid{1.0, 2.0, 50}, 37, 5, {{}, {}, 4});
    CHECK(a.values == b.values);
    CHECK(a.times.size() == 51);
    const auto c = euler_maruyama(coeff, 0.0, TimeGrid{1.0, 2.0, 50}, 37, 6, {{}, {}, 1});
    CHECK(a.values != c.values);
}

TEST_CASE("recorded times snap to the grid and the CSV is time-major") {
    const auto b = euler_maruyama([](double, double) { return CoefficientPair{1.0, 0.0}; }, 0.0,
                                  TimeGrid{1.0, 2.0, 100}, 2, 1, {{1.251, 2.0}, {}, 1});
    REQUIRE(b.times.size() == 2);
    CHECK(b.times[0] == doctest::Approx(1.25));
    CHECK(b.at(1, 0) == doctest::Approx(0.25));
    CHECK(b.time_index(2.0) == 1);
    std::ostringstream os;
    write_csv(b, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,path_id,value");
    std::getline(is, line);
    CHECK(line.rfind("1.25,0,", 0) == 0);
}

TEST_CASE("blow-up is reported") {
    CHECK_THROWS_AS((void)euler_maruyama([](double, double z) { return CoefficientPair{z * z, 0.0}; }, 1.0,
                                         TimeGrid{1.0, 3.0, 2000}, 1, 1, {{}, {}, 1}),
                    BlowUpError);
}

TEST_CASE("transform paths are the map applied to driver paths") {
    const auto map = true_law_map(DiffusionSpec::bm(0.5, 1.0), tukey_target(TukeyFamily::G, {0, 1, 0.5, 0}), 0.01);
    const TimeGrid grid{0.01, 1.0, 99};
    SimOptions opt{{0.5, 1.0}, {}, 1};
    const auto y = simulate_driver_paths(map.driver, grid, 50, 3, opt);
    const auto z = simulate_transform_paths(map, grid, 50, 3, opt);
    for (std::size_t p = 0; p < 50; ++p)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(z.at(p, j) == doctest::Approx(random_level_value(map, y.times[j], y.at(p, j))).epsilon(1e-12));
}

TEST_CASE("the unified fast path reproduces the generic scheme") {
    const TimeGrid grid{0.01, 1.0, 400};
    SimOptions opt{{0.25, 1.0}, {}, 1};
    {
        const double g = 0.5;
        const auto map = true_law_map(DiffusionSpec::bm(0.5, 1.0), tukey_target(TukeyFamily::G, {0, 1, g, 0}), 0.01);
        opt.bounds = state_bounds(map);
        const auto fast = simulate_unified_paths(map, {TukeyFamily::G, g, [](double t) { return t; }, 1.0}, grid, 200, 9, opt);
        const auto ref = euler_maruyama([&](double t, double z) { return unified_g_coefficients(g, t, 1.0, z); },
                                        [&](std::size_t, PhiloxEngine& e) { return exact_start(map, 0.01, e); }, grid,
                                        200, 9, opt);
        for (std::size_t i = 0; i < ref.values.size(); ++i)
            CHECK(fast.values[i] == doctest::Approx(ref.values[i]).epsilon(1e-9));
    }
    {
        const double h = 0.1;
        const auto map = true_law_map(DiffusionSpec::bm(0.0, 1.0), tukey_target(TukeyFamily::H, {0, 1, 0, h}), 0.01);
        opt.bounds = state_bounds(map);
        const auto fast = simulate_unified_paths(map, {TukeyFamily::H, h, [](double t) { return t; }, 1.0}, grid, 200, 9, opt);
        const auto ref = euler_maruyama([&](double t, double z) { return unified_h_coefficients(h, t, 1.0, z); },
                                        [&](std::size_t, PhiloxEngine& e) { return exact_start(map, 0.01, e); }, grid,
                                        200, 9, opt);
        for (std::size_t i = 0; i < ref.values.size(); ++i)
            CHECK(fast.values[i] == doctest::Approx(ref.values[i]).epsilon(1e-9));
    }
}

TEST_CASE("SDE and transform marginals agree in law") {
    const auto map = true_law_map(DiffusionSpec::bm(0.5, 1.0), tukey_target(TukeyFamily::G, {0, 1, 0.5, 0}), 0.01);
    const auto grid = TimeGrid::with_dt(0.01, 1.0, 2e-3);
    SimOptions opt{{1.0}, state_bounds(map), 0};
    const auto sde = simulate_sde_paths(map, grid, 20000, 21, opt);
    const auto law = tukey_target(TukeyFamily::G, {0, 1, 0.5, 0});
    const auto ks = ks_one_sample(sde.column(0), [&](double z) { return law->cdf(1.0, z); });
    CHECK(ks.pass_1);
}

TEST_CASE("Kolmogorov-Smirnov statistics") {
    CHECK(ks_c(0.01) == doctest::Approx(std::sqrt(-std::log(0.005) / 2)));
    std::vector<double> a(1000);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = (i + 0.5) / a.size();
    CHECK(ks_one_sample(a, [](double u) { return std::clamp(u, 0.0, 1.0); }).statistic == doctest::Approx(0.5 / a.size()));
    const auto same = ks_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.pass_1);
    std::vector<double> shifted = a;
    for (auto& v : shifted) v += 0.5;
    CHECK(ks_two_sample(a, shifted).statistic == doctest::Approx(0.5).epsilon(0.01));
    CHECK_FALSE(ks_two_sample(a, shifted).pass_5);
}

TEST_CASE("empirical quantile process") {
    CHECK(empirical_quantile_process({4, 1, 3, 2}, [](double) { return 1.5; }, 0.5) == doctest::Approx(1.0));
    CHECK(empirical_quantile_process_sorted({1, 2, 3, 4}, [](double) { return 3.0; }, 0.51) == doctest::Approx(0.0));
}

TEST_CASE("Bahadur remainder decays close to n^(-3/4)") {
    // One path is noisy; the median slope over independent streams is not.
    NormalLaw law;
    std::vector<double> slopes;
    for (int s = 0; s < 9; ++s) {
        const auto rep = bahadur_remainder(iid_sample(law, std::size_t{1} << 18, 300 + s), 0.5, law, 8, 18);
        CHECK(rep.n.size() == 11);
        slopes.push_back(rep.slope);
    }
    std::sort(slopes.begin(), slopes.end());
    CHECK(slopes[4] < -0.55);
    CHECK(slopes[4] > -0.95);
}

TEST_CASE("empirical law of a custom driver") {
    const auto spec = DiffusionSpec::custom([](double, double y) { return -y; }, [](double, double) { return 1.0; }, 0.0);
    const auto law = empirical_marginal_law(spec, 1.0, 4000, 2, 200);
    const double v = (1 - std::exp(-2.0)) / 2;
    CHECK(law->cdf(0.0) == doctest::Approx(0.5).epsilon(0.05));
    CHECK(law->cdf(std::sqrt(v)) == doctest::Approx(norm_cdf(1.0)).epsilon(0.05));
}
