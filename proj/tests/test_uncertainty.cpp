#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riskplan/distribution.hpp"
#include "riskplan/envgen.hpp"
#include "riskplan/risk_map.hpp"
#include "test_util.hpp"

using namespace riskplan;
using namespace riskplan::testutil;

TEST_CASE("closed-form raw moments") {
    const auto gauss = ParamDistribution::gaussian(0.0, 1.0);
    CHECK(gauss.raw_moment(2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gauss.raw_moment(4) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(gauss.raw_moment(1) == doctest::Approx(0.0));
    CHECK(gauss.raw_moment(6) == doctest::Approx(15.0).epsilon(1e-14));

    const auto uni = ParamDistribution::uniform(0.3, 0.4);
    CHECK(uni.raw_moment(2) == doctest::Approx(0.037 / 0.3).epsilon(1e-13));
    CHECK(uni.raw_moment(1) == doctest::Approx(0.35).epsilon(1e-13));

    const auto beta = ParamDistribution::beta(9.0, 0.5);
    CHECK(beta.raw_moment(1) == doctest::Approx(9.0 / 9.5).epsilon(1e-14));
    CHECK(beta.raw_moment(2) == doctest::Approx((9.0 / 9.5) * (10.0 / 10.5)).epsilon(1e-14));

    for (const auto& d : {gauss, uni, beta}) CHECK(d.raw_moment(0) == 1.0);

    // shifted gaussian via the binomial expansion
    const auto shifted = ParamDistribution::gaussian(2.0, 3.0);
    CHECK(shifted.raw_moment(1) == doctest::Approx(2.0));
    CHECK(shifted.raw_moment(2) == doctest::Approx(4.0 + 3.0));
    CHECK(shifted.raw_moment(3) == doctest::Approx(8.0 + 3.0 * 2.0 * 3.0));  // mu^3 + 3 mu var
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(ParamDistribution::uniform(0.4, 0.4), std::invalid_argument);
    CHECK_THROWS_AS(ParamDistribution::gaussian(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ParamDistribution::beta(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ParamDistribution::beta(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("moments agree with Monte Carlo") {
    struct Case {
        ParamDistribution d;
        const char* name;
    };
    const Case cases[] = {{ParamDistribution::uniform(0.3, 0.4), "uniform"},
                          {ParamDistribution::gaussian(0.0, 1.0), "gaussian"},
                          {ParamDistribution::beta(9.0, 0.5), "beta"}};
    const int n = 1000000;
    for (const auto& c : cases) {
        CAPTURE(c.name);
        Rng rng = make_rng(42);
        std::vector<double> sum(11, 0.0), sumsq(11, 0.0);
        for (int i = 0; i < n; ++i) {
            const double w = c.d.sample(rng);
            double p = 1.0;
            for (int k = 1; k <= 10; ++k) {
                p *= w;
                sum[k] += p;
                sumsq[k] += p * p;
            }
        }
        for (int k = 1; k <= 10; ++k) {
            const double mean = sum[k] / n;
            const double var = sumsq[k] / n - mean * mean;
            const double stderr_k = std::sqrt(std::max(var, 0.0) / n);
            CAPTURE(k);
            CHECK(std::abs(mean - c.d.raw_moment(k)) <= 5.0 * stderr_k + 1e-12);
        }
    }
}

TEST_CASE("specific Monte Carlo bounds from the contract") {
    Rng rng = make_rng(7);
    const auto uni = ParamDistribution::uniform(0.3, 0.4);
    double acc = 0.0;
    for (int i = 0; i < 1000000; ++i) acc += uni.sample(rng);
    CHECK(std::abs(acc / 1e6 - 0.35) < 1e-3);

    const auto gauss = ParamDistribution::gaussian(0.0, 1.0);
    acc = 0.0;
    for (int i = 0; i < 1000000; ++i) {
        const double w = gauss.sample(rng);
        acc += w * w * w * w;
    }
    CHECK(std::abs(acc / 1e6 - 3.0) < 0.05);
}

TEST_CASE("sampling is deterministic for a fixed seed") {
    const auto beta = ParamDistribution::beta(9.0, 0.5);
    Rng a = make_rng(123), b = make_rng(123);
    for (int i = 0; i < 100; ++i) CHECK(beta.sample(a) == beta.sample(b));
}

TEST_CASE("moment substitution reproduces the worked ellipse moments") {
    const TriPoly p = make_tri({{0, 0, 2, 1.0}, {2, 0, 0, -0.5}, {0, 2, 0, -1.0}});
    const auto gauss = ParamDistribution::gaussian(0.0, 1.0);

    const PlanePoly mean = expect_poly(p, gauss);
    CHECK(coeffwise_close(mean, make_plane({{2, 0, -0.5}, {0, 2, -1.0}, {0, 0, 1.0}})));

    const PlanePoly second = expect_square(p, gauss);
    CHECK(coeffwise_close(
        second,
        make_plane({{4, 0, 0.25}, {0, 4, 1.0}, {2, 2, 1.0}, {2, 0, -1.0}, {0, 2, -2.0}, {0, 0, 3.0}})));
}

TEST_CASE("moment substitution edge cases") {
    const auto uni = ParamDistribution::uniform(0.3, 0.4);

    const TriPoly omega_free = make_tri({{2, 1, 0, 3.0}, {0, 0, 0, -1.0}});
    CHECK(coeffwise_close(expect_poly(omega_free, uni), make_plane({{2, 1, 3.0}, {0, 0, -1.0}})));
    CHECK(coeffwise_close(expect_square(omega_free, uni),
                          expect_poly(omega_free * omega_free, uni)));

    const TriPoly w2 = make_tri({{0, 0, 2, 1.0}});
    const PlanePoly c = expect_poly(w2, uni);
    REQUIRE(c.terms().size() == 1);
    CHECK(c.terms()[0].c == doctest::Approx(0.037 / 0.3).epsilon(1e-13));

    const TriPoly w = make_tri({{0, 0, 1, 1.0}});
    const PlanePoly one = expect_square(w, ParamDistribution::gaussian(0.0, 1.0));
    REQUIRE(one.terms().size() == 1);
    CHECK(one.terms()[0].c == doctest::Approx(1.0));
}

TEST_CASE("expectation is linear") {
    Rng rng = make_rng(99);
    const auto dists = {ParamDistribution::uniform(0.3, 0.4), ParamDistribution::gaussian(0.5, 2.0),
                        ParamDistribution::beta(9.0, 0.5)};
    for (const auto& d : dists) {
        for (int it = 0; it < 50; ++it) {
            const TriPoly p = random_tri_poly(rng);
            const TriPoly q = random_tri_poly(rng);
            const double a = uniform_double(rng, -2, 2), b = uniform_double(rng, -2, 2);
            const PlanePoly lhs = expect_poly((a * p) + (b * q), d);
            const PlanePoly rhs = (a * expect_poly(p, d)) + (b * expect_poly(q, d));
            CHECK(coeffwise_close(lhs, rhs, 1e-12));
        }
    }
}

TEST_CASE("variance is nonnegative on workspace grids") {
    for (const Environment& env : {circle_env(), ellipse_env(), heart_env(), ring_env()}) {
        for (const auto& ob : env.obstacles) {
            const PlanePoly mean = expect_poly(ob.poly, ob.dist);
            const PlanePoly second = expect_square(ob.poly, ob.dist);
            for (int r = 0; r < 64; ++r) {
                for (int c = 0; c < 64; ++c) {
                    const Point pt{env.bounds.xmin + (c + 0.5) / 64.0 * env.bounds.width(),
                                   env.bounds.ymin + (r + 0.5) / 64.0 * env.bounds.height()};
                    const double m1 = poly_eval(mean, pt);
                    const double m2 = poly_eval(second, pt);
                    REQUIRE(m2 - m1 * m1 >= -1e-9);
                }
            }
        }
    }
}
