#include <doctest.h>

#include <cmath>

#include "quadrature.hpp"

using namespace hphi4;

TEST_CASE("gauss-legendre panels are exact on smooth integrands") {
    auto r = quad::integrate([](double x) { return x * x * x * x; }, 0.0, 1.0);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(0.2).epsilon(1e-14));

    auto g = quad::integrate([](double x) { return std::exp(-x * x); }, -8.0, 8.0);
    CHECK(g.converged);
    CHECK(g.value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("oscillatory integrand converges under subdivision") {
    auto r = quad::integrate([](double x) { return std::sin(50.0 * x); }, 0.0, M_PI);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx((1.0 - std::cos(50.0 * M_PI)) / 50.0).epsilon(1e-10));
}

TEST_CASE("blown subdivision budget reports the achieved error") {
    quad::QuadratureConfig cfg;
    cfg.max_subdivisions = 2;
    cfg.abs_tol = 1e-16;
    cfg.rel_tol = 1e-16;
    auto f = [](double x) { return std::sqrt(std::abs(x - 0.3141)); };
    CHECK_THROWS_WITH_AS(quad::integrate_or_throw(f, 0.0, 1.0, cfg, "budget-test"),
                         doctest::Contains("achieved error"), NumericError);
}
