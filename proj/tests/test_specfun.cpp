#include <doctest.h>

#include <cmath>

#include "quadrature.hpp"
#include "specfun.hpp"

using namespace hphi4;

namespace {

// Independent quadrature route: I_nu(x) = (1/pi) int_0^pi e^{x cos t} cos(nu t) dt.
double bessel_quadrature(int nu, double x) {
    auto f = [&](double t) { return std::exp(x * std::cos(t)) * std::cos(nu * t); };
    return quad::integrate_or_throw(f, 0.0, M_PI, {}, "bessel oracle") / M_PI;
}

}  // namespace

TEST_CASE("modified Bessel values against the integral representation") {
    for (double x : {0.3, 1.0, 5.0, 15.0, 19.0}) {
        CHECK(sf::bessel_i0(x) == doctest::Approx(bessel_quadrature(0, x)).epsilon(1e-11));
        CHECK(sf::bessel_i1(x) == doctest::Approx(bessel_quadrature(1, x)).epsilon(1e-11));
    }
}

TEST_CASE("series and asymptotic branches agree at the switch point") {
    // both branches evaluated a hair either side of the switch; mismatch < 1e-10
    for (int nu = 0; nu <= 1; ++nu) {
        double below = nu ? sf::bessel_i1_scaled(sf::kBesselSwitch * (1.0 - 1e-12))
                          : sf::bessel_i0_scaled(sf::kBesselSwitch * (1.0 - 1e-12));
        double above = nu ? sf::bessel_i1_scaled(sf::kBesselSwitch * (1.0 + 1e-12))
                          : sf::bessel_i0_scaled(sf::kBesselSwitch * (1.0 + 1e-12));
        CHECK(std::abs(below / above - 1.0) < 1e-10);
    }
}

TEST_CASE("scaled variants stay finite for large argument") {
    double v = sf::bessel_i1_scaled(5000.0);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 5000.0)).epsilon(1e-3));
}

TEST_CASE("derivative identity I1' = I0 - I1/x") {
    double x = 7.0, h = 1e-6;
    double fd = (sf::bessel_i1(x + h) - sf::bessel_i1(x - h)) / (2.0 * h);
    double rhs = sf::bessel_i0(x) - sf::bessel_i1(x) / x;
    CHECK(fd == doctest::Approx(rhs).epsilon(1e-8));
}
