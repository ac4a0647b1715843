#include "specfun.hpp"

#include <cmath>

namespace hphi4::sf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// I_nu(x) = (x/2)^nu sum_k (x^2/4)^k / (k! Gamma(k+nu+1)), nu = 0 or 1.
double series(int nu, double x) {
    double q = 0.25 * x * x;
    double term = (nu == 0) ? 1.0 : 0.5 * x;
    double sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * (k + nu));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Scaled asymptotic expansion: e^{-x} I_nu(x) ~ (2 pi x)^{-1/2} sum_k a_k(nu)/x^k,
// truncated at the smallest term.
double asympt_scaled(int nu, double x) {
    double mu = 4.0 * nu * nu;
    double sum = 1.0;
    double term = 1.0;
    double prev = std::abs(term);
    for (int k = 1; k < 40; ++k) {
        double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (8.0 * x * k);
        if (std::abs(term) >= prev) break;
        sum += term;
        prev = std::abs(term);
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum / std::sqrt(kTwoPi * x);
}

}  // namespace

double bessel_i0_scaled(double x) {
    if (x < 0.0) x = -x;
    if (x <= kBesselSwitch) return std::exp(-x) * series(0, x);
    return asympt_scaled(0, x);
}

double bessel_i1_scaled(double x) {
    double s = (x < 0.0) ? -1.0 : 1.0;
    x = std::abs(x);
    double v = (x <= kBesselSwitch) ? std::exp(-x) * series(1, x) : asympt_scaled(1, x);
    return s * v;
}

double bessel_i0(double x) { return bessel_i0_scaled(x) * std::exp(std::abs(x)); }

double bessel_i1(double x) { return bessel_i1_scaled(x) * std::exp(std::abs(x)); }

}  // namespace hphi4::sf
