#pragma once

namespace hphi4::sf {

// Modified Bessel functions of the first kind, orders 0 and 1.  Power series
// for |x| <= 20, large-argument asymptotic expansion beyond; both branches
// agree to ~1e-12 at the switch point (checked in tests).
double bessel_i0(double x);
double bessel_i1(double x);

// e^{-x} I_0(x), e^{-x} I_1(x) for x >= 0; overflow-free for large x.
double bessel_i0_scaled(double x);
double bessel_i1_scaled(double x);

// Series/asymptotic switch point (argument).
inline constexpr double kBesselSwitch = 20.0;

}  // namespace hphi4::sf
