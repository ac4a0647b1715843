#pragma once

#include <cstdint>

#include "quadrature.hpp"

namespace hphi4::saw {

using quad::QuadratureConfig;

// Self-avoiding-walk susceptibility on the complete graph K_N:
// chi(z) = sum_{n=0}^{N-1} z^n prod_{j=1}^n (N-j), by the stable forward
// iteration t_{n+1} = t_n z (N-n-1); switches to log-domain accumulation
// when z(N-1) is large enough to overflow.
double saw_chi_exact(int64_t N, double z);

// chi(N^{-1}(1 - s(2N)^{-1/2})) / ((2N)^{1/2} f_0(s)); tends to 1 as N grows.
double saw_window_ratio(int64_t N, double s);

struct WSAWParams {
    double g = 1.0;
    double nu = 0.0;
};

struct EffPotentialEval {
    double V = 0.0;
    double Vp = 0.0;  // dV/dt
};

// Effective potential V(t) = t - log(1 + v(t)) of the continuous-time weakly
// self-avoiding walk on K_N, with
//   v(t)  = int_0^inf e^{-g s^2 - (nu+1) s} sqrt(t/s) I~_1(2 sqrt(st)) ds,
//   v'(t) = int_0^inf e^{-g s^2 - (nu+1) s} I~_0(2 sqrt(st)) ds,
// where I~ are modified Bessel functions (the t-derivative of the kernel
// collapses to I~_0 exactly).
EffPotentialEval wsaw_effective_potential(double t, const WSAWParams& p,
                                          const QuadratureConfig& cfg = {});

// Critical nu: root of V'(0) = 1 - int_0^inf e^{-g s^2 - (nu+1) s} ds, with
// V''(0) > 0 verified.
double wsaw_critical_nu(double g, const QuadratureConfig& cfg = {});

struct WSAWWindowResult {
    double ratio = 0.0;       // [N G_01(nu_c + s N^{-1/2})] / [lambda1 sqrt(N) f_0(lambda2 s)]
    double n_g01 = 0.0;       // N G_01
    double lambda1 = 0.0;     // 1 / (V''_c(0)/2)^{1/2}  (see wsaw_window_ratio)
    double lambda2 = 0.0;     // Vdot'_c(0) / (V''_c(0)/2)^{1/2}
    double nu_c = 0.0;
    double vpp0 = 0.0;        // V''_c(0)
    double vdotp0 = 0.0;      // d/dnu V'(0) at nu_c
};

WSAWWindowResult wsaw_window_ratio(int64_t N, double s, double g,
                                   const QuadratureConfig& cfg = {});

// G_01(nu) = int_0^inf e^{-N V(t)} (1 - V'(t))^2 dt (Laplace-type integral,
// t-grid concentrated near 0 with an adaptive tail).
double wsaw_g01(int64_t N, double g, double nu, const QuadratureConfig& cfg = {});

}  // namespace hphi4::saw
