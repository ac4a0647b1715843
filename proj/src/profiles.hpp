#pragma once

#include "quadrature.hpp"

namespace hphi4::profiles {

using quad::QuadratureConfig;

// I_k(s) = int_0^inf x^k exp(-x^4/4 - s x^2/2) dx,  k > -1.
double integral_I(double k, double s, const QuadratureConfig& cfg = {});

// log I_k(s); safe for s << 0 where I_k overflows a double.
double integral_I_log(double k, double s, const QuadratureConfig& cfg = {});

// Faxen integral Fi(alpha,beta;y) = int_0^inf exp(-t + y t^alpha) t^{beta-1} dt,
// 0 <= alpha < 1, beta > 0.
double faxen(double alpha, double beta, double y, const QuadratureConfig& cfg = {});
double faxen_log(double alpha, double beta, double y, const QuadratureConfig& cfg = {});

// Sigma_{n,k}(s) = I_{k+n-1}(s) / I_{n-1}(s),  n > 0, k > -n.
double sigma_moment(double n, double k, double s, const QuadratureConfig& cfg = {});

// Universal profile f_n(s); n > 0 via I_{n+1}/(n I_{n-1}), n = 0 via I_1,
// n in (-2,0) via the recursion f_n = 1/((n+2) f_{n+2} + s) (pole-guarded),
// n = -2 via 1/s (s > 0).
double profile_f(double n, double s, const QuadratureConfig& cfg = {});

// Closed form f_0(s) = (sqrt(pi)/2) e^{s^2/4} erfc(s/2); the quadrature-free
// second route used by the SAW checks.
double f0_closed(double s);

// Pole location s_n^* for n in [-2,0): the zero of (n+2) f_{n+2}(s) + s.
double pole_location(double n, const QuadratureConfig& cfg = {});

// Gaussian moments M_{n,2p}(s) = (2/s)^p Gamma((n+2p)/2)/Gamma(n/2), s > 0.
double gaussian_moment(double n, int two_p, double s);

// R^{(2p)}_n(s) = Sigma_{n,2p}(s) / Sigma_{n,2}(s)^p, p >= 1.
double universal_ratio(double n, int p, double s, const QuadratureConfig& cfg = {});

// Binder cumulant U_n(s) = 1 - R^{(4)}_n(s)/3.
double binder(double n, double s, const QuadratureConfig& cfg = {});

// Renormalised coupling lambda_n(s) = (n+2)/n - R^{(4)}_n(s).
double renorm_coupling(double n, double s, const QuadratureConfig& cfg = {});

}  // namespace hphi4::profiles
