#include "saw.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "profiles.hpp"
#include "specfun.hpp"

namespace hphi4::saw {

double saw_chi_exact(int64_t N, double z) {
    if (N < 1) throw DomainError("saw_chi_exact: requires N >= 1");
    if (z == 0.0) return 1.0;
    if (z > 0.0 && z * static_cast<double>(N - 1) > 2.0) {
        // log-domain: log t_n accumulates log z + log(N-n-1)
        double lt = 0.0;
        double lmax = 0.0;
        std::vector<double> lts;
        lts.reserve(static_cast<size_t>(std::min<int64_t>(N, 1 << 22)));
        lts.push_back(0.0);
        for (int64_t n = 0; n + 1 < N; ++n) {
            lt += std::log(z) + std::log(static_cast<double>(N - n - 1));
            lts.push_back(lt);
            lmax = std::max(lmax, lt);
        }
        double acc = 0.0;
        for (double v : lts) acc += std::exp(v - lmax);
        double lv = lmax + std::log(acc);
        if (lv > 709.0) throw NumericError("saw_chi_exact: susceptibility overflows double");
        return std::exp(lv);
    }
    double t = 1.0, chi = 1.0;
    for (int64_t n = 0; n + 1 < N; ++n) {
        t *= z * static_cast<double>(N - n - 1);
        chi += t;
        if (t == 0.0) break;
    }
    return chi;
}

double saw_window_ratio(int64_t N, double s) {
    if (N < 10) throw DomainError("saw_window_ratio: requires N >= 10");
    double z = (1.0 - s / std::sqrt(2.0 * static_cast<double>(N))) / static_cast<double>(N);
    double chi = saw_chi_exact(N, z);
    return chi / (std::sqrt(2.0 * static_cast<double>(N)) * profiles::f0_closed(s));
}

namespace {

// exp(-g s^2 - (nu+1) s + x) I~_k(x) e^{-x}, with x = 2 sqrt(st); assembled in
// the exponent so large Bessel arguments cannot overflow.
double kernel(int k, double g, double nu, double s, double t) {
    double x = 2.0 * std::sqrt(s * t);
    double expo = -g * s * s - (nu + 1.0) * s + x;
    double bess = (k == 0) ? sf::bessel_i0_scaled(x) : sf::bessel_i1_scaled(x);
    return std::exp(expo) * bess;
}

double upper_cutoff(double g, double nu, double t) {
    // past the peak, -g s^2 dominates; find exponent <= -45 relative to max
    double m = 0.0;
    for (double s = 0.0; s <= 4.0; s += 0.125)
        m = std::max(m, -g * s * s - (nu + 1.0) * s + 2.0 * std::sqrt(s * t));
    double s = 1.0;
    while (-g * s * s - (nu + 1.0) * s + 2.0 * std::sqrt(s * t) - m > -45.0) {
        s += 0.5;
        if (s > 1e6) throw NumericError("wsaw: no integrable cutoff found");
    }
    return s;
}

double v_of_t(double t, const WSAWParams& p, const QuadratureConfig& cfg) {
    if (t == 0.0) return 0.0;
    double hi = upper_cutoff(p.g, p.nu, t);
    auto f = [&](double s) {
        if (s <= 0.0) return 0.0;
        double x = 2.0 * std::sqrt(s * t);
        if (x < 1e-8) {
            // sqrt(t/s) I~_1(2 sqrt(st)) -> t as st -> 0
            return t * std::exp(-p.g * s * s - (p.nu + 1.0) * s);
        }
        return std::sqrt(t / s) * kernel(1, p.g, p.nu, s, t);
    };
    return quad::integrate_or_throw(f, 0.0, hi, cfg, "wsaw v(t)");
}

double vprime_of_t(double t, const WSAWParams& p, const QuadratureConfig& cfg) {
    double hi = upper_cutoff(p.g, p.nu, t);
    auto f = [&](double s) { return kernel(0, p.g, p.nu, s, t); };
    return quad::integrate_or_throw(f, 0.0, hi, cfg, "wsaw v'(t)");
}

}  // namespace

EffPotentialEval wsaw_effective_potential(double t, const WSAWParams& p,
                                          const QuadratureConfig& cfg) {
    if (t < 0.0) throw DomainError("wsaw_effective_potential: requires t >= 0");
    if (!(p.g > 0.0)) throw DomainError("wsaw_effective_potential: requires g > 0");
    double v = v_of_t(t, p, cfg);
    if (1.0 + v <= 0.0)
        throw NumericError("wsaw_effective_potential: 1 + v(t) <= 0, log undefined");
    double vp = vprime_of_t(t, p, cfg);
    EffPotentialEval e;
    e.V = t - std::log1p(v);
    e.Vp = 1.0 - vp / (1.0 + v);
    return e;
}

double wsaw_critical_nu(double g, const QuadratureConfig& cfg) {
    if (!(g > 0.0)) throw DomainError("wsaw_critical_nu: requires g > 0");
    auto vprime0 = [&](double nu) {
        // V'(0) = 1 - int_0^inf e^{-g s^2 - (nu+1) s} ds
        double hi = upper_cutoff(g, nu, 0.0);
        auto f = [&](double s) { return std::exp(-g * s * s - (nu + 1.0) * s); };
        return 1.0 - quad::integrate_or_throw(f, 0.0, hi, cfg, "wsaw V'(0)");
    };
    double lo = -1.0, hi = 1.0;
    while (vprime0(lo) > 0.0) {
        lo -= 1.0;
        if (lo < -64.0) throw NumericError("wsaw_critical_nu: no sign change in scan range");
    }
    while (vprime0(hi) < 0.0) {
        hi += 1.0;
        if (hi > 64.0) throw NumericError("wsaw_critical_nu: no sign change in scan range");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double f = vprime0(mid);
        if (std::abs(f) < 1e-13) {
            lo = hi = mid;
            break;
        }
        if (f < 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-14 * std::max(1.0, std::abs(mid))) break;
    }
    double nu_c = 0.5 * (lo + hi);
    // V''(0) = 1 - int s e^{-g s^2 - (nu+1) s} ds must be positive at nu_c
    double cutoff = upper_cutoff(g, nu_c, 0.0);
    auto f2 = [&](double s) { return s * std::exp(-g * s * s - (nu_c + 1.0) * s); };
    double vpp0 = 1.0 - quad::integrate_or_throw(f2, 0.0, cutoff, cfg, "wsaw V''(0)");
    if (!(vpp0 > 0.0)) throw NumericError("wsaw_critical_nu: V''(0) <= 0 at the root");
    return nu_c;
}

double wsaw_g01(int64_t N, double g, double nu, const QuadratureConfig& cfg) {
    if (N < 1) throw DomainError("wsaw_g01: requires N >= 1");
    WSAWParams p{g, nu};
    auto integrand = [&](double t) {
        EffPotentialEval e = wsaw_effective_potential(t, p, cfg);
        double w = 1.0 - e.Vp;
        return std::exp(-static_cast<double>(N) * e.V) * w * w;
    };
    // Laplace integral: mass sits in t = O(1/sqrt(N)); integrate [0, t1] finely
    // then extend until N V(t) kills the tail.
    double t1 = 8.0 / std::sqrt(static_cast<double>(N));
    double total = quad::integrate_or_throw(integrand, 0.0, t1, cfg, "wsaw G01 head");
    double t_lo = t1;
    for (int seg = 0; seg < 60; ++seg) {
        double t_hi = t_lo * 2.0;
        EffPotentialEval e = wsaw_effective_potential(t_lo, p, cfg);
        if (static_cast<double>(N) * e.V > 45.0) break;
        total += quad::integrate_or_throw(integrand, t_lo, t_hi, cfg, "wsaw G01 tail");
        t_lo = t_hi;
    }
    return total;
}

WSAWWindowResult wsaw_window_ratio(int64_t N, double s, double g, const QuadratureConfig& cfg) {
    if (N < 1000) throw DomainError("wsaw_window_ratio: requires N >= 1e3");
    WSAWWindowResult r;
    r.nu_c = wsaw_critical_nu(g, cfg);

    // V''_c(0): one-sided second-order difference of V' in t (t >= 0 only),
    // Richardson-extrapolated once.
    auto vpp_est = [&](double h) {
        WSAWParams pc{g, r.nu_c};
        double v0 = wsaw_effective_potential(0.0, pc, cfg).Vp;
        double v1 = wsaw_effective_potential(h, pc, cfg).Vp;
        double v2 = wsaw_effective_potential(2.0 * h, pc, cfg).Vp;
        return (-3.0 * v0 + 4.0 * v1 - v2) / (2.0 * h);
    };
    double h = 1e-4;
    r.vpp0 = (4.0 * vpp_est(0.5 * h) - vpp_est(h)) / 3.0;

    // Vdot'_c(0): centered difference of V'(0) in nu, Richardson-extrapolated.
    auto vdotp_est = [&](double hn) {
        WSAWParams pp{g, r.nu_c + hn}, pm{g, r.nu_c - hn};
        return (wsaw_effective_potential(0.0, pp, cfg).Vp -
                wsaw_effective_potential(0.0, pm, cfg).Vp) /
               (2.0 * hn);
    };
    r.vdotp0 = (4.0 * vdotp_est(0.5 * h) - vdotp_est(h)) / 3.0;

    double half_vpp = 0.5 * r.vpp0;
    if (!(half_vpp > 0.0)) throw NumericError("wsaw_window_ratio: V''_c(0) <= 0");
    // Laplace asymptotics of G01 = int e^{-NV}(1-V')^2 dt with V ~ P t^2 + ...:
    // N G01 ~ (1/mu) N Fi(1/2,1/2; S/sqrt(P)) (PN)^{-1/2} with mu = 2 and
    // Fi(1/2,1/2;u) = 2 f_0(-u), so lambda1 = 1/sqrt(V''_c(0)/2).  (An exact
    // computation with a purely quadratic V confirms the 1/mu factor.)
    r.lambda1 = 1.0 / std::sqrt(half_vpp);
    r.lambda2 = r.vdotp0 / std::sqrt(half_vpp);

    double nu = r.nu_c + s / std::sqrt(static_cast<double>(N));
    r.n_g01 = static_cast<double>(N) * wsaw_g01(N, g, nu, cfg);
    double denom = r.lambda1 * std::sqrt(static_cast<double>(N)) *
                   profiles::f0_closed(r.lambda2 * s);
    r.ratio = r.n_g01 / denom;
    return r;
}

}  // namespace hphi4::saw
