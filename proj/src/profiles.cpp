#include "profiles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hphi4::profiles {

namespace {

// Exponent of the I_k integrand: k ln x - x^4/4 - s x^2/2.
double ik_exponent(double k, double s, double x) {
    double x2 = x * x;
    return k * std::log(x) - 0.25 * x2 * x2 - 0.5 * s * x2;
}

// Location of the integrand maximum: x^4 + s x^2 - k = 0 in x^2.
double ik_peak(double k, double s) {
    double x2;
    if (k > 0.0) {
        x2 = 0.5 * (-s + std::sqrt(s * s + 4.0 * k));
    } else {
        x2 = std::max(-s, 0.0);  // k <= 0: max at the saddle for s < 0, else at 0+
    }
    return std::sqrt(std::max(x2, 1e-300));
}

// Reference level for shifting and for the tail cutoff: the largest exponent
// over the integrand's bulk (probes are kept away from an integrable endpoint
// singularity when k < 0).
double ik_bulk_max(double k, double s, double peak) {
    double m = ik_exponent(k, s, std::max(peak, 0.5));
    for (double probe : {1.0, peak, peak + 0.5, peak + 1.0})
        if (probe > 1e-8) m = std::max(m, ik_exponent(k, s, probe));
    return m;
}

// Smallest x past the peak with exponent(x) - M <= -45 (tail < 1e-19 relative,
// which clears abs_tol/10 with large headroom).
double ik_cutoff(double k, double s, double peak, double m_exp) {
    double x = std::max(peak, 0.5);
    for (int i = 0; i < 100000; ++i) {
        x += 0.25;
        if (ik_exponent(k, s, x) - m_exp <= -45.0) return x;
    }
    throw NumericError("integral_I: could not locate an integration cutoff");
}

void check_ik_domain(double k) {
    if (!(k > -1.0)) throw DomainError("integral_I: requires k > -1");
}

}  // namespace

double integral_I_log(double k, double s, const QuadratureConfig& cfg) {
    check_ik_domain(k);
    double peak = ik_peak(k, s);
    double m_exp = ik_bulk_max(k, s, peak);
    double r_cut = ik_cutoff(k, s, peak, m_exp);

    auto g = [&](double x) { return std::exp(ik_exponent(k, s, x) - m_exp); };

    double total = 0.0;
    double lo = 0.0;
    if (k < 0.0) {
        // x^k is integrably singular at 0: substitute u = x^{k+1}/(k+1) on [0,1].
        double p = k + 1.0;
        double up = std::pow(std::min(1.0, r_cut), p) / p;
        auto h = [&](double u) {
            double x = std::pow(p * u, 1.0 / p);
            double x2 = x * x;
            return std::exp(-0.25 * x2 * x2 - 0.5 * s * x2 - m_exp);
        };
        total += quad::integrate_or_throw(h, 0.0, up, cfg, "integral_I");
        lo = std::min(1.0, r_cut);
    }
    if (r_cut > lo) {
        // For s < 0 split at the saddle so the adaptive pass is not starved.
        double split = (s < 0.0) ? std::sqrt(-s) : 0.0;
        if (split > lo + 1e-10 && split < r_cut - 1e-10) {
            total += quad::integrate_or_throw(g, lo, split, cfg, "integral_I");
            total += quad::integrate_or_throw(g, split, r_cut, cfg, "integral_I");
        } else {
            total += quad::integrate_or_throw(g, lo, r_cut, cfg, "integral_I");
        }
    }
    if (!(total > 0.0)) throw NumericError("integral_I: non-positive quadrature result");
    return m_exp + std::log(total);
}

double integral_I(double k, double s, const QuadratureConfig& cfg) {
    double lv = integral_I_log(k, s, cfg);
    if (lv > 709.0) throw NumericError("integral_I: value overflows double; use integral_I_log");
    return std::exp(lv);
}

namespace {

double faxen_exponent(double alpha, double beta, double y, double t) {
    return -t + y * std::pow(t, alpha) + (beta - 1.0) * std::log(t);
}

}  // namespace

double faxen_log(double alpha, double beta, double y, const QuadratureConfig& cfg) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("faxen: requires 0 <= alpha < 1");
    if (!(beta > 0.0)) throw DomainError("faxen: requires beta > 0");

    // Peak of the exponent (t=0 end handled by substitution below).
    double t_peak = 1.0;
    if (y > 0.0 && alpha > 0.0) {
        // solve 1 = alpha y t^{alpha-1} + (beta-1)/t approximately by scanning
        t_peak = std::pow(alpha * y, 1.0 / (1.0 - alpha));
    }
    t_peak = std::max(t_peak, beta);
    double m_exp = faxen_exponent(alpha, beta, y, t_peak);
    for (double t = 0.125; t < t_peak; t *= 2.0)
        m_exp = std::max(m_exp, faxen_exponent(alpha, beta, y, t));

    double t_cut = t_peak;
    for (int i = 0; i < 200000; ++i) {
        t_cut += 0.25 * (1.0 + 0.01 * t_cut);
        if (faxen_exponent(alpha, beta, y, t_cut) - m_exp <= -45.0) break;
    }

    auto g = [&](double t) { return std::exp(faxen_exponent(alpha, beta, y, t) - m_exp); };

    double total = 0.0;
    double lo = std::min(1.0, t_cut);
    {
        // u = t^beta removes the t^{beta-1} endpoint singularity.
        auto h = [&](double u) {
            double t = std::pow(u, 1.0 / beta);
            return std::exp(-t + y * std::pow(t, alpha) - m_exp) / beta;
        };
        total += quad::integrate_or_throw(h, 0.0, std::pow(lo, beta), cfg, "faxen");
    }
    if (t_cut > lo) total += quad::integrate_or_throw(g, lo, t_cut, cfg, "faxen");
    if (!(total > 0.0)) throw NumericError("faxen: non-positive quadrature result");
    return m_exp + std::log(total);
}

double faxen(double alpha, double beta, double y, const QuadratureConfig& cfg) {
    double lv = faxen_log(alpha, beta, y, cfg);
    if (lv > 709.0) throw NumericError("faxen: value overflows double");
    return std::exp(lv);
}

double sigma_moment(double n, double k, double s, const QuadratureConfig& cfg) {
    if (!(n > 0.0)) throw DomainError("sigma_moment: requires n > 0");
    if (!(k > -n)) throw DomainError("sigma_moment: requires k > -n");
    return std::exp(integral_I_log(k + n - 1.0, s, cfg) - integral_I_log(n - 1.0, s, cfg));
}

double f0_closed(double s) {
    if (s * s * 0.25 > 700.0 && s < 0.0)
        throw NumericError("f0_closed: overflow; s too negative for the closed form");
    return 0.5 * std::sqrt(M_PI) * std::exp(0.25 * s * s) * std::erfc(0.5 * s);
}

double profile_f(double n, double s, const QuadratureConfig& cfg) {
    if (n < -2.0) throw DomainError("profile_f: requires n >= -2");
    if (n == -2.0) {
        if (!(s > 0.0)) throw DomainError("profile_f: f_{-2}(s) = 1/s needs s > 0");
        return 1.0 / s;
    }
    if (n > 0.0) {
        return std::exp(integral_I_log(n + 1.0, s, cfg) - integral_I_log(n - 1.0, s, cfg)) / n;
    }
    if (n == 0.0) {
        return std::exp(integral_I_log(1.0, s, cfg));
    }
    // n in (-2,0): f_n = 1/((n+2) f_{n+2} + s), valid for s above the pole s_n^*.
    double denom = (n + 2.0) * profile_f(n + 2.0, s, cfg) + s;
    if (!(denom > 0.0)) {
        double sstar = pole_location(n, cfg);
        std::ostringstream oss;
        oss << "profile_f: s = " << s << " is at or below the pole s_n^* ~= " << sstar
            << " for n = " << n;
        throw DomainError(oss.str());
    }
    return 1.0 / denom;
}

double pole_location(double n, const QuadratureConfig& cfg) {
    if (!(n >= -2.0 && n < 0.0)) throw DomainError("pole_location: requires n in [-2,0)");
    if (n == -2.0) return 0.0;
    auto denom = [&](double s) {
        // (n+2) f_{n+2}(s) + s, evaluated in the log domain (s can be very negative).
        double lf = integral_I_log(n + 3.0, s, cfg) - integral_I_log(n + 1.0, s, cfg);
        return std::exp(lf) + s;
    };
    double hi = 0.0;
    double d_hi = denom(hi);
    if (d_hi <= 0.0) throw NumericError("pole_location: denominator not positive at s = 0");
    double lo = -1.0;
    while (denom(lo) > 0.0) {
        hi = lo;
        lo *= 2.0;
        if (lo < -64.0) throw NumericError("pole_location: no sign change found down to s = -64");
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (denom(mid) > 0.0)
            hi = mid;
        else
            lo = mid;
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

double gaussian_moment(double n, int two_p, double s) {
    if (!(s > 0.0)) throw DomainError("gaussian_moment: requires s > 0");
    if (!(n > 0.0)) throw DomainError("gaussian_moment: requires n > 0");
    if (two_p < 0 || two_p % 2 != 0) throw DomainError("gaussian_moment: moment order must be even and >= 0");
    int p = two_p / 2;
    if (p == 0) return 1.0;
    double lg = std::lgamma(0.5 * (n + two_p)) - std::lgamma(0.5 * n);
    return std::pow(2.0 / s, p) * std::exp(lg);
}

double universal_ratio(double n, int p, double s, const QuadratureConfig& cfg) {
    if (p < 1) throw DomainError("universal_ratio: requires p >= 1");
    if (!(n > 0.0)) throw DomainError("universal_ratio: requires n > 0");
    double l2p = integral_I_log(2.0 * p + n - 1.0, s, cfg);
    double l2 = integral_I_log(2.0 + n - 1.0, s, cfg);
    double l0 = integral_I_log(n - 1.0, s, cfg);
    // Sigma_{n,2p} / Sigma_{n,2}^p with all integrals in the log domain.
    return std::exp(l2p - l0 - p * (l2 - l0));
}

double binder(double n, double s, const QuadratureConfig& cfg) {
    return 1.0 - universal_ratio(n, 2, s, cfg) / 3.0;
}

double renorm_coupling(double n, double s, const QuadratureConfig& cfg) {
    return (n + 2.0) / n - universal_ratio(n, 2, s, cfg);
}

}  // namespace hphi4::profiles
