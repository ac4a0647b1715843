#include "pertflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "profiles.hpp"

namespace hphi4::flow {

void FlowParams::validate() const {
    if (d < 4) throw DomainError("FlowParams: requires d >= 4");
    if (n < 1) throw DomainError("FlowParams: requires n >= 1");
    if (L < 2) throw DomainError("FlowParams: requires L >= 2");
    if (!(g0 > 0.0)) throw DomainError("FlowParams: requires g0 > 0");
    if (tilde_a < 0.0) throw DomainError("FlowParams: requires tilde_a >= 0");
}

Coefficients coefficients(int64_t j, double a, const FlowParams& p) {
    double l2j = std::pow(p.L, 2.0 * j);  // may overflow to inf at very large j
    double x = (a == 0.0) ? 0.0 : a * l2j;
    double denom = 1.0 + x;
    if (!(denom > 0.0)) {
        std::ostringstream oss;
        oss << "coefficients: 1 + a L^{2j} <= 0 at j = " << j << " (a = " << a << ")";
        throw DomainError(oss.str());
    }
    double cpre = 1.0 - std::pow(p.L, -p.d);
    double inv = std::isinf(denom) ? 0.0 : 1.0 / denom;
    Coefficients c;
    c.beta = (p.n + 8.0) * cpre * inv * inv * std::pow(p.L, -(p.d - 4.0) * j);
    c.eta = (p.n + 2.0) * cpre * inv * std::pow(p.L, -(p.d - 2.0) * j);
    c.xi = p.xi0 * inv * inv * inv * std::pow(p.L, -(2.0 * p.d - 6.0) * j);
    // mass derivatives: factor L^{2j}/(1 + a L^{2j}); genuinely grows like L^{2j}
    // below the mass scale and saturates at 1/a above it
    double growth = (x > 1e100) ? 1.0 / a : l2j * inv;
    c.beta_dot = -2.0 * c.beta * growth;
    c.eta_dot = -c.eta * growth;
    c.xi_dot = -3.0 * c.xi * growth;
    return c;
}

CouplingState CouplingState::initial(double g0, double nu0, bool with_derivs) {
    CouplingState s;
    s.j = 0;
    s.g = g0;
    s.nu = nu0;
    s.has_derivs = with_derivs;
    s.dnu_dnu0 = 1.0;
    return s;
}

CouplingState pt_step(const CouplingState& s, double a, const FlowParams& p) {
    Coefficients c = coefficients(s.j, a, p);
    double gh = p.gamma_hat();
    CouplingState out;
    out.j = s.j + 1;
    out.g = s.g - c.beta * s.g * s.g;
    out.nu = (1.0 - gh * c.beta * s.g) * s.nu + c.eta * s.g - c.xi * s.g * s.g;
    out.has_derivs = s.has_derivs;
    if (s.has_derivs) {
        double pi_factor = 1.0 - gh * c.beta * s.g;
        // nu0-derivatives (g carries none along the perturbative flow)
        out.dg_dnu0 = (1.0 - 2.0 * c.beta * s.g) * s.dg_dnu0;
        out.dnu_dnu0 = pi_factor * s.dnu_dnu0 +
                       (-gh * c.beta * s.nu + c.eta - 2.0 * c.xi * s.g) * s.dg_dnu0;
        // mass derivatives; the eta_dot g term is written as -gamma_hat beta g
        // (eta_dot = -gamma_hat beta identically)
        out.dg_da = (1.0 - 2.0 * c.beta * s.g) * s.dg_da - c.beta_dot * s.g * s.g;
        out.dnu_da = pi_factor * s.dnu_da - gh * c.beta * s.g + c.eta * s.dg_da -
                     gh * (c.beta_dot * s.g + c.beta * s.dg_da) * s.nu -
                     c.xi_dot * s.g * s.g - 2.0 * c.xi * s.g * s.dg_da;
        out.mass_derivs_valid =
            s.mass_derivs_valid && std::isfinite(out.dg_da) && std::isfinite(out.dnu_da);
        if (!out.mass_derivs_valid) {
            out.dg_da = kNaN;
            out.dnu_da = kNaN;
        }
    }
    return out;
}

int64_t mass_scale(double a, int L) {
    if (a <= 0.0) return kMassScaleInfinite;
    double est = -std::log(a) / (2.0 * std::log(static_cast<double>(L)));
    int64_t j = static_cast<int64_t>(std::floor(est));
    auto ok = [&](int64_t jj) { return std::pow(L, 2.0 * jj) * a <= 1.0; };
    while (!ok(j)) --j;
    while (ok(j + 1)) ++j;
    return j;
}

double vartheta(int64_t j, double tilde_a, int L) {
    if (tilde_a >= 1.0) return std::pow(2.0, -static_cast<double>(j)) / tilde_a;
    int64_t ja = mass_scale(tilde_a, L);
    if (ja == kMassScaleInfinite || j <= ja) return 1.0;
    return std::pow(2.0, -static_cast<double>(j - ja));
}

std::vector<double> tilde_g_sequence(const FlowParams& p, int64_t jmax) {
    std::vector<double> tg(static_cast<size_t>(jmax) + 1);
    tg[0] = p.g0;
    for (int64_t j = 0; j < jmax; ++j) {
        Coefficients c = coefficients(j, p.tilde_a, p);
        double next = tg[j] - c.beta * tg[j] * tg[j];
        if (!(next >= 0.5 * tg[j] && next <= tg[j])) {
            std::ostringstream oss;
            oss << "tilde_g_sequence: halving condition violated at scale " << j
                << " (g0 too large for this (d,n,L))";
            throw DomainError(oss.str());
        }
        tg[j + 1] = next;
    }
    return tg;
}

double band_halfwidth(int64_t j, double tilde_g_j, const FlowParams& p) {
    double rho = std::pow(p.L, -(p.d - 4.0) * j);
    return 6.0 * (p.n + 2.0) * vartheta(j, p.tilde_a, p.L) * tilde_g_j * rho *
           std::pow(p.L, -2.0 * j);
}

FlowClassification classify_flow(double nu0, const FlowParams& p, int64_t jmax,
                                 const std::vector<double>& tilde_g) {
    CouplingState s = CouplingState::initial(p.g0, nu0, false);
    for (int64_t j = 0; j <= jmax; ++j) {
        double hw = band_halfwidth(j, tilde_g[j], p);
        if (s.nu > hw) return {FlowOutcome::EscapedAbove, j};
        if (s.nu < -hw) return {FlowOutcome::EscapedBelow, j};
        if (j < jmax) s = pt_step(s, p.a, p);
    }
    return {FlowOutcome::Stayed, -1};
}

FlowTrace run_flow(double nu0, double a, const FlowParams& p, int64_t jmax, bool with_derivs,
                   int64_t stride) {
    if (stride < 1) stride = 1;
    FlowTrace t;
    t.stride = stride;
    CouplingState s = CouplingState::initial(p.g0, nu0, with_derivs);
    t.states.push_back(s);
    for (int64_t j = 0; j < jmax; ++j) {
        s = pt_step(s, a, p);
        if (s.j % stride == 0 || s.j == jmax) t.states.push_back(s);
    }
    return t;
}

CriticalResult bleher_sinai_critical(const FlowParams& p, int64_t jmax, double rel_tol) {
    p.validate();
    if (jmax <= 0) jmax = p.horizon();
    std::vector<double> tg = tilde_g_sequence(p, jmax);

    double hw0 = band_halfwidth(0, tg[0], p);
    double lo = -hw0, hi = hw0;
    FlowClassification c_lo = classify_flow(lo, p, jmax, tg);
    FlowClassification c_hi = classify_flow(hi, p, jmax, tg);
    if (c_lo.outcome != FlowOutcome::EscapedBelow || c_hi.outcome != FlowOutcome::EscapedAbove) {
        std::ostringstream oss;
        oss << "bleher_sinai_critical: initial bracket does not straddle the critical "
               "trajectory (g0 too large?); endpoint escapes at scales "
            << c_lo.escape_scale << " / " << c_hi.escape_scale;
        throw DomainError(oss.str());
    }

    CriticalResult res;
    double mid = 0.0;
    int it = 0;
    for (; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;  // double resolution exhausted
        FlowClassification c = classify_flow(mid, p, jmax, tg);
        if (c.outcome == FlowOutcome::Stayed) break;
        if (c.outcome == FlowOutcome::EscapedAbove)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= rel_tol * std::max(1e-12, std::abs(mid))) {
            mid = 0.5 * (lo + hi);
            break;
        }
    }
    res.nu_c = mid;
    res.bracket_width = hi - lo;
    res.iterations = it;
    int64_t stride = std::max<int64_t>(1, jmax / 2048);
    res.trace = run_flow(res.nu_c, p.a, p, jmax, true, stride);
    return res;
}

double critical_nu0_series(const FlowParams& p, double a, int64_t kmax) {
    p.validate();
    if (kmax <= 0) kmax = p.horizon();
    double gh = p.gamma_hat();
    // Solving nu_{k+1} = pi_k nu_k + q_k backwards from nu_infinity = 0 gives
    // nu_c = -sum_k q_k / Pi_{0,k} with q_k = eta_k g_k - xi_k g_k^2.
    double pi = 1.0;
    double g = p.g0;
    double sum = 0.0;
    int small_streak = 0;
    for (int64_t k = 0; k < kmax; ++k) {
        Coefficients c = coefficients(k, a, p);
        double factor = 1.0 - gh * c.beta * g;
        if (!(factor > 0.0))
            throw DomainError("critical_nu0_series: Pi factor non-positive (g0 too large)");
        pi *= factor;
        double term = (-c.eta * g + c.xi * g * g) / pi;
        sum += term;
        g -= c.beta * g * g;
        if (std::abs(term) < 1e-3 * std::numeric_limits<double>::epsilon() * std::abs(sum)) {
            if (++small_streak >= 4) break;
        } else {
            small_streak = 0;
        }
    }
    return sum;
}

CouplingState flow_to_scale(double nu0, double a, const FlowParams& p, int64_t N,
                            bool with_derivs) {
    CouplingState s = CouplingState::initial(p.g0, nu0, with_derivs);
    for (int64_t j = 0; j < N; ++j) s = pt_step(s, a, p);
    return s;
}

namespace {

void check_mass_interval(double a, int N, const FlowParams& p, const char* op) {
    double half = 0.5 * std::pow(p.L, -2.0 * (N - 1));
    if (!(a > -half && a < half)) {
        std::ostringstream oss;
        oss << op << ": mass a = " << a << " outside I_{N-1}(0) = (-" << half << "," << half
            << ")";
        throw DomainError(oss.str());
    }
}

}  // namespace

double nu_0N(double a, int N, const FlowParams& p) {
    p.validate();
    if (N < 1) throw DomainError("nu_0N: requires N >= 1");
    check_mass_interval(a, N, p, "nu_0N");
    double nu_c0 = critical_nu0_series(p, 0.0);
    double target = flow_to_scale(nu_c0, 0.0, p, N, false).nu;
    // nu_N is affine in nu_0 with slope Pi_{0,N-1}(a) = dnu_N/dnu_0, so one
    // Newton step is exact; iterate twice to absorb rounding.
    double nu0 = nu_c0;
    for (int it = 0; it < 3; ++it) {
        CouplingState s = flow_to_scale(nu0, a, p, N, true);
        double step = (target - s.nu) / s.dnu_dnu0;
        nu0 += step;
        if (std::abs(step) < 1e-17 * std::max(1.0, std::abs(nu0))) break;
    }
    double hw0 = band_halfwidth(0, p.g0, p);
    if (!(nu0 > -2.0 * hw0 && nu0 < 2.0 * hw0))
        throw NumericError("nu_0N: matched initial value escaped the admissible interval");
    return nu0;
}

double nu_0N_slope(double a, int N, const FlowParams& p) {
    double nu0 = nu_0N(a, N, p);
    CouplingState s = flow_to_scale(nu0, a, p, N, true);
    return -s.dnu_da / s.dnu_dnu0;
}

double effective_critical_point(BoundaryCondition bc, int N, const FlowParams& p) {
    p.validate();
    if (bc == BoundaryCondition::Periodic) return critical_nu0_series(p, 0.0);
    double shift = p.q() * std::pow(p.L, -2.0 * N);
    return nu_0N(-shift, N, p) - shift;
}

ScaleSet scale_set(int N, const FlowParams& p, const std::function<double(double)>& nu_c_fn) {
    p.validate();
    if (N < 1) throw DomainError("scale_set: requires N >= 1");
    ScaleSet s;
    s.B = p.big_B();
    double gh = p.gamma_hat();
    double th = 0.5 - gh;
    double logL2 = std::log(std::pow(p.L, 2.0));

    // g_infinity estimate: run the massless quartic recursion to its limit.
    {
        double g = p.g0;
        int64_t cap = p.horizon();
        for (int64_t j = 0; j < cap; ++j) {
            Coefficients c = coefficients(j, 0.0, p);
            double next = g - c.beta * g * g;
            if (std::abs(next - g) < 1e-18 * g && p.d > 4) {
                g = next;
                break;
            }
            g = next;
        }
        s.g_inf_est = g;
    }

    auto nu_c = nu_c_fn ? nu_c_fn
                        : std::function<double(double)>(
                              [&](double a) { return critical_nu0_series(p, a); });

    if (p.d == 4) {
        s.A_d_est = std::pow(s.B * p.g0 / logL2, gh);
        s.wN = s.A_d_est * std::pow(logL2, gh) / std::sqrt(s.B) * std::pow(N, -th) *
               std::pow(p.L, -2.0 * N);
        s.vN = s.A_d_est * std::pow(logL2, gh) * std::pow(N, gh) * std::pow(p.L, -2.0 * N);
        s.hN = std::pow(s.B * N, 0.25) * std::pow(p.L, -static_cast<double>(N));
    } else {
        // A_d = 1 + d(nu_c)/da at 0+, by a step-1e-4 finite difference with one
        // Richardson extrapolation.
        double h = 1e-4;
        double n0 = nu_c(0.0);
        double d1 = (nu_c(h) - n0) / h;
        double d2 = (nu_c(0.5 * h) - n0) / (0.5 * h);
        s.A_d_est = 1.0 + (2.0 * d2 - d1);
        s.wN = s.A_d_est * std::sqrt(s.g_inf_est) * std::pow(p.L, -0.5 * p.d * N);
        s.vN = s.A_d_est * std::pow(p.L, -2.0 * N);
        s.hN = std::pow(s.g_inf_est, -0.25) * std::pow(p.L, -0.25 * p.d * N);
    }
    s.lN = std::pow(p.L, -0.5 * (p.d - 2.0) * N);
    s.pN = std::pow(p.L, -0.5 * p.d * N);
    return s;
}

namespace {

struct MassSolver {
    const FlowParams& p;
    int N;
    double nu_c0;
    double tau_ref;  // nu_N on the reference critical flow

    MassSolver(const FlowParams& p_, int N_) : p(p_), N(N_) {
        nu_c0 = critical_nu0_series(p, 0.0);
        tau_ref = flow_to_scale(nu_c0, 0.0, p, N, false).nu;
    }

    double nu_1N(double a) const {
        if (a >= 0.0) return critical_nu0_series(p, a);
        // nu_{0,N}(a) via the exact affine Newton step (see nu_0N)
        double nu0 = nu_c0;
        for (int it = 0; it < 3; ++it) {
            CouplingState s = flow_to_scale(nu0, a, p, N, true);
            nu0 += (tau_ref - s.nu) / s.dnu_dnu0;
        }
        return nu0;
    }

    double G(double a) const { return nu_1N(a) + a; }
};

}  // namespace

double renormalized_mass(double s, int N, BoundaryCondition bc, WindowKind window,
                         const FlowParams& p) {
    p.validate();
    if (N < 1) throw DomainError("renormalized_mass: requires N >= 1");
    ScaleSet scales = scale_set(N, p);
    double y = (window == WindowKind::W) ? scales.wN : scales.vN;
    double nu_star = effective_critical_point(bc, N, p);
    double target = nu_star + s * y;
    if (s != 0.0 &&
        std::abs(s) * y < 32.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(nu_star))) {
        std::ostringstream oss;
        oss << "renormalized_mass: window offset s*y_N = " << s * y
            << " is below double resolution relative to nu*_{c,N} = " << nu_star
            << "; use a smaller N";
        throw DomainError(oss.str());
    }

    MassSolver solver(p, N);
    double half = 0.5 * std::pow(p.L, -2.0 * (N - 1));
    double lo = -0.999 * half;
    double glo = solver.G(lo);
    if (glo > target)
        throw DomainError("renormalized_mass: s below the solvable window (mass would leave I_{N-1}(0))");

    // Prop. 3.8 scale of the root seeds the upper bracket.
    double bscale = (window == WindowKind::W) ? scales.hN : scales.lN;
    double guess = std::abs(s) * std::pow(bscale, -2.0) * std::pow(p.L, -p.d * N);
    double hi = std::max({2.0 * guess, std::pow(p.L, -2.0 * N), 1e-14});
    int expand = 0;
    while (solver.G(hi) < target) {
        hi *= 4.0;
        if (++expand > 60 || hi > 8.0)
            throw DomainError("renormalized_mass: s above the solvable window");
    }

    double tol = 1e-13 * std::max(1.0, std::abs(target));
    double mid = 0.0;
    for (int it = 0; it < 300; ++it) {
        mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        double gm = solver.G(mid);
        if (std::abs(gm - target) <= tol) return mid;
        if (gm < target)
            lo = mid;
        else
            hi = mid;
    }
    double resid = std::abs(solver.G(mid) - target);
    if (resid > 1e-12 * std::max(1.0, std::abs(target))) {
        std::ostringstream oss;
        oss << "renormalized_mass: bisection stalled with residual " << resid;
        throw NumericError(oss.str());
    }
    return mid;
}

double predicted_susceptibility(double s, int N, BoundaryCondition bc, const FlowParams& p) {
    (void)bc;  // the window profile is BC-independent once centred on nu*_{c,N}
    p.validate();
    ScaleSet scales = scale_set(N, p);
    double sigma2 = profiles::sigma_moment(p.n, 2.0, s);
    if (p.d == 4)
        return sigma2 / p.n * std::sqrt(scales.B * N) * std::pow(p.L, 2.0 * N);
    return sigma2 / p.n / std::sqrt(scales.g_inf_est) * std::pow(p.L, 0.5 * p.d * N);
}

double massive_susceptibility(double eps, const FlowParams& p) {
    p.validate();
    if (!(eps > 0.0)) throw DomainError("massive_susceptibility: requires eps > 0");
    double nu_c0 = critical_nu0_series(p, 0.0);
    auto G = [&](double m2) { return critical_nu0_series(p, m2) + m2 - nu_c0 - eps; };
    double lo = 0.0, hi = 2.0 * eps;
    while (G(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (G(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-14 * hi) break;
    }
    double m2 = 0.5 * (lo + hi);
    return 1.0 / m2;
}

}  // namespace hphi4::flow
