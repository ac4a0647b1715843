#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "common.hpp"
#include "lattice.hpp"

namespace hphi4::flow {

using lattice::BoundaryCondition;

inline constexpr int64_t kMassScaleInfinite = INT64_MAX;

struct FlowParams {
    int d = 4;
    int n = 1;
    int L = 2;
    double g0 = 0.01;
    double a = 0.0;        // covariance mass for the flow
    double tilde_a = 0.0;  // reference mass for the tilde-g sequence and bands
    double xi0 = 0.0;      // the xi_0^0 constant; unspecified by the theory, default 0
    int64_t jmax = 0;      // 0 = dimension default (1e5 for d=4, 400 for d>4)

    int64_t horizon() const { return jmax > 0 ? jmax : (d == 4 ? 100000 : 400); }
    double gamma_hat() const { return (n + 2.0) / (n + 8.0); }
    double big_B() const { return (n + 8.0) * (1.0 - std::pow(L, -d)); }
    double q() const {
        return (1.0 - std::pow(L, -d)) / (1.0 - std::pow(L, -(d + 2.0)));
    }
    void validate() const;
};

struct Coefficients {
    double beta = 0.0, eta = 0.0, xi = 0.0;
    // mass derivatives, used by the derivative block
    double beta_dot = 0.0, eta_dot = 0.0, xi_dot = 0.0;
};

// beta_j = (n+8)(1-L^-d)(1+aL^{2j})^{-2} L^{-(d-4)j}, and friends.
Coefficients coefficients(int64_t j, double a, const FlowParams& p);

struct CouplingState {
    int64_t j = 0;
    double g = 0.0;
    double nu = 0.0;
    bool has_derivs = false;
    // the mass derivatives grow like L^{2j} below the mass scale and leave
    // double range near j ~ 500; they are then NaN with the flag cleared
    bool mass_derivs_valid = true;
    double dg_dnu0 = 0.0;   // identically 0 along the perturbative flow
    double dnu_dnu0 = 1.0;
    double dg_da = 0.0;
    double dnu_da = 0.0;

    static CouplingState initial(double g0, double nu0, bool with_derivs);
};

// One step of the second-order perturbative map, with the differentiated
// recursions advanced alongside when the derivative block is enabled.
CouplingState pt_step(const CouplingState& s, double a, const FlowParams& p);

// j_a = max{ j : L^{2j} a <= 1 }; kMassScaleInfinite when a <= 0.
int64_t mass_scale(double a, int L);

// vartheta_j = 2^{-(j - j_tilde_a)_+} for tilde_a < 1, tilde_a^{-1} 2^{-j} otherwise.
double vartheta(int64_t j, double tilde_a, int L);

// Reference sequence tilde_g_j (recursion with mass tilde_a); halving condition
// tilde_g_{j+1} in [tilde_g_j/2, tilde_g_j] is enforced.
std::vector<double> tilde_g_sequence(const FlowParams& p, int64_t jmax);

// Half-width of the admissible band J_j = 6(n+2) vartheta_j tilde_g_j rho_j L^{-2j}.
double band_halfwidth(int64_t j, double tilde_g_j, const FlowParams& p);

struct FlowTrace {
    std::vector<CouplingState> states;  // stride-sampled, states.front() is j=0
    int64_t stride = 1;
};

enum class FlowOutcome { Stayed, EscapedAbove, EscapedBelow };

struct FlowClassification {
    FlowOutcome outcome = FlowOutcome::Stayed;
    int64_t escape_scale = -1;
};

// Runs the flow with initial condition (g0, nu0) and mass p.a, testing nu_j
// against the J_j band at every scale up to jmax.
FlowClassification classify_flow(double nu0, const FlowParams& p, int64_t jmax,
                                 const std::vector<double>& tilde_g);

FlowTrace run_flow(double nu0, double a, const FlowParams& p, int64_t jmax,
                   bool with_derivs = true, int64_t stride = 1);

struct CriticalResult {
    double nu_c = 0.0;
    double bracket_width = 0.0;
    int iterations = 0;
    FlowTrace trace;
};

// Bleher-Sinai nested-interval bisection for the critical nu_0 at mass p.a
// (reference mass p.tilde_a): the returned nu_0 keeps nu_j inside J_j for all
// j <= jmax.  Monotonicity of nu_jmax in nu_0 (nu' > 0) makes bisection sound.
CriticalResult bleher_sinai_critical(const FlowParams& p, int64_t jmax = 0, double rel_tol = 1e-13);

// Backward-summed closed form of the same critical point:
// nu_c(a) = sum_k (-eta_k g_k + xi_k g_k^2) / Pi_{0,k-1}.  Agrees with the
// bisection to ~1e-10 (tested); used by the solver family for speed.
double critical_nu0_series(const FlowParams& p, double a, int64_t kmax = 0);

// nu_N and its derivative block after N steps from (nu0, a).
CouplingState flow_to_scale(double nu0, double a, const FlowParams& p, int64_t N,
                            bool with_derivs = true);

// nu_{0,N}(a): the unique initial value whose scale-N coupling matches the
// reference flow (nu_c(0), 0); requires a in I_{N-1}(0).
double nu_0N(double a, int N, const FlowParams& p);

// d nu_{0,N}/da via the implicit-function formula -dot(nu)_N / nu'_N evaluated
// at (nu_{0,N}(a), a).
double nu_0N_slope(double a, int N, const FlowParams& p);

// Effective critical points: nu_c(0) for PBC, nu_{0,N}(-qL^{-2N}) - qL^{-2N} for FBC.
double effective_critical_point(BoundaryCondition bc, int N, const FlowParams& p);

struct ScaleSet {
    double wN = 0.0, vN = 0.0, hN = 0.0, lN = 0.0, pN = 0.0;
    double B = 0.0, g_inf_est = 0.0, A_d_est = 0.0;
};

ScaleSet scale_set(int N, const FlowParams& p,
                   const std::function<double(double)>& nu_c_fn = nullptr);

enum class WindowKind { W, V };

// Renormalised mass a with nu*_{c,N} + s*y_N = nu_{1,N}(a) + a, y = w_N or v_N.
double renormalized_mass(double s, int N, BoundaryCondition bc, WindowKind window,
                         const FlowParams& p);

// In-window susceptibility prediction n^{-1} Sigma_{n,2}(s) times the volume scaling.
double predicted_susceptibility(double s, int N, BoundaryCondition bc, const FlowParams& p);

// Above-window (massive) prediction: solves nu_c(0) + eps = nu_c(m^2) + m^2 and
// returns chi = 1/m^2.
double massive_susceptibility(double eps, const FlowParams& p);

}  // namespace hphi4::flow
