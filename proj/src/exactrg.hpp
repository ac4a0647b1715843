#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lattice.hpp"
#include "quadrature.hpp"

namespace hphi4::exactrg {

using lattice::BoundaryCondition;
using lattice::LatticeSpec;
using quad::QuadratureConfig;

// Per-block radial Boltzmann factor at scale j: z_j(|phi|) with
// W(r) = -log z_j(r) normalised to W(0) = 0 and the absolute normalisation
// tracked in log_offset (W_true = W + log_offset).  stderr holds the per-point
// Monte Carlo standard error of the *unnormalised* W (streams are independent
// across grid points, so pointwise errors are independent).
struct RadialPotential {
    int scale_j = 0;
    int n = 1;
    std::vector<double> r;
    std::vector<double> w;
    std::vector<double> se;
    double log_offset = 0.0;

    double upper() const { return r.empty() ? 0.0 : r.back(); }
    void validate() const;
};

struct MCConfig {
    int64_t samples = 4096;
    uint64_t seed = 1;
    bool antithetic = true;
    enum class Interp { Linear, Cubic } interp = Interp::Cubic;
    // Probes past the grid limit ride on the quartic tail fit; a sample whose
    // radius exceeds (1+margin)*R aborts the step.  Mis-extrapolated weights
    // are e^{-W} suppressed, so a wide margin is safe.
    double extrapolation_margin = 1.0;
    int threads = 1;
    int grid_points = 256;
};

// Hybrid linear-geometric radial grid on [0, R]: spacing grows toward the
// tail where the quartic decay makes resolution cheap.
std::vector<double> make_grid(double R, int points);

// Grid limit from the initial potential: covers e^{-W} down to ~1e-19 plus a
// 6 sigma fluctuation guard for the first RG step.
std::vector<double> default_grid(double g, double nu, int n, double sigma1, int points);

// W_0(r) = (g/4) r^4 + (nu/2) r^2.
RadialPotential init_potential(double g, double nu, int n, std::vector<double> grid);

// One exact-RG step: z_{j+1}(phi) = E prod_{b=1}^{m} z_j(phi + xi_b) with
// sum-zero block fluctuations xi_b = sigma (eta_b - eta_bar),
// sigma^2 = gamma_{j+1}(a) L^{-dj} per component.  Log-domain throughout.
RadialPotential rg_step(const RadialPotential& w, double a, const LatticeSpec& spec,
                        const MCConfig& mc);

struct ObservableRequest {
    std::vector<int> moments_p = {1, 2};   // requests <|Phi|^{2p}>
    std::vector<double> laplace_j = {};    // requests <e^{J.Phi}> at these |J|
};

struct Scalar {
    double value = 0.0;
    double se = 0.0;
};

struct ObservableSet {
    BoundaryCondition bc = BoundaryCondition::Periodic;
    Scalar chi;
    std::map<int, Scalar> moments;          // p -> <|Phi|^{2p}>
    std::map<double, Scalar> laplace;       // |J| -> <e^{J.Phi}>
    Scalar kurtosis;                        // <|Phi|^4>/<|Phi|^2>^2
};

// Zero-mode integrals of the final-scale potential:
// <|Phi|^{2p}> = int r^{n-1+2p} e^{-W(r) - kappa Omega r^2 / 2} dr / (p=0 case),
// kappa = a (PBC) or a + q L^{-2N} (FBC); chi = Omega <|Phi|^2> / n.
ObservableSet zero_mode_observables(const RadialPotential& wN, BoundaryCondition bc, double a,
                                    const LatticeSpec& spec, const ObservableRequest& req,
                                    const QuadratureConfig& cfg = {});

// Full-lattice estimator of Z_N on the grid (N <= 2): samples the entire
// hierarchical Gaussian field and averages e^{-V_0(phi + y 1)}.  Returns the
// *unnormalised* -log average (log_offset = 0).
RadialPotential direct_mc_check(const LatticeSpec& spec, double g, double nu, double a,
                                const std::vector<double>& grid, int64_t samples, uint64_t seed,
                                int n = 1);

struct CriticalScanConfig {
    double nu_center = 0.0;
    double nu_halfwidth = 0.0;
    int max_bisection = 14;
    double kurtosis_tol_sigmas = 1.5;  // stop when |kurt-target| < this * stderr
};

// nu at which the zero-mode kurtosis matches the universal window value
// R^{(4)}_n(0), with the zero-mode mass set flat (a = 0 for PBC,
// a = -q L^{-2N} for FBC).  Common random numbers across nu values.
double locate_effective_critical(const LatticeSpec& spec, BoundaryCondition bc, double g, int n,
                                 const CriticalScanConfig& scan, const MCConfig& mc);

// Runs the whole pipeline W_0 -> W_N; returns every scale (index j = 0..N).
std::vector<RadialPotential> run_pipeline(const LatticeSpec& spec, double g, double nu, double a,
                                          int n, const MCConfig& mc);

// Checkpoint: JSON header line + CSV rows (r, W, stderr), 17 significant digits.
struct CheckpointMeta {
    LatticeSpec spec;
    double g = 0.0, nu = 0.0, a = 0.0;
    uint64_t seed = 0;
    int64_t samples = 0;
    bool antithetic = true;
    std::vector<std::string> lineage;
};

void save_checkpoint(const RadialPotential& pot, const CheckpointMeta& meta,
                     const std::string& path);
RadialPotential load_checkpoint(const std::string& path, CheckpointMeta* meta_out = nullptr);

}  // namespace hphi4::exactrg
