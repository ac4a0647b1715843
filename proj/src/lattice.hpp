#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

namespace hphi4::lattice {

enum class BoundaryCondition { Free, Periodic };

inline const char* bc_name(BoundaryCondition bc) {
    return bc == BoundaryCondition::Free ? "free" : "periodic";
}

// Hierarchical lattice parameters and the derived constants used everywhere
// downstream.  Sites are the integers 0..L^{dN}-1, organised as N base-L^d
// digits (each digit a point of Z_L^d, itself stored as d base-L digits).
struct LatticeSpec {
    int L = 2;
    int d = 4;
    int N = 1;
    double alpha = 2.0;

    LatticeSpec() = default;
    LatticeSpec(int L_, int d_, int N_, double alpha_ = 2.0);

    int64_t site_count() const { return sites_; }
    int64_t block_size() const { return blockd_; }  // L^d
    double q() const;                               // (1-L^-d)/(1-L^-(d+alpha))
    double z() const;                               // (1-L^-d)/(L^alpha-1)
    double omega() const { return static_cast<double>(sites_); }

  private:
    int64_t sites_ = 0;
    int64_t blockd_ = 0;
};

// Dense symmetric matrices indexed by site; these exist purely as oracles,
// so lattice sizes are capped (default 16384 sites).
struct SquareMatrix {
    int64_t n = 0;
    std::vector<double> a;  // row-major

    SquareMatrix() = default;
    explicit SquareMatrix(int64_t n_) : n(n_), a(static_cast<size_t>(n_ * n_), 0.0) {}

    double& at(int64_t i, int64_t j) { return a[static_cast<size_t>(i * n + j)]; }
    double at(int64_t i, int64_t j) const { return a[static_cast<size_t>(i * n + j)]; }

    static SquareMatrix identity(int64_t n);
    SquareMatrix multiply(const SquareMatrix& rhs) const;
    SquareMatrix plus(const SquareMatrix& rhs, double scale = 1.0) const;
    double row_sum(int64_t i) const;
    double max_abs() const;
    double max_asym() const;  // ||M - M^T||_inf entrywise
    std::string to_csv() const;  // row-major, 17 significant digits
};

inline constexpr int64_t kDefaultMaxSites = 16384;

// Smallest j such that x and y share a j-block; 0 iff x == y.
int coalescence_scale(const LatticeSpec& spec, int64_t x, int64_t y);

// Digit-wise mod-L addition through the sigma bijection.
int64_t group_add(const LatticeSpec& spec, int64_t x, int64_t y);

// Random-walk step matrices J^F / J^P.
SquareMatrix step_matrix(const LatticeSpec& spec, BoundaryCondition bc,
                         int64_t max_sites = kDefaultMaxSites);

// -Delta^* = q (1 - J^*).
SquareMatrix laplacian(const LatticeSpec& spec, BoundaryCondition bc,
                       int64_t max_sites = kDefaultMaxSites);

// Block-averaging projector Q_j (j in [0,N]) and P_j = Q_{j-1} - Q_j (j in [1,N]).
SquareMatrix projector_Q(const LatticeSpec& spec, int j, int64_t max_sites = kDefaultMaxSites);
SquareMatrix projector_P(const LatticeSpec& spec, int j, int64_t max_sites = kDefaultMaxSites);

// gamma_j(a) = L^{2(j-1)} / (1 + a L^{2(j-1)}), the alpha = 2 covariance weight.
double gamma_j(const LatticeSpec& spec, int j, double a);

// C_j(a) = gamma_j(a) P_j; requires alpha == 2 and a > -L^{-2(N-1)}.
SquareMatrix covariance_component(const LatticeSpec& spec, int j, double a,
                                  int64_t max_sites = kDefaultMaxSites);

// (-Delta^* + a)^{-1} assembled from the scale decomposition plus the
// zero-mode term Q_N/a (PBC) or Q_N/(a + q L^{-2N}) (FBC).
SquareMatrix resolvent(const LatticeSpec& spec, BoundaryCondition bc, double a,
                       int64_t max_sites = kDefaultMaxSites);

// Free susceptibility chi^{*,0}_N(a) = row sum of the resolvent (closed form).
double free_susceptibility(const LatticeSpec& spec, BoundaryCondition bc, double a);

// Infinite-volume Green function diagonal for alpha = 2:
// (-Delta)^{-1}_{00} = sum_{k>=0} (1-L^-d) L^{-(d-2)k} / (1 + a L^{2k}).
double greens_diagonal(int L, int d, double a);

}  // namespace hphi4::lattice
