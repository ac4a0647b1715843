#include "lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hphi4::lattice {

namespace {

int64_t ipow(int64_t base, int exp) {
    int64_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (r > (int64_t(1) << 62) / base) throw DomainError("lattice: L^{dN} overflows");
        r *= base;
    }
    return r;
}

void check_site(const LatticeSpec& spec, int64_t x, const char* op) {
    if (x < 0 || x >= spec.site_count()) {
        std::ostringstream oss;
        oss << op << ": site index " << x << " out of range [0," << spec.site_count() << ")";
        throw DomainError(oss.str());
    }
}

void check_matrix_size(const LatticeSpec& spec, int64_t max_sites) {
    if (spec.site_count() > max_sites) {
        std::ostringstream oss;
        oss << "lattice: " << spec.site_count() << " sites exceeds the dense-matrix cap "
            << max_sites << " (matrices exist as oracles only)";
        throw DomainError(oss.str());
    }
}

}  // namespace

LatticeSpec::LatticeSpec(int L_, int d_, int N_, double alpha_) : L(L_), d(d_), N(N_), alpha(alpha_) {
    if (L < 2) throw DomainError("LatticeSpec: requires L >= 2");
    if (d < 1) throw DomainError("LatticeSpec: requires d >= 1");
    if (N < 0) throw DomainError("LatticeSpec: requires N >= 0");
    if (!(alpha > 0.0)) throw DomainError("LatticeSpec: requires alpha > 0");
    blockd_ = ipow(L, d);
    sites_ = ipow(blockd_, N);
}

double LatticeSpec::q() const {
    return (1.0 - std::pow(L, -d)) / (1.0 - std::pow(L, -(d + alpha)));
}

double LatticeSpec::z() const {
    return (1.0 - std::pow(L, -d)) / (std::pow(L, alpha) - 1.0);
}

SquareMatrix SquareMatrix::identity(int64_t n) {
    SquareMatrix m(n);
    for (int64_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

SquareMatrix SquareMatrix::multiply(const SquareMatrix& rhs) const {
    SquareMatrix out(n);
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t k = 0; k < n; ++k) {
            double v = at(i, k);
            if (v == 0.0) continue;
            const double* rrow = &rhs.a[static_cast<size_t>(k * n)];
            double* orow = &out.a[static_cast<size_t>(i * n)];
            for (int64_t j = 0; j < n; ++j) orow[j] += v * rrow[j];
        }
    }
    return out;
}

SquareMatrix SquareMatrix::plus(const SquareMatrix& rhs, double scale) const {
    SquareMatrix out(n);
    for (size_t i = 0; i < a.size(); ++i) out.a[i] = a[i] + scale * rhs.a[i];
    return out;
}

double SquareMatrix::row_sum(int64_t i) const {
    double s = 0.0;
    for (int64_t j = 0; j < n; ++j) s += at(i, j);
    return s;
}

double SquareMatrix::max_abs() const {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double SquareMatrix::max_asym() const {
    double m = 0.0;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = i + 1; j < n; ++j) m = std::max(m, std::abs(at(i, j) - at(j, i)));
    return m;
}

std::string SquareMatrix::to_csv() const {
    std::ostringstream oss;
    oss.precision(17);
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            if (j) oss << ',';
            oss << at(i, j);
        }
        oss << '\n';
    }
    return oss.str();
}

int coalescence_scale(const LatticeSpec& spec, int64_t x, int64_t y) {
    check_site(spec, x, "coalescence_scale");
    check_site(spec, y, "coalescence_scale");
    int64_t m = spec.block_size();
    int j = 0;
    int digit = 0;
    while (x != 0 || y != 0) {
        ++digit;
        if (x % m != y % m) j = digit;
        x /= m;
        y /= m;
    }
    return j;
}

int64_t group_add(const LatticeSpec& spec, int64_t x, int64_t y) {
    check_site(spec, x, "group_add");
    check_site(spec, y, "group_add");
    int64_t m = spec.block_size();
    int64_t out = 0;
    int64_t place = 1;
    for (int digit = 0; digit < spec.N; ++digit) {
        int64_t dx = x % m;
        int64_t dy = y % m;
        // component-wise mod-L addition of the Z_L^d digit
        int64_t dz = 0;
        int64_t axis_place = 1;
        for (int axis = 0; axis < spec.d; ++axis) {
            dz += ((dx % spec.L + dy % spec.L) % spec.L) * axis_place;
            dx /= spec.L;
            dy /= spec.L;
            axis_place *= spec.L;
        }
        out += dz * place;
        place *= m;
        x /= m;
        y /= m;
    }
    return out;
}

SquareMatrix step_matrix(const LatticeSpec& spec, BoundaryCondition bc, int64_t max_sites) {
    if (spec.N < 1) throw DomainError("step_matrix: requires N >= 1");
    check_matrix_size(spec, max_sites);
    int64_t n = spec.site_count();
    double zc = spec.z();
    double pbc_shift = std::pow(spec.L, -(spec.d + spec.alpha) * spec.N);
    SquareMatrix m(n);
    for (int64_t x = 0; x < n; ++x) {
        for (int64_t y = 0; y < n; ++y) {
            double v = 0.0;
            if (x != y)
                v = std::pow(spec.L, -(spec.d + spec.alpha) * coalescence_scale(spec, x, y)) / zc;
            if (bc == BoundaryCondition::Periodic) v += pbc_shift;
            m.at(x, y) = v;
        }
    }
    return m;
}

SquareMatrix laplacian(const LatticeSpec& spec, BoundaryCondition bc, int64_t max_sites) {
    SquareMatrix j = step_matrix(spec, bc, max_sites);
    double q = spec.q();
    int64_t n = j.n;
    SquareMatrix out(n);
    for (int64_t r = 0; r < n; ++r)
        for (int64_t c = 0; c < n; ++c) out.at(r, c) = q * ((r == c ? 1.0 : 0.0) - j.at(r, c));
    return out;
}

SquareMatrix projector_Q(const LatticeSpec& spec, int j, int64_t max_sites) {
    if (j < 0 || j > spec.N) throw DomainError("projector_Q: requires 0 <= j <= N");
    check_matrix_size(spec, max_sites);
    int64_t n = spec.site_count();
    int64_t bs = 1;
    for (int i = 0; i < j; ++i) bs *= spec.block_size();
    double w = 1.0 / static_cast<double>(bs);
    SquareMatrix m(n);
    for (int64_t x = 0; x < n; ++x)
        for (int64_t y = 0; y < n; ++y)
            if (x / bs == y / bs) m.at(x, y) = w;
    return m;
}

SquareMatrix projector_P(const LatticeSpec& spec, int j, int64_t max_sites) {
    if (j < 1 || j > spec.N) throw DomainError("projector_P: requires 1 <= j <= N");
    return projector_Q(spec, j - 1, max_sites).plus(projector_Q(spec, j, max_sites), -1.0);
}

double gamma_j(const LatticeSpec& spec, int j, double a) {
    double l2 = std::pow(spec.L, 2.0 * (j - 1));
    double denom = 1.0 + a * l2;
    if (!(denom > 0.0)) {
        std::ostringstream oss;
        oss << "gamma_j: mass a = " << a << " at or below -L^{-2(j-1)} for j = " << j;
        throw DomainError(oss.str());
    }
    return l2 / denom;
}

SquareMatrix covariance_component(const LatticeSpec& spec, int j, double a, int64_t max_sites) {
    if (spec.alpha != 2.0)
        throw DomainError("covariance_component: the resolvent decomposition requires alpha = 2");
    if (j < 1 || j > spec.N) throw DomainError("covariance_component: requires 1 <= j <= N");
    double g = gamma_j(spec, spec.N, a);  // validates a > -L^{-2(N-1)}
    (void)g;
    SquareMatrix p = projector_P(spec, j, max_sites);
    double w = gamma_j(spec, j, a);
    for (double& v : p.a) v *= w;
    return p;
}

SquareMatrix resolvent(const LatticeSpec& spec, BoundaryCondition bc, double a, int64_t max_sites) {
    if (spec.alpha != 2.0) throw DomainError("resolvent: requires alpha = 2");
    double zm = (bc == BoundaryCondition::Periodic) ? a : a + spec.q() * std::pow(spec.L, -2.0 * spec.N);
    if (zm == 0.0) throw DomainError("resolvent: zero-mode coefficient is singular at this mass");
    gamma_j(spec, spec.N, a);  // domain check a > -L^{-2(N-1)}
    SquareMatrix out = projector_Q(spec, spec.N, max_sites);
    for (double& v : out.a) v /= zm;
    for (int j = 1; j <= spec.N; ++j) {
        SquareMatrix c = covariance_component(spec, j, a, max_sites);
        out = out.plus(c);
    }
    return out;
}

double free_susceptibility(const LatticeSpec& spec, BoundaryCondition bc, double a) {
    double zm = (bc == BoundaryCondition::Periodic) ? a : a + spec.q() * std::pow(spec.L, -2.0 * spec.N);
    if (zm == 0.0) throw DomainError("free_susceptibility: singular mass");
    return 1.0 / zm;
}

double greens_diagonal(int L, int d, double a) {
    if (L < 2 || d < 1) throw DomainError("greens_diagonal: requires L >= 2, d >= 1");
    if (a < 0.0) throw DomainError("greens_diagonal: requires a >= 0");
    if (d <= 2 && a == 0.0)
        throw DomainError("greens_diagonal: series diverges for d <= 2 at a = 0");
    double pref = 1.0 - std::pow(L, -d);
    double sum = 0.0;
    for (int k = 0; k < 100000; ++k) {
        double term = pref * std::pow(L, -(d - 2.0) * k) / (1.0 + a * std::pow(L, 2.0 * k));
        sum += term;
        if (term < 1e-18 * sum && k > 4) break;
    }
    return sum;
}

}  // namespace hphi4::lattice
