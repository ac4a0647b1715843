#include <doctest.h>

#include <cmath>
#include <random>

#include "lattice.hpp"

using namespace hphi4;
using namespace hphi4::lattice;

namespace {

// Independent block-partition oracle: smallest j with x, y in the same j-block,
// where j-blocks are the contiguous runs of L^{dj} consecutive site indices.
int oracle_coalescence(const LatticeSpec& spec, int64_t x, int64_t y) {
    for (int j = 0; j <= spec.N; ++j) {
        int64_t bs = 1;
        for (int i = 0; i < j; ++i) bs *= spec.block_size();
        if (x / bs == y / bs) return j;
    }
    return -1;
}

}  // namespace

TEST_CASE("lattice spec invariants") {
    LatticeSpec s(2, 4, 2);
    CHECK(s.site_count() == 256);
    CHECK(s.q() == doctest::Approx(20.0 / 21.0).epsilon(1e-15));
    CHECK(s.z() == doctest::Approx(5.0 / 16.0).epsilon(1e-15));
    CHECK_THROWS_AS(LatticeSpec(1, 1, 1), DomainError);
}

TEST_CASE("z against the direct series") {
    LatticeSpec s(2, 4, 3);
    // z = sum_k n_k L^{-(d+alpha)k}, n_k = L^{dk}(1 - L^{-d})
    double acc = 0.0;
    for (int k = 1; k < 200; ++k)
        acc += (std::pow(2.0, 4.0 * k) - std::pow(2.0, 4.0 * (k - 1))) * std::pow(2.0, -6.0 * k);
    CHECK(s.z() == doctest::Approx(acc).epsilon(1e-13));
}

TEST_CASE("coalescence scale") {
    LatticeSpec s(2, 1, 3);
    CHECK(coalescence_scale(s, 5, 5) == 0);
    CHECK(coalescence_scale(s, 0, 1) == 1);
    CHECK(coalescence_scale(s, 0, 4) == 3);
    for (int64_t x = 0; x < s.site_count(); ++x)
        for (int64_t y = 0; y < s.site_count(); ++y)
            CHECK(coalescence_scale(s, x, y) == oracle_coalescence(s, x, y));
    CHECK_THROWS_AS(coalescence_scale(s, 0, 8), DomainError);
}

TEST_CASE("group addition and translation invariance") {
    LatticeSpec s(2, 1, 3);
    CHECK(group_add(s, 5, 0) == 5);
    CHECK(group_add(s, 1, 1) == 0);

    LatticeSpec s2(3, 2, 2);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int64_t> pick(0, s2.site_count() - 1);
    for (int it = 0; it < 200; ++it) {
        int64_t x = pick(rng), y = pick(rng), z = pick(rng);
        CHECK(group_add(s2, x, y) == group_add(s2, y, x));
        CHECK(group_add(s2, group_add(s2, x, y), z) == group_add(s2, x, group_add(s2, y, z)));
        // j_{x+z, y+z} = j_{x,y}
        CHECK(coalescence_scale(s2, group_add(s2, x, z), group_add(s2, y, z)) ==
              coalescence_scale(s2, x, y));
        // ultrametric: j_xz <= max(j_xy, j_yz)
        CHECK(coalescence_scale(s2, x, z) <=
              std::max(coalescence_scale(s2, x, y), coalescence_scale(s2, y, z)));
    }
}

TEST_CASE("step matrices: row sums, defect, positivity") {
    for (auto par : {std::pair<int, int>{2, 1}, {2, 4}, {3, 2}}) {
        LatticeSpec s(par.first, par.second, 2);
        SquareMatrix jf = step_matrix(s, BoundaryCondition::Free);
        SquareMatrix jp = step_matrix(s, BoundaryCondition::Periodic);
        double defect = std::pow(s.L, -s.alpha * s.N);
        for (int64_t i = 0; i < jf.n; ++i) {
            CHECK(jf.row_sum(i) == doctest::Approx(1.0 - defect).epsilon(1e-12));
            CHECK(jp.row_sum(i) == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(jf.at(0, 0) == 0.0);
        for (double v : jf.a) CHECK(v >= 0.0);
        for (double v : jp.a) CHECK(v > 0.0);
        CHECK(jf.max_asym() < 1e-12);
    }
}

TEST_CASE("laplacians: row sums and the exact FBC-PBC difference") {
    LatticeSpec s(2, 4, 2);
    SquareMatrix lf = laplacian(s, BoundaryCondition::Free);
    SquareMatrix lp = laplacian(s, BoundaryCondition::Periodic);
    double q = s.q();
    double shift = q * std::pow(s.L, -2.0 * s.N);
    for (int64_t i = 0; i < lf.n; ++i) {
        CHECK(std::abs(lp.row_sum(i)) < 1e-12);
        CHECK(lf.row_sum(i) == doctest::Approx(shift).epsilon(1e-10));
    }
    // -Delta^F - (-Delta^P) = q L^{-alpha N} Q_N entrywise
    SquareMatrix qn = projector_Q(s, s.N);
    for (int64_t i = 0; i < lf.n; ++i)
        for (int64_t j = 0; j < lf.n; ++j)
            CHECK(std::abs(lf.at(i, j) - lp.at(i, j) - shift * qn.at(i, j)) < 1e-14);
}

TEST_CASE("projection algebra at machine precision") {
    LatticeSpec s(2, 2, 2);
    SquareMatrix q2 = projector_Q(s, s.N);
    SquareMatrix sum = q2;
    for (int j = 1; j <= s.N; ++j) {
        SquareMatrix pj = projector_P(s, j);
        // idempotent
        SquareMatrix pj2 = pj.multiply(pj);
        CHECK(pj2.plus(pj, -1.0).max_abs() < 1e-12);
        // orthogonal to the others
        for (int k = j + 1; k <= s.N; ++k) {
            SquareMatrix pk = projector_P(s, k);
            CHECK(pj.multiply(pk).max_abs() < 1e-12);
        }
        sum = sum.plus(pj);
    }
    CHECK(sum.plus(SquareMatrix::identity(s.site_count()), -1.0).max_abs() < 1e-12);
}

TEST_CASE("covariance components annihilate constants") {
    LatticeSpec s(2, 4, 2);
    CHECK(gamma_j(s, 1, 0.0) == doctest::Approx(1.0));
    CHECK(gamma_j(s, 2, 0.0) == doctest::Approx(4.0));
    SquareMatrix c1 = covariance_component(s, 1, 0.3);
    for (int64_t i = 0; i < c1.n; ++i) CHECK(std::abs(c1.row_sum(i)) < 1e-12);
    CHECK_THROWS_AS(covariance_component(s, 1, -0.3), DomainError);
    LatticeSpec bad(2, 4, 2, 1.5);
    CHECK_THROWS_AS(covariance_component(bad, 1, 0.0), DomainError);
}

TEST_CASE("resolvent identity at 20 random masses, both boundary conditions") {
    LatticeSpec s(2, 4, 2);
    SquareMatrix eye = SquareMatrix::identity(s.site_count());
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> mass(-0.24, 2.0);
    for (auto bc : {BoundaryCondition::Free, BoundaryCondition::Periodic}) {
        SquareMatrix lap = laplacian(s, bc);
        int done = 0;
        while (done < 20) {
            double a = mass(rng);
            double zm = (bc == BoundaryCondition::Periodic)
                            ? a
                            : a + s.q() * std::pow(s.L, -2.0 * s.N);
            if (std::abs(zm) < 1e-3) continue;
            SquareMatrix r = resolvent(s, bc, a);
            SquareMatrix lhs = lap;
            for (int64_t i = 0; i < lhs.n; ++i) lhs.at(i, i) += a;
            SquareMatrix prod = lhs.multiply(r);
            CHECK(prod.plus(eye, -1.0).max_abs() < 1e-10);
            ++done;
        }
    }
    // explicit spec example
    SquareMatrix r = resolvent(s, BoundaryCondition::Periodic, 0.3);
    SquareMatrix lhs = laplacian(s, BoundaryCondition::Periodic);
    for (int64_t i = 0; i < lhs.n; ++i) lhs.at(i, i) += 0.3;
    CHECK(lhs.multiply(r).plus(eye, -1.0).max_abs() < 1e-10);
}

TEST_CASE("free susceptibilities") {
    LatticeSpec s(2, 4, 2);
    // PBC: resolvent row sum = 1/a per site
    SquareMatrix rp = resolvent(s, BoundaryCondition::Periodic, 0.37);
    for (int64_t i = 0; i < rp.n; ++i)
        CHECK(rp.row_sum(i) == doctest::Approx(1.0 / 0.37).epsilon(1e-10));
    CHECK(free_susceptibility(s, BoundaryCondition::Periodic, 0.37) ==
          doctest::Approx(1.0 / 0.37).epsilon(1e-14));
    // FBC at a = 0: q^{-1} L^{2N}
    SquareMatrix rf = resolvent(s, BoundaryCondition::Free, 0.0);
    double expect = std::pow(s.L, 2.0 * s.N) / s.q();
    for (int64_t i = 0; i < rf.n; ++i)
        CHECK(rf.row_sum(i) == doctest::Approx(expect).epsilon(1e-10));
    CHECK(free_susceptibility(s, BoundaryCondition::Free, 0.0) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(resolvent(s, BoundaryCondition::Periodic, 0.0), DomainError);
}

TEST_CASE("greens diagonal") {
    // a = 0 closed form (1 - L^-d) / (1 - L^-(d-2))
    for (auto par : {std::pair<int, int>{2, 3}, {2, 4}, {3, 5}}) {
        double expect = (1.0 - std::pow(par.first, -par.second)) /
                        (1.0 - std::pow(par.first, -(par.second - 2.0)));
        CHECK(greens_diagonal(par.first, par.second, 0.0) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
    // monotone decreasing toward 0 in a
    double prev = greens_diagonal(2, 4, 0.0);
    for (double a : {0.5, 2.0, 20.0, 500.0}) {
        double v = greens_diagonal(2, 4, a);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-2);
    CHECK_THROWS_AS(greens_diagonal(2, 2, 0.0), DomainError);

    // consistency: finite-N PBC resolvent diagonal approaches the series as N grows
    double a = 0.45;
    double series = greens_diagonal(2, 4, a);
    double prev_err = kInf;
    for (int N = 1; N <= 3; ++N) {
        LatticeSpec s(2, 4, N);
        SquareMatrix r = resolvent(s, BoundaryCondition::Periodic, a);
        double err = std::abs(r.at(0, 0) - series);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 2e-4);
}

TEST_CASE("size cap rejects oversized dense matrices") {
    LatticeSpec s(2, 4, 4);  // 65536 sites
    CHECK_THROWS_WITH_AS(step_matrix(s, BoundaryCondition::Free), doctest::Contains("cap"),
                         DomainError);
}

TEST_CASE("csv export uses 17 significant digits") {
    SquareMatrix m(2);
    m.at(0, 0) = 1.0 / 3.0;
    m.at(1, 1) = 2.0;
    std::string csv = m.to_csv();
    CHECK(csv.find("0.33333333333333331") != std::string::npos);
    CHECK(csv.find("2") != std::string::npos);
}
