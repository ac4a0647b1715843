#pragma once

#include <functional>

#include "common.hpp"

namespace hphi4::quad {

struct QuadratureConfig {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subdivisions = 4000;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;   // estimated absolute error
    int panels = 0;
    bool converged = false;
};

// Globally adaptive bisection with fixed-order (15-point) Gauss-Legendre
// panels on [a,b].  The worst panel (by |GL(panel) - GL(left) - GL(right)|)
// is split until the summed error clears max(abs_tol, rel_tol*|I|).
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadratureConfig& cfg = {});

// Same, but throws NumericError (reporting the achieved error) on a blown
// subdivision budget.
double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          const QuadratureConfig& cfg = {}, const char* what = "integrate");

}  // namespace hphi4::quad
