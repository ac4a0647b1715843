#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

namespace hphi4::quad {

namespace {

// 15-point Gauss-Legendre nodes/weights on [-1,1].
constexpr int kOrder = 15;
constexpr double kNode[kOrder] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272,
    -0.7244177313601701, -0.5709721726085388, -0.3941513470775634,
    -0.2011940939974345, 0.0,                 0.2011940939974345,
    0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kWeight[kOrder] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719,
    0.1395706779261543, 0.1662692058169939, 0.1861610000155622,
    0.1984314853271116, 0.2025782419255613, 0.1984314853271116,
    0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

double gl15(const std::function<double(double)>& f, double a, double b) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < kOrder; ++i) acc += kWeight[i] * f(c + h * kNode[i]);
    return acc * h;
}

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel make_panel(const std::function<double(double)>& f, double a, double b) {
    double m = 0.5 * (a + b);
    double whole = gl15(f, a, b);
    double left = gl15(f, a, m);
    double right = gl15(f, m, b);
    double refined = left + right;
    return Panel{a, b, refined, std::abs(whole - refined)};
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadratureConfig& cfg) {
    QuadResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    std::priority_queue<Panel> q;
    q.push(make_panel(f, a, b));
    double total = q.top().value;
    double err = q.top().error;
    int splits = 0;
    while (splits < cfg.max_subdivisions) {
        double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
        if (err <= tol || !std::isfinite(err)) break;
        Panel worst = q.top();
        q.pop();
        double m = 0.5 * (worst.a + worst.b);
        Panel l = make_panel(f, worst.a, m);
        Panel r = make_panel(f, m, worst.b);
        total += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        q.push(l);
        q.push(r);
        ++splits;
    }
    res.value = total;
    res.error = std::max(err, 0.0);
    res.panels = static_cast<int>(q.size());
    res.converged =
        std::isfinite(total) && res.error <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
    return res;
}

double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          const QuadratureConfig& cfg, const char* what) {
    QuadResult r = integrate(f, a, b, cfg);
    if (!r.converged) {
        std::ostringstream oss;
        oss << what << ": adaptive quadrature did not converge on [" << a << "," << b
            << "]; achieved error " << r.error << " with " << r.panels << " panels";
        throw NumericError(oss.str());
    }
    return r.value;
}

}  // namespace hphi4::quad
