#include "exactrg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "profiles.hpp"

namespace hphi4::exactrg {

namespace {

// Least-squares quartic tail model W ~ c4 r^4 + c2 r^2 + c0 fitted to the last
// 20% of the grid; z_j has quartic log-tails at every scale, so this is the
// natural extrapolant.
struct QuarticTail {
    double c4 = 0.0, c2 = 0.0, c0 = 0.0;

    static QuarticTail fit(const std::vector<double>& r, const std::vector<double>& y) {
        size_t m = r.size();
        size_t lo = m - std::max<size_t>(4, m / 5);
        double a11 = 0, a12 = 0, a13 = 0, a22 = 0, a23 = 0, a33 = 0;
        double b1 = 0, b2 = 0, b3 = 0;
        for (size_t i = lo; i < m; ++i) {
            double x2 = r[i] * r[i];
            double x4 = x2 * x2;
            a11 += x4 * x4;
            a12 += x4 * x2;
            a13 += x4;
            a22 += x4;
            a23 += x2;
            a33 += 1.0;
            b1 += x4 * y[i];
            b2 += x2 * y[i];
            b3 += y[i];
        }
        double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
                     a13 * (a12 * a23 - a22 * a13);
        QuarticTail t;
        if (std::abs(det) < 1e-30) {
            t.c0 = y.back();
            return t;
        }
        t.c4 = (b1 * (a22 * a33 - a23 * a23) - a12 * (b2 * a33 - a23 * b3) +
                a13 * (b2 * a23 - a22 * b3)) /
               det;
        t.c2 = (a11 * (b2 * a33 - b3 * a23) - b1 * (a12 * a33 - a23 * a13) +
                a13 * (a12 * b3 - b2 * a13)) /
               det;
        t.c0 = (a11 * (a22 * b3 - a23 * b2) - a12 * (a12 * b3 - b2 * a13) +
                b1 * (a12 * a23 - a22 * a13)) /
               det;
        return t;
    }

    double eval(double x) const {
        double x2 = x * x;
        return c4 * x2 * x2 + c2 * x2 + c0;
    }
};

// Natural cubic spline (or linear) on a strictly increasing grid with an O(1)
// bracketing hint table; continuous quartic extrapolation beyond the last node.
class Interpolant {
  public:
    Interpolant(const std::vector<double>& x, const std::vector<double>& y, bool cubic,
                double margin)
        : x_(x), y_(y), cubic_(cubic), margin_(margin) {
        size_t m = x_.size();
        if (m < 4) throw DomainError("Interpolant: needs at least 4 grid points");
        tail_ = QuarticTail::fit(x_, y_);
        anchor_ = y_.back() - tail_.eval(x_.back());
        if (cubic_) build_spline();
        hint_.resize(kHintSize + 1, 0);
        double R = x_.back();
        size_t k = 0;
        for (int c = 0; c <= kHintSize; ++c) {
            double v = R * c / kHintSize;
            while (k + 2 < m && x_[k + 1] <= v) ++k;
            hint_[c] = k;
        }
    }

    double upper() const { return x_.back(); }
    double max_radius() const { return x_.back() * (1.0 + margin_); }

    double operator()(double v) const {
        if (v <= x_.front()) return y_.front();
        if (v > x_.back()) return tail_.eval(v) + anchor_;
        size_t i = locate(v);
        double h = x_[i + 1] - x_[i];
        double tt = (v - x_[i]) / h;
        if (!cubic_) return y_[i] * (1.0 - tt) + y_[i + 1] * tt;
        double a = 1.0 - tt;
        return a * y_[i] + tt * y_[i + 1] +
               ((a * a * a - a) * y2_[i] + (tt * tt * tt - tt) * y2_[i + 1]) * (h * h) / 6.0;
    }

  private:
    static constexpr int kHintSize = 512;

    size_t locate(double v) const {
        int c = std::min(kHintSize, static_cast<int>(v / x_.back() * kHintSize));
        size_t i = hint_[std::max(c, 0)];
        while (i + 2 < x_.size() && x_[i + 1] <= v) ++i;
        while (i > 0 && x_[i] > v) --i;
        return i;
    }

    void build_spline() {
        size_t m = x_.size();
        y2_.assign(m, 0.0);
        std::vector<double> u(m, 0.0);
        for (size_t i = 1; i + 1 < m; ++i) {
            double sig = (x_[i] - x_[i - 1]) / (x_[i + 1] - x_[i - 1]);
            double p = sig * y2_[i - 1] + 2.0;
            y2_[i] = (sig - 1.0) / p;
            double d = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]) -
                       (y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]);
            u[i] = (6.0 * d / (x_[i + 1] - x_[i - 1]) - sig * u[i - 1]) / p;
        }
        for (size_t i = m - 1; i-- > 1;) y2_[i] = y2_[i] * y2_[i + 1] + u[i];
    }

    std::vector<double> x_, y_, y2_;
    std::vector<size_t> hint_;
    bool cubic_;
    double margin_;
    QuarticTail tail_;
    double anchor_ = 0.0;
};

// Streaming log-sum-exp accumulator with a second moment for ESS/stderr.
struct LseAccumulator {
    double mx = -kInf;
    double acc = 0.0, acc2 = 0.0;
    int64_t units = 0;

    void add(double x) {
        if (x > mx) {
            double s = std::exp(mx - x);
            acc = acc * s + 1.0;
            acc2 = acc2 * s * s + 1.0;
            mx = x;
        } else {
            double e = std::exp(x - mx);
            acc += e;
            acc2 += e * e;
        }
        ++units;
    }

    double minus_log_mean() const { return -(mx + std::log(acc / units)); }
    double ess() const { return acc * acc / std::max(acc2, 1e-300); }
    double se_of_log() const {
        if (units < 2) return 0.0;
        double mean = acc / units;
        double var = (acc2 - acc * acc / units) / (units - 1.0);
        return std::sqrt(std::max(var, 0.0) / units) / mean;
    }
};

}  // namespace

void RadialPotential::validate() const {
    if (r.size() < 4 || r.size() != w.size())
        throw DomainError("RadialPotential: grid/value size mismatch or too small");
    if (r.front() != 0.0) throw DomainError("RadialPotential: grid must start at r = 0");
    for (size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1])) throw DomainError("RadialPotential: grid must be increasing");
    for (double v : w)
        if (!std::isfinite(v)) throw NumericError("RadialPotential: non-finite W value");
    if (n < 1) throw DomainError("RadialPotential: requires n >= 1");
}

std::vector<double> make_grid(double R, int points) {
    if (!(R > 0.0) || points < 8) throw DomainError("make_grid: bad parameters");
    std::vector<double> g(points);
    const double lambda = 0.7;
    for (int i = 0; i < points; ++i) {
        double u = static_cast<double>(i) / (points - 1);
        g[i] = R * ((1.0 - lambda) * u + lambda * u * u);
    }
    g[0] = 0.0;
    return g;
}

std::vector<double> default_grid(double g, double nu, int n, double sigma1, int points) {
    auto w0 = [&](double r) { return 0.25 * g * r * r * r * r + 0.5 * nu * r * r; };
    double wmin = 0.0, R = 0.0;
    for (double r = 0.05; r < 1e4; r += 0.05) {
        wmin = std::min(wmin, w0(r));
        if (w0(r) - wmin >= 45.0) {
            R = r;
            break;
        }
    }
    if (R == 0.0) throw DomainError("default_grid: potential does not confine on the scan range");
    R += 6.0 * sigma1 * std::sqrt(static_cast<double>(n)) + 1.0;
    return make_grid(R, points);
}

RadialPotential init_potential(double g, double nu, int n, std::vector<double> grid) {
    if (g < 0.0) throw DomainError("init_potential: requires g >= 0");
    if (n < 1) throw DomainError("init_potential: requires n >= 1");
    RadialPotential p;
    p.scale_j = 0;
    p.n = n;
    p.r = std::move(grid);
    p.w.resize(p.r.size());
    p.se.assign(p.r.size(), 0.0);
    for (size_t i = 0; i < p.r.size(); ++i) {
        double r2 = p.r[i] * p.r[i];
        p.w[i] = 0.25 * g * r2 * r2 + 0.5 * nu * r2;
    }
    p.log_offset = 0.0;
    p.validate();
    return p;
}

namespace {

struct PointResult {
    double w = 0.0;
    double se = 0.0;
    double ess = 0.0;
};

// Monte Carlo estimate of W_{j+1} at one radius.  The stream is derived from
// (seed, scale, point index), so the result does not depend on threading.
//
// A per-point quadratic tilt removes the dominant weight variance exactly:
// for any c_q with 1 + c_q sigma^2 > 0,
//   E_{sigma^2} prod_b e^{-W(|phi+xi_b|)}
//     = e^{-(c_q m/2)|phi|^2} (1+c_q sigma^2)^{-n(m-1)/2}
//       E_{tilde sigma^2} prod_b e^{-What(|phi+xi_b|)},
// with What = W - (c_q/2) u^2 and tilde sigma^2 = sigma^2/(1+c_q sigma^2);
// the phi cross term drops because the xi are sum-zero.  A purely quadratic W
// is therefore estimated with zero variance.
PointResult evaluate_point(double radius, const Interpolant& wj, int n, int64_t m, double sigma,
                           double c_q, int64_t samples, uint64_t stream_seed, bool antithetic,
                           int point_index) {
    NormalSampler ns(stream_seed);
    std::vector<double> eta(static_cast<size_t>(m) * n);
    double max_radius = wj.max_radius();
    double sigma2 = sigma * sigma;
    double tilt_norm = 1.0 + c_q * sigma2;
    double sigma_t = sigma / std::sqrt(tilt_norm);

    LseAccumulator lse;
    int64_t pairs = antithetic ? std::max<int64_t>(samples / 2, 1) : samples;
    for (int64_t k = 0; k < pairs; ++k) {
        for (double& e : eta) e = ns();
        for (int c = 0; c < n; ++c) {
            double mean = 0.0;
            for (int64_t b = 0; b < m; ++b) mean += eta[b * n + c];
            mean /= static_cast<double>(m);
            for (int64_t b = 0; b < m; ++b) eta[b * n + c] -= mean;
        }
        double s_val[2] = {0.0, 0.0};
        int nsign = antithetic ? 2 : 1;
        for (int sign = 0; sign < nsign; ++sign) {
            double flip = sign ? -sigma_t : sigma_t;
            double total = 0.0;
            for (int64_t b = 0; b < m; ++b) {
                double first = radius + flip * eta[b * n + 0];
                double q = first * first;
                for (int c = 1; c < n; ++c) {
                    double v = flip * eta[b * n + c];
                    q += v * v;
                }
                double u = std::sqrt(q);
                if (u > max_radius) {
                    std::ostringstream oss;
                    oss << "rg_step: sampled radius " << u << " exceeds grid limit " << wj.upper()
                        << " plus margin at grid point " << point_index << " (r = " << radius
                        << ")";
                    throw NumericError(oss.str());
                }
                total += wj(u) - 0.5 * c_q * q;
            }
            s_val[sign] = total;
        }
        double x;
        if (antithetic) {
            double hi = std::max(-s_val[0], -s_val[1]);
            x = hi + std::log(0.5 * (std::exp(-s_val[0] - hi) + std::exp(-s_val[1] - hi)));
        } else {
            x = -s_val[0];
        }
        lse.add(x);
    }

    // undo the tilt: quadratic in phi plus the subspace normalisation
    double det_term = 0.5 * n * (m - 1.0) * std::log(tilt_norm);
    PointResult pr;
    pr.w = lse.minus_log_mean() + 0.5 * c_q * m * radius * radius + det_term;
    pr.se = lse.se_of_log();
    pr.ess = lse.ess();
    return pr;
}

// Smallest radius PAST the potential minimum where W - min W reaches the
// threshold (scanning from zero would catch the inner wall of a double well).
double crossing_radius(const std::vector<double>& r, const std::vector<double>& w,
                       double threshold) {
    size_t imin =
        static_cast<size_t>(std::min_element(w.begin(), w.end()) - w.begin());
    double wmin = w[imin];
    for (size_t i = imin + 1; i < r.size(); ++i) {
        if (w[i] - wmin >= threshold) {
            double w0 = w[i - 1] - wmin, w1 = w[i] - wmin;
            double t = (threshold - w0) / std::max(w1 - w0, 1e-300);
            return r[i - 1] + t * (r[i] - r[i - 1]);
        }
    }
    return r.back();
}

}  // namespace

RadialPotential rg_step(const RadialPotential& w, double a, const LatticeSpec& spec,
                        const MCConfig& mc) {
    w.validate();
    if (mc.samples < 2) throw DomainError("rg_step: requires samples >= 2");
    int j = w.scale_j;
    int64_t m = spec.block_size();
    // fluctuation variance sigma^2 = gamma_{j+1}(a) L^{-dj} per component
    double sigma = std::sqrt(lattice::gamma_j(spec, j + 1, a) *
                             std::pow(spec.L, -spec.d * static_cast<double>(j)));

    Interpolant interp(w.r, w.w, mc.interp == MCConfig::Interp::Cubic, mc.extrapolation_margin);

    // Predict the output support before sampling: W_{j+1}(r) tracks
    // m (W_j(r) - min W_j), so radii past the predicted 42-crossing would be
    // discarded at the trim anyway (and suffer the worst weight degeneracy).
    std::vector<double> w_in_norm(w.w.size());
    double w_in_min = *std::min_element(w.w.begin(), w.w.end());
    for (size_t i = 0; i < w.w.size(); ++i) w_in_norm[i] = w.w[i] - w_in_min;
    double r_pred = crossing_radius(w.r, w_in_norm, 52.0 / static_cast<double>(m));
    // worst-case probe reach includes the sqrt(2) proposal widening of the tilt
    double sigma_reach = 6.0 * 1.42 * sigma * std::sqrt(static_cast<double>(w.n));
    // keep the sampled radii (r_eval plus fluctuations) inside the quartic
    // extrapolation margin of the input grid
    double r_cap = std::max(w.r.back() * (1.0 + mc.extrapolation_margin) - 1.05 * sigma_reach,
                            0.5 * w.r.back());
    double r_eval = std::min({w.r.back(), 1.25 * r_pred, r_cap});

    // The ESS guard is hard where the output feeds the zero-mode integrals
    // (predicted W below the e^{-W} ~ 1e-14 coverage level); the far log-tail
    // only shapes the quartic extrapolant and may keep a larger error bar.
    auto predicted_w_out = [&](double r) {
        return static_cast<double>(m) * (interp(r) - w_in_min);
    };

    std::vector<double> grid, w_raw, se_raw;
    auto evaluate_on = [&](const std::vector<double>& g, int pass) {
        size_t npts = g.size();
        w_raw.assign(npts, 0.0);
        se_raw.assign(npts, 0.0);
        auto work = [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                bool hard = predicted_w_out(g[i]) <= 36.0;
                // tilt parameter: local slope of W in the u^2/2 coordinate, so
                // the tilted What is stationary at the probe radius
                double r = g[i];
                double h = std::max(0.5 * sigma, 1e-3);
                double c_q;
                if (r > h) {
                    c_q = (interp(r + h) - interp(r - h)) / (2.0 * r * h);
                } else {
                    c_q = 2.0 * (interp(h) - interp(0.0)) / (h * h);
                }
                // widening the proposal (c_q < 0) is capped at sqrt(2) so the
                // probe reach stays within the extrapolation margin
                double c_q_floor = (0.5 - 1.0) / (sigma * sigma);
                c_q = std::max(c_q, c_q_floor);
                // low-ESS points are retried on fresh substreams with a growing
                // budget (up to 256x) before the ESS guard fires
                int64_t budget = mc.samples;
                PointResult pr;
                for (int attempt = 0;; ++attempt) {
                    uint64_t stream = derive_stream(
                        mc.seed, (static_cast<uint64_t>(j) + 1) * 64 + 8 * pass + attempt,
                        static_cast<uint64_t>(i));
                    pr = evaluate_point(g[i], interp, w.n, m, sigma, c_q, budget, stream,
                                        mc.antithetic, static_cast<int>(i));
                    if (pr.ess >= static_cast<double>(mc.samples) / 10.0 || attempt >= 4) break;
                    budget *= 4;
                }
                if (hard && pr.ess < static_cast<double>(mc.samples) / 10.0) {
                    std::ostringstream oss;
                    oss << "rg_step: effective sample size " << pr.ess
                        << " < samples/10 at grid point " << i << " (r = " << g[i]
                        << ", scale " << j << " -> " << j + 1 << ")";
                    throw NumericError(oss.str());
                }
                w_raw[i] = pr.w;
                se_raw[i] = pr.se;
            }
        };
        int threads = std::max(1, mc.threads);
        if (threads == 1 || npts < 8) {
            work(0, npts);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errs(static_cast<size_t>(threads));
            size_t chunk = (npts + threads - 1) / threads;
            for (int t = 0; t < threads; ++t) {
                size_t b = t * chunk, e = std::min(npts, b + chunk);
                if (b >= e) break;
                pool.emplace_back([&, b, e, t] {
                    try {
                        work(b, e);
                    } catch (...) {
                        errs[t] = std::current_exception();
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (auto& ep : errs)
                if (ep) std::rethrow_exception(ep);
        }
    };

    // Deep double wells are smeared upward by the fluctuations, so the
    // predicted range can under-cover; extend until the measured range spans
    // the 42 threshold or the input grid's trusted reach is exhausted.
    double r_limit = std::min(w.r.back(), r_cap);
    std::vector<double> w_norm;
    for (int pass = 0; pass < 4; ++pass) {
        grid = make_grid(r_eval, mc.grid_points);
        evaluate_on(grid, pass);
        w_norm.assign(grid.size(), 0.0);
        for (size_t i = 0; i < grid.size(); ++i) w_norm[i] = w_raw[i] - w_raw[0];
        double wmin = *std::min_element(w_norm.begin(), w_norm.end());
        double coverage = w_norm.back() - wmin;
        if (coverage >= 42.0 || r_eval >= r_limit * 0.999) break;
        r_eval = std::min(1.35 * r_eval, r_limit);
    }
    RadialPotential out;
    out.scale_j = j + 1;
    out.n = w.n;
    out.log_offset = static_cast<double>(m) * w.log_offset + w_raw[0];

    // Rescale the grid limit around the measured 42-crossing; probes past the
    // grid at the next scale ride on the quartic extrapolation.
    double r_cover = crossing_radius(grid, w_norm, 42.0);
    double r_new = std::min(grid.back(), 1.05 * r_cover);

    out.r = make_grid(r_new, mc.grid_points);
    out.w.resize(out.r.size());
    out.se.resize(out.r.size());
    Interpolant wi(grid, w_norm, true, mc.extrapolation_margin);
    Interpolant si(grid, se_raw, false, mc.extrapolation_margin);
    for (size_t i = 0; i < out.r.size(); ++i) {
        out.w[i] = wi(out.r[i]);
        out.se[i] = std::max(0.0, si(out.r[i]));
    }
    out.w[0] = 0.0;
    out.validate();
    return out;
}

ObservableSet zero_mode_observables(const RadialPotential& wN, BoundaryCondition bc, double a,
                                    const LatticeSpec& spec, const ObservableRequest& req,
                                    const QuadratureConfig& cfg) {
    wN.validate();
    if (!(a > -std::pow(spec.L, -2.0 * (spec.N - 1))))
        throw DomainError("zero_mode_observables: mass below -L^{-2(N-1)}");
    double kappa = (bc == BoundaryCondition::Periodic)
                       ? a
                       : a + spec.q() * std::pow(spec.L, -2.0 * spec.N);
    double omega = spec.omega();

    std::vector<int> orders = req.moments_p;
    orders.push_back(0);
    orders.push_back(1);
    orders.push_back(2);
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
    if (orders.front() < 0) throw DomainError("zero_mode_observables: moment order p < 0");

    auto integrals = [&](const std::vector<double>& wvals) {
        Interpolant wf(wN.r, wvals, true, 1.0);
        auto expo = [&](double r) { return wf(r) + 0.5 * kappa * omega * r * r; };
        double emin = kInf;
        for (double r : wN.r) emin = std::min(emin, expo(r));
        if (expo(wN.upper()) - emin < 25.0)
            throw NumericError(
                "zero_mode_observables: tail of W plus zero-mode mass is not resolved on the "
                "grid (non-integrable or too noisy)");
        std::map<int, double> mom;
        for (int p : orders) {
            double alpha = wN.n - 1 + 2 * p;
            auto f = [&](double r) {
                if (r <= 0.0) return alpha == 0.0 ? std::exp(-(expo(0.0) - emin)) : 0.0;
                return std::exp(alpha * std::log(r) - (expo(r) - emin));
            };
            mom[p] = quad::integrate_or_throw(f, 0.0, wN.upper(), cfg, "zero_mode_observables");
        }
        return mom;
    };

    std::map<int, double> central = integrals(wN.w);

    ObservableSet obs;
    obs.bc = bc;
    auto ratio = [](const std::map<int, double>& mm, int p) { return mm.at(p) / mm.at(0); };

    // bootstrap over the independent pointwise MC errors
    const int kBoot = 32;
    std::vector<std::map<int, double>> boots;
    bool stochastic = std::any_of(wN.se.begin(), wN.se.end(), [](double s) { return s > 0.0; });
    if (stochastic) {
        for (int b = 0; b < kBoot; ++b) {
            NormalSampler ns(derive_stream(0x626f6f74ULL, static_cast<uint64_t>(wN.scale_j),
                                           static_cast<uint64_t>(b)));
            std::vector<double> perturbed(wN.w.size());
            // log-tail error bars above O(1) carry no weight in the integrals;
            // capping them keeps replica tails integrable
            for (size_t i = 0; i < wN.w.size(); ++i)
                perturbed[i] = wN.w[i] + std::min(wN.se[i], 1.0) * ns();
            boots.push_back(integrals(perturbed));
        }
    }

    auto scalar_of = [&](const std::function<double(const std::map<int, double>&)>& fn) {
        Scalar s;
        s.value = fn(central);
        if (!boots.empty()) {
            double mean = 0.0, sq = 0.0;
            for (auto& b : boots) {
                double v = fn(b);
                mean += v;
                sq += v * v;
            }
            mean /= boots.size();
            s.se = std::sqrt(std::max(sq / boots.size() - mean * mean, 0.0));
        }
        return s;
    };

    for (int p : req.moments_p)
        obs.moments[p] = scalar_of([&](const std::map<int, double>& mm) { return ratio(mm, p); });
    obs.chi =
        scalar_of([&](const std::map<int, double>& mm) { return omega * ratio(mm, 1) / wN.n; });
    obs.kurtosis = scalar_of([&](const std::map<int, double>& mm) {
        double m2 = ratio(mm, 1);
        return ratio(mm, 2) / (m2 * m2);
    });

    // Laplace transform <e^{J.Phi}>: radial reduction with the angular kernel
    // cosh (n=1) or the Bessel-type sphere average (n>1).
    if (!req.laplace_j.empty()) {
        Interpolant wf(wN.r, wN.w, true, 1.0);
        auto expo = [&](double r) { return wf(r) + 0.5 * kappa * omega * r * r; };
        double emin = kInf;
        for (double r : wN.r) emin = std::min(emin, expo(r));
        int n = wN.n;
        double kernel_norm = 1.0;
        if (n > 1) {
            kernel_norm = quad::integrate_or_throw(
                [n](double th) { return std::pow(std::sin(th), n - 2); }, 0.0, M_PI, cfg,
                "laplace kernel norm");
        }
        for (double jmag : req.laplace_j) {
            auto kernel = [&](double r) -> double {
                double x = jmag * r;
                if (n == 1) return std::cosh(x);
                double v = quad::integrate_or_throw(
                    [x, n](double th) {
                        return std::exp(x * std::cos(th)) * std::pow(std::sin(th), n - 2);
                    },
                    0.0, M_PI, cfg, "laplace kernel");
                return v / kernel_norm;
            };
            auto num = [&](double r) {
                if (r <= 0.0) return 0.0;
                return std::exp((n - 1.0) * std::log(r) - (expo(r) - emin)) * kernel(r);
            };
            auto den = [&](double r) {
                if (r <= 0.0) return 0.0;
                return std::exp((n - 1.0) * std::log(r) - (expo(r) - emin));
            };
            double nv = quad::integrate_or_throw(num, 0.0, wN.upper(), cfg, "laplace numerator");
            double dv = quad::integrate_or_throw(den, 0.0, wN.upper(), cfg, "laplace denominator");
            obs.laplace[jmag] = Scalar{nv / dv, 0.0};
        }
    }
    return obs;
}

RadialPotential direct_mc_check(const LatticeSpec& spec, double g, double nu, double a,
                                const std::vector<double>& grid, int64_t samples, uint64_t seed,
                                int n) {
    if (spec.N > 2) throw DomainError("direct_mc_check: requires N <= 2 (full-lattice sampling)");
    if (spec.N < 1) throw DomainError("direct_mc_check: requires N >= 1");
    if (samples < 4) throw DomainError("direct_mc_check: requires samples >= 4");
    if (n < 1) throw DomainError("direct_mc_check: requires n >= 1");
    int64_t sites = spec.site_count();
    int64_t m = spec.block_size();

    std::vector<double> sig(spec.N + 1, 0.0);
    for (int j = 1; j <= spec.N; ++j)
        sig[j] = std::sqrt(lattice::gamma_j(spec, j, a) * std::pow(spec.L, -spec.d * (j - 1.0)));

    size_t ny = grid.size();
    std::vector<LseAccumulator> lse(ny);
    std::vector<double> pair_buf(ny, 0.0);

    NormalSampler ns(derive_stream(seed, 0xd1ec7ULL, 0));
    std::vector<double> phi(static_cast<size_t>(sites) * n, 0.0);
    std::vector<double> eta(static_cast<size_t>(m));
    std::vector<double> A(static_cast<size_t>(sites)), B(static_cast<size_t>(sites));

    int64_t pairs = std::max<int64_t>(samples / 2, 2);
    for (int64_t k = 0; k < pairs; ++k) {
        std::fill(phi.begin(), phi.end(), 0.0);
        for (int c = 0; c < n; ++c) {
            for (int j = 1; j <= spec.N; ++j) {
                int64_t bs = 1;
                for (int i = 0; i < j - 1; ++i) bs *= m;  // (j-1)-block size in sites
                int64_t jblocks = sites / (bs * m);
                for (int64_t blk = 0; blk < jblocks; ++blk) {
                    double mean = 0.0;
                    for (int64_t b = 0; b < m; ++b) {
                        eta[b] = ns();
                        mean += eta[b];
                    }
                    mean /= static_cast<double>(m);
                    for (int64_t b = 0; b < m; ++b) {
                        double v = sig[j] * (eta[b] - mean);
                        int64_t base = blk * m * bs + b * bs;
                        for (int64_t x = 0; x < bs; ++x) phi[(base + x) * n + c] += v;
                    }
                }
            }
        }
        // per-site |phi_x|^2 and first component; |phi_x + y e1|^2 = A + 2yB + y^2
        for (int64_t x = 0; x < sites; ++x) {
            double q = 0.0;
            for (int c = 0; c < n; ++c) {
                double v = phi[x * n + c];
                q += v * v;
            }
            A[x] = q;
            B[x] = phi[x * n + 0];
        }
        for (int sign = 0; sign < 2; ++sign) {
            double flip = sign ? -1.0 : 1.0;
            for (size_t yi = 0; yi < ny; ++yi) {
                double y = grid[yi];
                double V = 0.0;
                for (int64_t x = 0; x < sites; ++x) {
                    double q = A[x] + 2.0 * y * flip * B[x] + y * y;
                    V += 0.25 * g * q * q + 0.5 * nu * q;
                }
                if (sign == 0) {
                    pair_buf[yi] = -V;
                } else {
                    double hi = std::max(pair_buf[yi], -V);
                    double xp =
                        hi + std::log(0.5 * (std::exp(pair_buf[yi] - hi) + std::exp(-V - hi)));
                    lse[yi].add(xp);
                }
            }
        }
    }

    RadialPotential out;
    out.scale_j = spec.N;
    out.n = n;
    out.r = grid;
    out.w.resize(ny);
    out.se.resize(ny);
    out.log_offset = 0.0;
    for (size_t yi = 0; yi < ny; ++yi) {
        out.w[yi] = lse[yi].minus_log_mean();
        out.se[yi] = lse[yi].se_of_log();
    }
    return out;
}

double locate_effective_critical(const LatticeSpec& spec, BoundaryCondition bc, double g, int n,
                                 const CriticalScanConfig& scan, const MCConfig& mc) {
    if (!(g > 0.0)) throw DomainError("locate_effective_critical: requires g > 0");
    if (!(scan.nu_halfwidth > 0.0))
        throw DomainError("locate_effective_critical: requires a positive scan half-width");
    double amass = (bc == BoundaryCondition::Periodic)
                       ? 0.0
                       : -spec.q() * std::pow(spec.L, -2.0 * spec.N);
    double target = profiles::universal_ratio(n, 2, 0.0);

    // one fixed grid for the whole search keeps the kurtosis curve smooth in nu
    double sigma1 = std::sqrt(lattice::gamma_j(spec, 1, amass));
    std::vector<double> grid = default_grid(g, scan.nu_center, n, sigma1, mc.grid_points);

    auto kurt = [&](double nu) {
        RadialPotential w = init_potential(g, nu, n, grid);
        for (int j = 0; j < spec.N; ++j) w = rg_step(w, amass, spec, mc);
        return zero_mode_observables(w, bc, amass, spec, ObservableRequest{{1, 2}, {}}).kurtosis;
    };

    double lo = scan.nu_center - scan.nu_halfwidth;
    double hi = scan.nu_center + scan.nu_halfwidth;
    int expand = 0;
    while (kurt(lo).value > target) {
        lo -= 2.0 * scan.nu_halfwidth;
        if (++expand > 8)
            throw NumericError("locate_effective_critical: bracket scan failed on the low side");
    }
    expand = 0;
    while (kurt(hi).value < target) {
        hi += 2.0 * scan.nu_halfwidth;
        if (++expand > 8)
            throw NumericError("locate_effective_critical: bracket scan failed on the high side");
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < scan.max_bisection; ++it) {
        mid = 0.5 * (lo + hi);
        Scalar km = kurt(mid);
        if (std::abs(km.value - target) < scan.kurtosis_tol_sigmas * std::max(km.se, 1e-12))
            break;  // inside the Monte Carlo noise floor
        if (km.value < target)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

std::vector<RadialPotential> run_pipeline(const LatticeSpec& spec, double g, double nu, double a,
                                          int n, const MCConfig& mc) {
    double sigma1 = std::sqrt(lattice::gamma_j(spec, 1, a));
    RadialPotential w = init_potential(g, nu, n, default_grid(g, nu, n, sigma1, mc.grid_points));
    std::vector<RadialPotential> out;
    out.push_back(w);
    for (int j = 0; j < spec.N; ++j) {
        w = rg_step(w, a, spec, mc);
        out.push_back(w);
    }
    return out;
}

void save_checkpoint(const RadialPotential& pot, const CheckpointMeta& meta,
                     const std::string& path) {
    nlohmann::ordered_json header;
    header["schema_version"] = 1;
    header["kind"] = "hphi4-rg-checkpoint";
    header["j"] = pot.scale_j;
    header["n"] = pot.n;
    header["L"] = meta.spec.L;
    header["d"] = meta.spec.d;
    header["N"] = meta.spec.N;
    header["g"] = meta.g;
    header["nu"] = meta.nu;
    header["a"] = meta.a;
    header["log_offset"] = pot.log_offset;
    header["seed"] = meta.seed;
    header["samples"] = meta.samples;
    header["antithetic"] = meta.antithetic;
    header["lineage"] = meta.lineage;
    header["columns"] = nlohmann::ordered_json::array({"r", "W", "stderr"});
    std::ofstream f(path);
    if (!f) throw DomainError("save_checkpoint: cannot open " + path);
    f << header.dump() << "\n";
    f.precision(17);
    for (size_t i = 0; i < pot.r.size(); ++i)
        f << pot.r[i] << "," << pot.w[i] << "," << pot.se[i] << "\n";
    f.flush();
    if (!f) throw DomainError("save_checkpoint: write failed for " + path);
}

RadialPotential load_checkpoint(const std::string& path, CheckpointMeta* meta_out) {
    std::ifstream f(path);
    if (!f) throw DomainError("load_checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw DomainError("load_checkpoint: empty file");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
        throw DomainError(std::string("load_checkpoint: bad JSON header: ") + e.what());
    }
    RadialPotential pot;
    pot.scale_j = header.at("j").get<int>();
    pot.n = header.at("n").get<int>();
    pot.log_offset = header.at("log_offset").get<double>();
    if (meta_out) {
        meta_out->spec = LatticeSpec(header.at("L").get<int>(), header.at("d").get<int>(),
                                     header.at("N").get<int>());
        meta_out->g = header.at("g").get<double>();
        meta_out->nu = header.at("nu").get<double>();
        meta_out->a = header.at("a").get<double>();
        meta_out->seed = header.at("seed").get<uint64_t>();
        meta_out->samples = header.at("samples").get<int64_t>();
        meta_out->antithetic = header.at("antithetic").get<bool>();
        meta_out->lineage = header.at("lineage").get<std::vector<std::string>>();
    }
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        double r, w, se;
        char c1, c2;
        if (!(iss >> r >> c1 >> w >> c2 >> se))
            throw DomainError("load_checkpoint: malformed CSV row: " + line);
        pot.r.push_back(r);
        pot.w.push_back(w);
        pot.se.push_back(se);
    }
    pot.validate();
    return pot;
}

}  // namespace hphi4::exactrg
