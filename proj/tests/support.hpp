#pragma once

// Test-side oracles, deliberately independent of the library's quadrature and
// root-finding paths.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "robinrd/reaction.hpp"
#include "robinrd/steady.hpp"

namespace oracle {

// adaptive Simpson, plain recursion
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// RK4 integration of the steady equation p'' = -f(p) from x0 with given state.
struct ShootResult {
    double p = 0.0;
    double dp = 0.0;
};

inline ShootResult shoot(const robinrd::ReactionModel& m, double p0, double dp0,
                         double x_len, int steps) {
    const double h = x_len / steps;
    double p = p0, v = dp0;
    auto acc = [&](double q) { return -m.f(std::clamp(q, 0.0, 1.0)); };
    for (int i = 0; i < steps; ++i) {
        const double k1p = v, k1v = acc(p);
        const double k2p = v + 0.5 * h * k1v, k2v = acc(p + 0.5 * h * k1p);
        const double k3p = v + 0.5 * h * k2v, k3v = acc(p + 0.5 * h * k2p);
        const double k4p = v + h * k3v, k4v = acc(p + h * k3p);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return {p, v};
}

// half-length measured by shooting from the centre state (p0, 0) until the
// right Robin condition is met, by bisection on the travel distance
inline double measure_half_length(const robinrd::ReactionModel& m,
                                  const robinrd::BoundaryEnv& env, double p_center,
                                  double x_max) {
    auto exit_gap = [&](double x) {
        const ShootResult s = shoot(m, p_center, 0.0, x, std::max(200, int(x * 4000)));
        return s.dp + env.D * (s.p - env.p_ext);
    };
    return bisect(exit_gap, 1e-9, x_max, 100);
}

inline std::mt19937& rng() {
    static std::mt19937 gen(20240817u);
    return gen;
}

} // namespace oracle
