#pragma once

#include <cmath>
#include <limits>

#include "robinrd/errors.hpp"

namespace robinrd {

// Root of fn on [lo, hi] by bisection down to a bracket of width xtol.
// Endpoint values of opposite sign required; an endpoint root is returned as is.
template <typename F>
double bisect(F&& fn, double lo, double hi, double xtol = 1e-12) {
    double flo = fn(lo);
    if (flo == 0.0) return lo;
    double fhi = fn(hi);
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw numerical_error("bisect: endpoints do not bracket a sign change");
    while (hi - lo > xtol) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // bracket at rounding limit
        double fm = fn(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Bisection to xtol followed by one Newton polish, rejected if it leaves the
// final bracket or fails to reduce |fn|.
template <typename F, typename DF>
double bisect_newton(F&& fn, DF&& dfn, double lo, double hi, double xtol = 1e-12) {
    double flo = fn(lo);
    if (flo == 0.0) return lo;
    double fhi = fn(hi);
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw numerical_error("bisect_newton: endpoints do not bracket a sign change");
    while (hi - lo > xtol) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double fm = fn(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double x = 0.5 * (lo + hi);
    double fx = fn(x);
    double d = dfn(x);
    if (d != 0.0 && std::isfinite(d)) {
        double xn = x - fx / d;
        if (xn > lo && xn < hi && std::fabs(fn(xn)) <= std::fabs(fx)) return xn;
    }
    return x;
}

// Golden-section minimizer on [lo, hi]; fn assumed unimodal there.
// Returns the abscissa of the minimum to within xtol.
template <typename F>
double golden_min(F&& fn, double lo, double hi, double xtol = 1e-10) {
    constexpr double inv_phi = 0.6180339887498948482;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = fn(x1);
    double f2 = fn(x2);
    while (hi - lo > xtol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = fn(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = fn(x2);
        }
        if (x1 >= x2) break; // interval exhausted at rounding limit
    }
    return 0.5 * (lo + hi);
}

} // namespace robinrd
