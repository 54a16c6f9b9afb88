#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "robinrd/errors.hpp"

namespace robinrd {

struct QuadResult {
    double value = 0.0;
    double error = 0.0; // estimate of the absolute error
    bool converged = true;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
inline constexpr double gk15_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk15_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk15_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
inline void gk15_panel(F&& fn, double a, double b, double& value, double& error) {
    const double h = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double fk[15];
    for (int i = 0; i < 7; ++i) {
        fk[i] = fn(mid - h * gk15_x[i]);
        fk[14 - i] = fn(mid + h * gk15_x[i]);
    }
    fk[7] = fn(mid);
    double kron = 0.0;
    for (int i = 0; i < 7; ++i) kron += gk15_wk[i] * (fk[i] + fk[14 - i]);
    kron += gk15_wk[7] * fk[7];
    double gauss = gk15_wg[3] * fk[7];
    for (int i = 0; i < 3; ++i) gauss += gk15_wg[i] * (fk[2 * i + 1] + fk[13 - 2 * i]);
    value = kron * h;
    error = std::fabs((kron - gauss) * h);
    // sharpen the raw difference the usual way
    error = std::pow(200.0 * error, 1.5);
    if (error > std::fabs(value) + 1.0) error = std::fabs((kron - gauss) * h);
}

} // namespace detail

// Adaptive Gauss-Kronrod integration of fn over [a, b]. Converged when the
// error estimate drops below max(abs_tol, rel_tol * |value|).
template <typename F>
QuadResult integrate(F&& fn, double a, double b, double abs_tol = 1e-10,
                     double rel_tol = 0.0, std::size_t max_panels = 4000) {
    QuadResult out;
    if (a == b) return out;
    struct Seg {
        double a, b, value, error;
        bool refinable;
    };
    std::vector<Seg> segs;
    {
        double v, e;
        detail::gk15_panel(fn, a, b, v, e);
        segs.push_back({a, b, v, e, true});
    }
    auto totals = [&](double& value, double& error) {
        value = error = 0.0;
        for (auto& sg : segs) {
            value += sg.value;
            error += sg.error;
        }
    };
    double value, error;
    totals(value, error);
    while (error > std::max(abs_tol, rel_tol * std::fabs(value)) &&
           segs.size() < max_panels) {
        // split the worst refinable segment
        std::size_t worst = segs.size();
        for (std::size_t i = 0; i < segs.size(); ++i)
            if (segs[i].refinable && (worst == segs.size() || segs[i].error > segs[worst].error))
                worst = i;
        if (worst == segs.size()) break; // everything at rounding width already
        Seg s = segs[worst];
        double mid = 0.5 * (s.a + s.b);
        if (mid <= s.a || mid >= s.b) {
            segs[worst].refinable = false;
            continue;
        }
        Seg l{s.a, mid, 0, 0, true}, r{mid, s.b, 0, 0, true};
        detail::gk15_panel(fn, l.a, l.b, l.value, l.error);
        detail::gk15_panel(fn, r.a, r.b, r.value, r.error);
        segs[worst] = l;
        segs.push_back(r);
        totals(value, error);
    }
    out.value = value;
    out.error = error;
    out.converged = error <= std::max(abs_tol, rel_tol * std::fabs(value));
    return out;
}

template <typename F>
double integrate_or_throw(F&& fn, double a, double b, double abs_tol = 1e-10,
                          double rel_tol = 0.0, std::size_t max_panels = 4000) {
    QuadResult r = integrate(fn, a, b, abs_tol, rel_tol, max_panels);
    if (!r.converged) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", r.error);
        throw numerical_error(std::string("quadrature did not converge, achieved error ") +
                              buf);
    }
    return r.value;
}

} // namespace robinrd
