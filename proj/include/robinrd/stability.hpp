#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "robinrd/steady.hpp"
#include "robinrd/tridiag.hpp"

namespace robinrd {

enum class Verdict { StableByTheorem, UnstableByTheorem, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::StableByTheorem: return "stable";
        case Verdict::UnstableByTheorem: return "unstable";
        default: return "inconclusive";
    }
}

struct StabilityVerdict {
    double lambda1 = 0.0;
    double fprime_min = 0.0;
    double fprime_max = 0.0;
    Verdict verdict = Verdict::Inconclusive;
    std::optional<double> mu1; // smallest linearized eigenvalue, when computed
};

// Smallest positive eigenvalue of the Robin Laplacian on (-L, L): the first
// root of sqrt(l)*tan(L*sqrt(l)) = D, solved in s = L*sqrt(l) on (0, pi/2).
inline double principal_eigenvalue(const BoundaryEnv& env) {
    env.validate();
    const double target = env.L * env.D;
    auto g = [&](double s) { return s * std::tan(s) - target; };
    auto dg = [&](double s) {
        const double c = std::cos(s);
        return std::tan(s) + s / (c * c);
    };
    const double hi = std::numbers::pi / 2.0 * (1.0 - 1e-14);
    double s = bisect_newton(g, dg, 1e-300, hi, 1e-15);
    // one extra Newton pass tightens the relative residual near machine level
    for (int it = 0; it < 3; ++it) {
        const double step = g(s) / dg(s);
        const double sn = s - step;
        if (!(sn > 0.0 && sn < std::numbers::pi / 2.0)) break;
        if (std::fabs(g(sn)) >= std::fabs(g(s))) break;
        s = sn;
    }
    return (s / env.L) * (s / env.L);
}

// Exact range of f' over the closed interval [lo, hi] of profile values:
// endpoint values plus interior critical points of f' (roots of f'').
inline std::pair<double, double> fprime_range(const ReactionModel& model, double lo,
                                              double hi) {
    double mn = std::min(model.fprime(lo), model.fprime(hi));
    double mx = std::max(model.fprime(lo), model.fprime(hi));
    const int n = 256;
    double prev_s = model.fsecond(lo);
    double prev_p = lo;
    for (int i = 1; i <= n; ++i) {
        const double p = lo + (hi - lo) * double(i) / n;
        const double s = model.fsecond(p);
        if ((prev_s > 0.0) != (s > 0.0)) {
            const double root = bisect([&](double q) { return model.fsecond(q); }, prev_p,
                                       p, 1e-13);
            const double v = model.fprime(root);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        prev_s = s;
        prev_p = p;
    }
    return {mn, mx};
}

// Smallest eigenvalue of -phi'' - w(x) phi with homogeneous Robin closure,
// where w holds the linearization weights at n uniform nodes on [-L, L].
// Ghost-point second-order boundary rows; shifted inverse power iteration.
inline double linearized_ground_eigenvalue_from_weights(const BoundaryEnv& env,
                                                        const std::vector<double>& w) {
    const std::size_t n = w.size();
    if (n < 101 || n % 2 == 0)
        throw invalid_input("linearized eigenvalue: need n >= 101 and odd");
    const double dx = 2.0 * env.L / double(n - 1);
    std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0);
    const double r = 1.0 / (dx * dx);
    for (std::size_t i = 0; i < n; ++i) diag[i] = 2.0 * r - w[i];
    for (std::size_t i = 1; i < n; ++i) sub[i] = -r;
    for (std::size_t i = 0; i + 1 < n; ++i) sup[i] = -r;
    diag[0] += 2.0 * env.D / dx;
    sup[0] = -2.0 * r;
    diag[n - 1] += 2.0 * env.D / dx;
    sub[n - 1] = -2.0 * r;

    double wmax = 0.0;
    for (double v : w) wmax = std::max(wmax, std::fabs(v));
    const double shift = -2.0 * std::max(wmax, 1e-8);

    std::vector<double> x(n, 1.0), dshift(n);
    for (std::size_t i = 0; i < n; ++i) dshift[i] = diag[i] - shift;
    double mu = 0.0, mu_prev = 1e300;
    for (int it = 0; it < 500; ++it) {
        std::vector<double> y = solve_tridiagonal(sub, dshift, sup, x);
        double norm = 0.0;
        for (double v : y) norm = std::max(norm, std::fabs(v));
        for (double& v : y) v /= norm;
        // Rayleigh quotient of the original operator
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double Ty = diag[i] * y[i];
            if (i > 0) Ty += sub[i] * y[i - 1];
            if (i + 1 < n) Ty += sup[i] * y[i + 1];
            num += Ty * y[i];
            den += y[i] * y[i];
        }
        mu = num / den;
        x = std::move(y);
        if (std::fabs(mu - mu_prev) < 1e-12 * std::max(1.0, std::fabs(mu))) return mu;
        mu_prev = mu;
    }
    throw numerical_error("linearized eigenvalue: inverse iteration did not converge");
}

inline double linearized_ground_eigenvalue(const ReactionModel& model,
                                           const BoundaryEnv& env,
                                           const SteadyProfile& prof, std::size_t n) {
    if (n < 101 || n % 2 == 0)
        throw invalid_input("linearized eigenvalue: need n >= 101 and odd");
    // resample the profile onto the eigen grid
    std::vector<double> w(n);
    const std::size_t m = prof.x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = -env.L + 2.0 * env.L * double(i) / double(n - 1);
        const double t = (x + env.L) / (2.0 * env.L) * double(m - 1);
        const std::size_t k = std::min(m - 2, std::size_t(std::max(0.0, std::floor(t))));
        const double frac = t - double(k);
        const double p = std::clamp(prof.p[k] * (1.0 - frac) + prof.p[k + 1] * frac, 0.0,
                                    1.0);
        w[i] = model.fprime(p);
    }
    return linearized_ground_eigenvalue_from_weights(env, w);
}

// Applies the sufficient stability conditions: the whole range of f' over the
// profile's values below lambda1 means stable, entirely above means unstable.
inline StabilityVerdict classify_stability(const ReactionModel& model,
                                           const BoundaryEnv& env,
                                           const SteadyProfile& prof,
                                           bool with_oracle = false) {
    const ResidualReport res = profile_residual(model, env, prof);
    if (!(res.interior_norm < 1e-3))
        throw invalid_input("classify_stability: profile fails the steady-state "
                            "residual check");
    StabilityVerdict out;
    out.lambda1 = principal_eigenvalue(env);
    const auto [plo, phi] = std::minmax_element(prof.p.begin(), prof.p.end());
    const auto range = fprime_range(model, *plo, *phi);
    out.fprime_min = range.first;
    out.fprime_max = range.second;
    if (out.fprime_max < out.lambda1)
        out.verdict = Verdict::StableByTheorem;
    else if (out.fprime_min > out.lambda1)
        out.verdict = Verdict::UnstableByTheorem;
    else
        out.verdict = Verdict::Inconclusive;
    if (with_oracle)
        out.mu1 = linearized_ground_eigenvalue(model, env, prof, 1001);
    return out;
}

} // namespace robinrd
