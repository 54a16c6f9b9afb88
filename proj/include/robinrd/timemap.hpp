#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "robinrd/quadrature.hpp"
#include "robinrd/reaction.hpp"
#include "robinrd/roots.hpp"

namespace robinrd {

// Domain half-length, boundary migration rate, exterior proportion.
struct BoundaryEnv {
    double L = 1.0;
    double D = 1.0;
    double p_ext = 0.5;

    void validate() const {
        if (!(L > 0.0)) throw invalid_input("boundary env: require L > 0");
        if (!(D > 0.0)) throw invalid_input("boundary env: require D > 0");
        if (!(p_ext > 0.0 && p_ext < 1.0))
            throw invalid_input("boundary env: require 0 < p_ext < 1");
    }
};

// SD: symmetric profile decreasing on (0, L); SI: increasing on (0, L).
enum class Branch { SD, SI };

inline const char* to_string(Branch b) { return b == Branch::SD ? "SD" : "SI"; }

// A threshold is zero, a finite positive length, or +infinity.
class ExtendedReal {
  public:
    static ExtendedReal zero() { return ExtendedReal(Tag::zero, 0.0); }
    static ExtendedReal finite(double v) { return ExtendedReal(Tag::finite, v); }
    static ExtendedReal infinite() { return ExtendedReal(Tag::infinite, 0.0); }

    bool is_zero() const { return tag_ == Tag::zero; }
    bool is_finite() const { return tag_ == Tag::finite; }
    bool is_infinite() const { return tag_ == Tag::infinite; }

    // Numeric view: 0, the value, or +inf.
    double as_double() const {
        if (tag_ == Tag::zero) return 0.0;
        if (tag_ == Tag::infinite) return std::numeric_limits<double>::infinity();
        return value_;
    }

    double value() const {
        if (tag_ != Tag::finite) throw invalid_input("extended real has no finite value");
        return value_;
    }

  private:
    enum class Tag { zero, finite, infinite };
    ExtendedReal(Tag t, double v) : tag_(t), value_(v) {}
    Tag tag_;
    double value_;
};

enum class FBranch { upper, lower };

struct TimeMapBranch {
    Branch branch = Branch::SD;
    bool empty = false;
    double domain_lo = 0.0; // usable (trimmed) interval of boundary values
    double domain_hi = 0.0;
    bool singular_lo = false; // the map diverges approaching this end
    bool singular_hi = false;
    double endpoint_lo = 0.0; // analytic interval ends before trimming
    double endpoint_hi = 0.0;
};

struct ThresholdReport {
    ExtendedReal M_d = ExtendedReal::zero();
    ExtendedReal M_i = ExtendedReal::zero();
    ExtendedReal M_star = ExtendedReal::zero();
    std::optional<double> D_star;    // only meaningful for p_ext > beta
    std::optional<double> q_at_M_d;  // minimizing boundary value, when finite
    std::optional<double> q_at_M_i;
    std::optional<double> c_at_M_star; // minimizing orbit energy, when finite
};

// G(q) = F(q) + D^2 (q - p_ext)^2 / 2, the boundary-compatible orbit energy.
inline double potential_G(const ReactionModel& model, const BoundaryEnv& env, double q) {
    if (!(q >= 0.0 && q <= 1.0))
        throw invalid_input("potential_G: q outside [0, 1]");
    const double d = q - env.p_ext;
    return model.antiderivative(q) + 0.5 * env.D * env.D * d * d;
}

// The unique interior minimizer of G; it sits between p_ext and theta.
inline double minimizer_qbar(const ReactionModel& model, const BoundaryEnv& env) {
    const double th = model.theta();
    if (env.p_ext == th) return th;
    const double D2 = env.D * env.D;
    auto dG = [&](double q) { return model.f(q) + D2 * (q - env.p_ext); };
    auto ddG = [&](double q) { return model.fprime(q) + D2; };
    const double lo = std::min(env.p_ext, th);
    const double hi = std::max(env.p_ext, th);
    return bisect_newton(dG, ddG, lo, hi, 1e-13);
}

// Inverse of F restricted to (theta, 1) [upper] or (0, theta) [lower].
inline double invert_F(const ReactionModel& model, FBranch branch, double y) {
    const double th = model.theta();
    const double F_th = model.F_theta();
    const double top = branch == FBranch::upper ? model.F_one() : 0.0;
    const double slack = 1e-12 * std::max(1.0, std::fabs(F_th));
    if (y < F_th - slack || y > top + slack)
        throw invalid_input("invert_F: value outside branch range");
    y = std::clamp(y, F_th, top);
    const double lo = branch == FBranch::upper ? th : 0.0;
    const double hi = branch == FBranch::upper ? 1.0 : th;
    double x = bisect([&](double s) { return model.antiderivative(s) - y; }, lo, hi, 1e-13);
    // polish toward machine-level potential residual; turning-point integrals
    // later rely on F(x) matching y closely
    for (int it = 0; it < 2; ++it) {
        const double fx = model.f(x);
        if (fx == 0.0) break;
        double step = (model.antiderivative(x) - y) / fx;
        double xn = std::clamp(x - step, lo, hi);
        if (std::fabs(model.antiderivative(xn) - y) <= std::fabs(model.antiderivative(x) - y))
            x = xn;
        else
            break;
    }
    return x;
}

namespace detail {

// Travel time int_a^b ds / sqrt(2c - 2F(s)) along the orbit of energy c.
// Square-root vanishing of the radicand at either endpoint is removed by the
// substitution s = endpoint -/+ width*u^2; close to each endpoint the radicand
// is evaluated through a local Simpson form of 2*int f to avoid cancellation.
// turn_a / turn_b declare an endpoint to be an exact turning value: its energy
// residual is dropped so the integral is parametrized by the endpoint itself,
// which keeps the result stable against the endpoint's root-finding error.
inline double orbit_time(const ReactionModel& model, double c, double a, double b,
                         bool turn_a, bool turn_b, double tol = 1e-10) {
    if (!(b > a)) return 0.0;
    const double Wa = turn_a ? 0.0 : std::max(0.0, 2.0 * (c - model.antiderivative(a)));
    const double Wb = turn_b ? 0.0 : std::max(0.0, 2.0 * (c - model.antiderivative(b)));
    const double th = model.theta();
    const double m = (a < th && th < b) ? th : 0.5 * (a + b);

    auto W_near = [&](double s, double e, double We) {
        // 2(c - F(s)) = 2(c - F(e)) + 2*int_s^e f, Simpson on the short leg
        const double h = e - s;
        const double fs = model.f(s), fm = model.f(s + 0.5 * h), fe = model.f(e);
        return We + h / 3.0 * (fs + 4.0 * fm + fe);
    };
    auto W_plain = [&](double s) { return 2.0 * (c - model.antiderivative(s)); };

    // on very short intervals the direct form 2(c - F) cancels entirely, so
    // the Simpson form takes over across the whole of them
    const double h_loc = (b - a) < 1e-4 ? (b - a) : 1e-3 * (b - a);
    auto radicand = [&](double s) {
        if (s >= b - h_loc) return std::max(W_near(s, b, Wb), 0.0);
        if (s <= a + h_loc) {
            const double h = s - a;
            const double fa = model.f(a), fm = model.f(a + 0.5 * h), fs = model.f(s);
            return std::max(Wa - h / 3.0 * (fa + 4.0 * fm + fs), 0.0);
        }
        return std::max(W_plain(s), 0.0);
    };

    const double wl = m - a, wr = b - m;
    auto left = [&](double u) {
        const double s = a + wl * u * u;
        const double W = radicand(s);
        return W > 0.0 ? 2.0 * wl * u / std::sqrt(W) : 0.0;
    };
    auto right = [&](double u) {
        const double s = b - wr * u * u;
        const double W = radicand(s);
        return W > 0.0 ? 2.0 * wr * u / std::sqrt(W) : 0.0;
    };
    QuadResult rl = integrate(left, 0.0, 1.0, 0.5 * tol, 1e-10, 6000);
    QuadResult rr = integrate(right, 0.0, 1.0, 0.5 * tol, 1e-10, 6000);
    if (!rl.converged || !rr.converged) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", rl.error + rr.error);
        throw numerical_error(std::string("orbit time quadrature did not converge, "
                                          "achieved error ") + buf);
    }
    return rl.value + rr.value;
}

} // namespace detail

inline TimeMapBranch time_map_domain(const ReactionModel& model, const BoundaryEnv& env,
                                     Branch branch, double L_max = 1e3);

// The half-length of the symmetric orbit exiting at boundary value q.
inline double time_map(const ReactionModel& model, const BoundaryEnv& env, Branch branch,
                       double q, double tol = 1e-10) {
    if (branch == Branch::SD && q < env.p_ext)
        throw invalid_input("time_map: boundary value below p_ext on the "
                            "decreasing branch");
    if (branch == Branch::SI && q > env.p_ext)
        throw invalid_input("time_map: boundary value above p_ext on the "
                            "increasing branch");
    const double c = potential_G(model, env, q);
    const bool at_ext = q == env.p_ext;
    if (branch == Branch::SD) {
        const double gamma = invert_F(model, FBranch::upper, c);
        if (gamma <= q + 1e-12) return 0.0;
        return detail::orbit_time(model, c, q, gamma, at_ext, true, tol);
    }
    const double low = invert_F(model, FBranch::lower, c);
    if (low >= q - 1e-12) return 0.0;
    return detail::orbit_time(model, c, low, q, true, at_ext, tol);
}

inline TimeMapBranch time_map_domain(const ReactionModel& model, const BoundaryEnv& env,
                                     Branch branch, double L_max) {
    env.validate();
    const double th = model.theta();
    TimeMapBranch out;
    out.branch = branch;

    auto trim_singular = [&](double fixed, double sing, Branch br) {
        // pull the divergent end inward by the smallest offset (on a geometric
        // ladder) at which the map already exceeds L_max
        const double width = std::fabs(sing - fixed);
        const double dir = sing > fixed ? 1.0 : -1.0;
        double good = sing - dir * width * 0.25;
        for (int k = 2; k <= 46; k += 4) {
            const double q = sing - dir * width * std::pow(0.5, k);
            double v;
            try {
                v = time_map(model, env, br, q);
            } catch (const numerical_error&) {
                return good; // default-accuracy evaluation breaks down closer in
            }
            good = q;
            if (v > L_max) break;
        }
        return good;
    };

    if (branch == Branch::SD) {
        const double qb = minimizer_qbar(model, env);
        const double F1 = model.F_one();
        const double lo_bracket = std::max(env.p_ext, qb);
        const double p_star =
            bisect([&](double q) { return potential_G(model, env, q) - F1; }, lo_bracket,
                   1.0, 1e-14);
        out.endpoint_lo = env.p_ext;
        out.endpoint_hi = p_star;
        out.singular_hi = true;
        out.domain_lo = env.p_ext;
        out.domain_hi = trim_singular(env.p_ext, p_star, Branch::SD);
        return out;
    }

    // SI branch
    const double qb = minimizer_qbar(model, env);
    const double minG = potential_G(model, env, qb);
    if (minG >= 0.0) {
        out.empty = true;
        return out;
    }
    const double q_star =
        bisect([&](double q) { return potential_G(model, env, q); }, 0.0, qb, 1e-14);
    out.endpoint_lo = q_star;
    out.singular_lo = true;
    if (env.p_ext > th && model.antiderivative(env.p_ext) > 0.0) {
        // exterior proportion above beta: the domain also ends before p_ext
        const double q_hi =
            bisect([&](double q) { return potential_G(model, env, q); }, qb, env.p_ext,
                   1e-14);
        out.endpoint_hi = q_hi;
        out.singular_hi = true;
        out.domain_hi = trim_singular(q_star, q_hi, Branch::SI);
    } else {
        out.endpoint_hi = env.p_ext;
        out.domain_hi = env.p_ext;
    }
    out.domain_lo = trim_singular(out.endpoint_hi, q_star, Branch::SI);
    return out;
}

// Critical migration rate above which no symmetric-increasing state survives;
// defined only for p_ext above beta.
inline std::optional<double> critical_diffusion_Dstar(const ReactionModel& model,
                                                      double p_ext) {
    if (!(p_ext > 0.0 && p_ext < 1.0))
        throw invalid_input("critical_diffusion_Dstar: require 0 < p_ext < 1");
    const Landmarks lm = compute_landmarks(model);
    if (p_ext <= lm.beta) return std::nullopt;
    auto H = [&](double q) {
        return model.antiderivative(q) + 0.5 * model.f(q) * (p_ext - q);
    };
    const double th = model.theta();
    const double pbar = bisect(H, th, p_ext, 1e-14);
    return std::sqrt(model.f(pbar) / (p_ext - pbar));
}

namespace detail {

struct GridMin {
    double arg = 0.0;
    double value = 0.0;
};

// 512-point scan followed by golden-section refinement of the bracketing cell.
template <typename F>
GridMin scan_min(F&& fn, double lo, double hi, int n = 512, double xtol = 1e-10) {
    std::vector<double> q(n), v(n);
    int best = -1;
    for (int i = 0; i < n; ++i) {
        q[i] = i == n - 1 ? hi : lo + (hi - lo) * double(i) / double(n - 1);
        v[i] = fn(q[i]);
        if (best < 0 || v[i] < v[best]) best = i;
    }
    const double a = q[std::max(0, best - 1)];
    const double b = q[std::min(n - 1, best + 1)];
    GridMin out;
    out.arg = golden_min(fn, a, b, xtol);
    out.value = fn(out.arg);
    if (v[best] < out.value) {
        out.arg = q[best];
        out.value = v[best];
    }
    return out;
}

// Both solutions of G(q) = c, on either side of the minimizer qbar.
struct GPreimages {
    std::optional<double> below; // in [0, qbar]
    std::optional<double> above; // in [qbar, 1]
};

inline GPreimages g_preimages(const ReactionModel& model, const BoundaryEnv& env,
                              double qbar_v, double c) {
    GPreimages out;
    auto g = [&](double q) { return potential_G(model, env, q) - c; };
    const double g_qbar = g(qbar_v);
    if (g_qbar > 0.0) return out; // level below the minimum of G
    if (g(0.0) >= 0.0) out.below = bisect(g, 0.0, qbar_v, 1e-14);
    if (g(1.0) >= 0.0) out.above = bisect(g, qbar_v, 1.0, 1e-14);
    return out;
}

} // namespace detail

// Least half-length admitting a symmetric solution on the given branch, with
// the minimizing boundary value through *q_min_out when finite.
inline ExtendedReal monotone_threshold(const ReactionModel& model, const BoundaryEnv& env,
                                       Branch branch, double* q_min_out = nullptr) {
    env.validate();
    const double th = model.theta();
    if (branch == Branch::SD && env.p_ext >= th) {
        if (q_min_out) *q_min_out = env.p_ext;
        return ExtendedReal::zero();
    }
    if (branch == Branch::SI && env.p_ext <= th) {
        if (q_min_out) *q_min_out = env.p_ext;
        return ExtendedReal::zero();
    }
    const TimeMapBranch dom = time_map_domain(model, env, branch);
    if (dom.empty) return ExtendedReal::infinite();
    auto fn = [&](double q) {
        try {
            return time_map(model, env, branch, q);
        } catch (const numerical_error&) {
            return std::numeric_limits<double>::infinity(); // divergent edge cell
        }
    };
    const detail::GridMin m = detail::scan_min(fn, dom.domain_lo, dom.domain_hi);
    if (q_min_out) *q_min_out = m.arg;
    return ExtendedReal::finite(m.value);
}

namespace detail {

// Half-length of the one-interior-max plus one-interior-min orbit at energy c,
// or nothing if that energy admits no such orbit for this environment.
inline std::optional<double> non_sm_halflength_T3(const ReactionModel& model,
                                                  const BoundaryEnv& env, double qbar_v,
                                                  double c, double tol = 1e-10) {
    if (!(c < 0.0) || c < model.F_theta()) return std::nullopt;
    const GPreimages pre = g_preimages(model, env, qbar_v, c);
    if (!pre.below || !pre.above) return std::nullopt;
    const double q_exit = *pre.below;  // boundary value of the increasing end
    const double q_enter = *pre.above; // boundary value of the decreasing end
    if (q_exit > env.p_ext + 1e-12 || q_enter < env.p_ext - 1e-12)
        return std::nullopt;
    const double p_min = invert_F(model, FBranch::lower, c);
    const double p_max = invert_F(model, FBranch::upper, c);
    const double mid = orbit_time(model, c, p_min, p_max, true, true, tol);
    const double leg_d = time_map(model, env, Branch::SD, q_enter, tol);
    const double leg_i = time_map(model, env, Branch::SI, q_exit, tol);
    return 0.5 * (leg_d + mid + leg_i);
}

// Half-length of the single-interior-minimum asymmetric orbit at energy c
// (both boundary values below p_ext), or nothing if not admissible.
inline std::optional<double> non_sm_halflength_T4(const ReactionModel& model,
                                                  const BoundaryEnv& env, double qbar_v,
                                                  double c, double tol = 1e-10) {
    if (!(c < 0.0) || c < model.F_theta()) return std::nullopt;
    const GPreimages pre = g_preimages(model, env, qbar_v, c);
    if (!pre.below || !pre.above) return std::nullopt;
    if (*pre.above > env.p_ext) return std::nullopt;
    const double leg1 = time_map(model, env, Branch::SI, *pre.below, tol);
    const double leg2 = time_map(model, env, Branch::SI, *pre.above, tol);
    return 0.5 * (leg1 + leg2);
}

inline double mstar_band_lo(const ReactionModel& model, const BoundaryEnv& env,
                            double qbar_v, bool above_beta) {
    const double eps_c = 1e-12 * std::fabs(model.F_theta());
    double lo = std::max(model.F_theta(), potential_G(model, env, qbar_v));
    // the one-max-one-min family also needs both boundary crossings to
    // straddle p_ext, which caps the energy from below at G(p_ext)
    if (!above_beta) lo = std::max(lo, potential_G(model, env, env.p_ext));
    return lo + eps_c;
}

inline double mstar_band_hi(const ReactionModel& model) {
    const double eps_c = 1e-12 * std::fabs(model.F_theta());
    return std::min(0.0, model.F_one()) - eps_c;
}

} // namespace detail

// Least half-length admitting a non-symmetric-monotone solution within the
// searched orbit families, minimizing over the orbit energy level.
inline ExtendedReal nonmonotone_threshold_Mstar(const ReactionModel& model,
                                                const BoundaryEnv& env,
                                                double* c_min_out = nullptr) {
    env.validate();
    const Landmarks lm = compute_landmarks(model);
    const double qbar_v = minimizer_qbar(model, env);
    const bool above_beta = env.p_ext > lm.beta;
    if (above_beta) {
        const auto Dstar = critical_diffusion_Dstar(model, env.p_ext);
        if (Dstar && env.D >= *Dstar) return ExtendedReal::infinite();
    }
    const double band_lo = detail::mstar_band_lo(model, env, qbar_v, above_beta);
    const double band_hi = detail::mstar_band_hi(model);
    if (!(band_lo < band_hi)) return ExtendedReal::infinite();

    auto family = [&](double c) -> std::optional<double> {
        return above_beta ? detail::non_sm_halflength_T4(model, env, qbar_v, c)
                          : detail::non_sm_halflength_T3(model, env, qbar_v, c);
    };
    auto penalized = [&](double c) {
        try {
            auto v = family(c);
            return v ? *v : std::numeric_limits<double>::infinity();
        } catch (const numerical_error&) {
            return std::numeric_limits<double>::infinity(); // divergent edge level
        }
    };

    const int n = 512;
    int best = -1;
    std::vector<double> cs(n), vs(n);
    for (int i = 0; i < n; ++i) {
        cs[i] = band_lo + (band_hi - band_lo) * double(i) / double(n - 1);
        vs[i] = penalized(cs[i]);
        if (std::isfinite(vs[i]) && (best < 0 || vs[i] < vs[best])) best = i;
    }
    if (best < 0) return ExtendedReal::infinite();
    const double a = cs[std::max(0, best - 1)];
    const double b = cs[std::min(n - 1, best + 1)];
    double c_ref = golden_min(penalized, a, b, 1e-15 * std::fabs(model.F_theta()));
    double v_ref = penalized(c_ref);
    if (vs[best] < v_ref) {
        c_ref = cs[best];
        v_ref = vs[best];
    }
    if (c_min_out) *c_min_out = c_ref;
    return ExtendedReal::finite(v_ref);
}

inline ThresholdReport compute_thresholds(const ReactionModel& model,
                                          const BoundaryEnv& env) {
    ThresholdReport rep;
    double q = 0.0;
    rep.M_d = monotone_threshold(model, env, Branch::SD, &q);
    if (rep.M_d.is_finite()) rep.q_at_M_d = q;
    rep.M_i = monotone_threshold(model, env, Branch::SI, &q);
    if (rep.M_i.is_finite()) rep.q_at_M_i = q;
    double c = 0.0;
    rep.M_star = nonmonotone_threshold_Mstar(model, env, &c);
    if (rep.M_star.is_finite()) rep.c_at_M_star = c;
    rep.D_star = critical_diffusion_Dstar(model, env.p_ext);
    return rep;
}

} // namespace robinrd
