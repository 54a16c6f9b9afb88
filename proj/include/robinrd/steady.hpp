#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "robinrd/timemap.hpp"

namespace robinrd {

enum class ProfileClass { SD, SI, NonSM, Constant };

inline const char* to_string(ProfileClass c) {
    switch (c) {
        case ProfileClass::SD: return "SD";
        case ProfileClass::SI: return "SI";
        case ProfileClass::NonSM: return "non-SM";
        default: return "constant";
    }
}

// A sampled steady state on a uniform grid over [-L, L].
struct SteadyProfile {
    ProfileClass cls = ProfileClass::Constant;
    std::vector<double> x;
    std::vector<double> p;
    double p_at_0 = 0.0;
    double p_at_L = 0.0;
    double p_at_minus_L = 0.0;
    double energy = 0.0; // orbit invariant (p')^2/2 + F(p)
    std::string label;
};

struct BoundaryValueSolutions {
    std::vector<double> roots; // boundary values p(L) solving L = time_map
    bool has_constant = false; // p == theta, present only when p_ext == theta
};

struct ResidualReport {
    double interior_norm = 0.0; // max |second difference + f(p)|
    double bc_left = 0.0;
    double bc_right = 0.0;
    double energy_drift = 0.0; // max - min of the discrete orbit invariant
};

namespace detail {

// All solutions of map(q) = L on [lo, hi]: sign-change cells refined by
// bisection, plus tangency roots at interior minima grazing the level.
template <typename F>
std::vector<double> level_crossings(F&& map, double lo, double hi, double L, int n = 512) {
    std::vector<double> q(n), v(n);
    for (int i = 0; i < n; ++i) {
        q[i] = i == n - 1 ? hi : lo + (hi - lo) * double(i) / double(n - 1);
        v[i] = map(q[i]) - L;
    }
    std::vector<double> roots;
    auto push_checked = [&](double r) {
        // reject pseudo-crossings at jumps of the map (degenerate corners)
        if (std::fabs(map(r) - L) < 1e-6 * std::max(1.0, L)) roots.push_back(r);
    };
    for (int i = 0; i + 1 < n; ++i) {
        if (v[i] == 0.0) roots.push_back(q[i]);
        if ((v[i] > 0.0) != (v[i + 1] > 0.0))
            // run to the rounding floor: steep cells near divergent ends would
            // otherwise leave large residuals in map space
            push_checked(bisect([&](double s) { return map(s) - L; }, q[i], q[i + 1],
                                0.0));
    }
    if (v[n - 1] == 0.0) roots.push_back(q[n - 1]);
    // grazing contact: a local minimum cell whose refined value hits the level
    for (int i = 1; i + 1 < n; ++i) {
        if (!(v[i] < v[i - 1] && v[i] < v[i + 1] && v[i] > 0.0)) continue;
        const double qm = golden_min([&](double s) { return map(s); }, q[i - 1], q[i + 1],
                                     1e-11);
        if (std::fabs(map(qm) - L) < 1e-9) roots.push_back(qm);
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> out;
    for (double r : roots)
        if (out.empty() || r - out.back() > 1e-8) out.push_back(r);
    return out;
}

// One monotone piece of an orbit, sampled at Lobatto points in p with
// cumulative travel times; inverts position -> value on demand. Positions map
// onto travel times through a caller-set affine placement so that quadrature
// drift in the measured span never shows up as a jump at a segment end.
class OrbitArc {
  public:
    // plo < phi in value; traversed toward increasing p if `increasing`.
    OrbitArc(const ReactionModel& model, double c, double plo, double phi,
             bool increasing, bool turning_lo, bool turning_hi, int n_sub = 192)
        : model_(&model), c_(c), plo_(plo), phi_(phi), increasing_(increasing),
          turning_lo_(turning_lo), turning_hi_(turning_hi) {
        node_p_ = ChebyshevSeries::lobatto_nodes(std::size_t(n_sub), plo, phi);
        std::reverse(node_p_.begin(), node_p_.end()); // ascending in p
        node_tau_.assign(node_p_.size(), 0.0);
        const std::size_t last = node_p_.size() - 1;
        for (std::size_t j = 1; j <= last; ++j)
            node_tau_[j] = node_tau_[j - 1] +
                           orbit_time(*model_, c, node_p_[j - 1], node_p_[j],
                                      j == 1 && turning_lo_, j == last && turning_hi_,
                                      1e-10);
    }

    double span() const { return node_tau_.back(); }

    // occupy [x_from, x_from + span()/x_scale]
    void place(double x_from, double x_scale) {
        x_from_ = x_from;
        x_scale_ = x_scale;
    }
    double x_from() const { return x_from_; }
    double x_to() const { return x_from_ + span() / x_scale_; }

    // value at position x, x_from <= x <= x_to
    double value(double x) const {
        double tau = (x - x_from_) * x_scale_;
        tau = std::clamp(tau, 0.0, span());
        if (!increasing_) tau = span() - tau;
        // tau is now the travel time from plo_ toward phi_
        if (turning_lo_ && tau <= node_tau_[1]) return series_from(plo_, tau);
        if (turning_hi_ && tau >= node_tau_[node_tau_.size() - 2])
            return series_from(phi_, span() - tau);
        auto it = std::upper_bound(node_tau_.begin(), node_tau_.end(), tau);
        std::size_t k = std::min(node_tau_.size() - 2,
                                 std::size_t(std::max<long>(0, it - node_tau_.begin() - 1)));
        // solve tau(p) = tau on [node_p_[k], node_p_[k+1]] by safeguarded Newton
        double lo = node_p_[k], hi = node_p_[k + 1];
        const double tau_lo = node_tau_[k];
        auto tau_of = [&](double p) {
            return tau_lo + orbit_time(*model_, c_, lo, p,
                                       k == 0 && turning_lo_, false, 1e-11);
        };
        double p = 0.5 * (lo + hi);
        double blo = lo, bhi = hi;
        for (int it2 = 0; it2 < 60; ++it2) {
            const double r = tau_of(p) - tau;
            if (r > 0.0)
                bhi = p;
            else
                blo = p;
            if (bhi - blo < 4e-16 * std::max(1.0, std::fabs(bhi))) break;
            const double W = 2.0 * (c_ - model_->antiderivative(p));
            double pn = W > 0.0 ? p - r * std::sqrt(W) : p;
            if (!(pn > blo && pn < bhi)) pn = 0.5 * (blo + bhi);
            if (std::fabs(pn - p) < 2e-16 * std::max(1.0, std::fabs(p))) {
                p = pn;
                break;
            }
            p = pn;
        }
        return p;
    }

  private:
    // quartic expansion around a turning value p_t, valid within the first cell
    double series_from(double p_t, double dt) const {
        const double ft = model_->f(p_t);
        const double fpt = model_->fprime(p_t);
        const double dt2 = dt * dt;
        return p_t - 0.5 * ft * dt2 + ft * fpt * dt2 * dt2 / 24.0;
    }

    const ReactionModel* model_;
    double c_, plo_, phi_;
    double x_from_ = 0.0, x_scale_ = 1.0;
    bool increasing_, turning_lo_, turning_hi_;
    std::vector<double> node_p_, node_tau_;
};

inline std::vector<double> uniform_grid(double L, int n_grid) {
    std::vector<double> x(n_grid);
    for (int i = 0; i < n_grid; ++i)
        x[i] = -L + 2.0 * L * double(i) / double(n_grid - 1);
    return x;
}

} // namespace detail

// All boundary values solving L = time_map(q) on the branch domain.
inline BoundaryValueSolutions solve_boundary_values(const ReactionModel& model,
                                                    const BoundaryEnv& env, Branch branch) {
    env.validate();
    BoundaryValueSolutions out;
    out.has_constant = env.p_ext == model.theta();
    const TimeMapBranch dom = time_map_domain(model, env, branch);
    if (dom.empty) return out;
    auto map = [&](double q) {
        try {
            return time_map(model, env, branch, q);
        } catch (const numerical_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    out.roots = detail::level_crossings(map, dom.domain_lo, dom.domain_hi, env.L);
    return out;
}

// Rebuilds the full symmetric profile from its boundary value by inverting the
// travel-time integral onto a uniform grid; mirror symmetry gives x < 0.
inline SteadyProfile reconstruct_profile(const ReactionModel& model, const BoundaryEnv& env,
                                         Branch branch, double p_at_L, int n_grid = 1001) {
    env.validate();
    if (n_grid < 3) throw invalid_input("reconstruct_profile: n_grid must be >= 3");
    const double half_len = time_map(model, env, branch, p_at_L);
    if (std::fabs(half_len - env.L) > 1e-6 * std::max(1.0, env.L))
        throw invalid_input("reconstruct_profile: boundary value does not solve the "
                            "half-length equation for this environment");
    const double c = potential_G(model, env, p_at_L);
    const double p0 = branch == Branch::SD ? invert_F(model, FBranch::upper, c)
                                           : invert_F(model, FBranch::lower, c);
    SteadyProfile prof;
    prof.cls = branch == Branch::SD ? ProfileClass::SD : ProfileClass::SI;
    prof.x = detail::uniform_grid(env.L, n_grid);
    prof.p.assign(n_grid, p0);
    prof.energy = c;
    prof.p_at_0 = p0;
    prof.p_at_L = p_at_L;
    prof.p_at_minus_L = p_at_L;
    const bool boundary_turning = p_at_L == env.p_ext;
    if (std::fabs(p0 - p_at_L) > 1e-15) {
        const double plo = std::min(p0, p_at_L), phi = std::max(p0, p_at_L);
        const bool increasing = branch == Branch::SI; // as x runs 0 -> L
        detail::OrbitArc arc(model, c, plo, phi, increasing,
                             branch == Branch::SI ? true : boundary_turning,
                             branch == Branch::SD ? true : boundary_turning);
        arc.place(0.0, arc.span() / env.L);
        for (int i = n_grid / 2; i < n_grid; ++i) {
            const double ax = prof.x[i];
            prof.p[i] = ax >= env.L ? p_at_L : arc.value(ax);
            prof.p[n_grid - 1 - i] = prof.p[i];
        }
    }
    return prof;
}

// Assembles the asymmetric steady states (one-max-one-min orbits, and the
// single-minimum asymmetric orbits when p_ext > beta) whose round trip is 2L.
inline std::vector<SteadyProfile> construct_non_monotone(const ReactionModel& model,
                                                         const BoundaryEnv& env,
                                                         int n_grid = 1001) {
    env.validate();
    std::vector<SteadyProfile> out;
    const Landmarks lm = compute_landmarks(model);
    const double qbar_v = minimizer_qbar(model, env);
    const bool above_beta = env.p_ext > lm.beta;
    if (above_beta) {
        const auto Dstar = critical_diffusion_Dstar(model, env.p_ext);
        if (Dstar && env.D >= *Dstar) return out;
    }
    const double band_lo = detail::mstar_band_lo(model, env, qbar_v, above_beta);
    const double band_hi = detail::mstar_band_hi(model);
    if (!(band_lo < band_hi)) return out;

    auto halflen = [&](double c) {
        try {
            auto v = above_beta ? detail::non_sm_halflength_T4(model, env, qbar_v, c)
                                : detail::non_sm_halflength_T3(model, env, qbar_v, c);
            return v ? *v : std::numeric_limits<double>::infinity();
        } catch (const numerical_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    // locate all energy levels whose orbit closes at half-length L
    const int n = 512;
    std::vector<double> cs(n), vs(n);
    for (int i = 0; i < n; ++i) {
        cs[i] = band_lo + (band_hi - band_lo) * double(i) / double(n - 1);
        vs[i] = halflen(cs[i]);
    }
    std::vector<double> c_roots;
    for (int i = 0; i + 1 < n; ++i) {
        if (!std::isfinite(vs[i]) || !std::isfinite(vs[i + 1])) continue;
        if ((vs[i] > env.L) != (vs[i + 1] > env.L)) {
            const double c = bisect([&](double cc) { return halflen(cc) - env.L; },
                                    cs[i], cs[i + 1], 1e-17);
            if (std::fabs(halflen(c) - env.L) < 1e-6 * std::max(1.0, env.L))
                c_roots.push_back(c);
        }
    }
    for (int i = 1; i + 1 < n; ++i) { // grazing contact at a family minimum
        if (!std::isfinite(vs[i]) || !std::isfinite(vs[i - 1]) || !std::isfinite(vs[i + 1]))
            continue;
        if (!(vs[i] < vs[i - 1] && vs[i] < vs[i + 1] && vs[i] > env.L)) continue;
        const double cm = golden_min(halflen, cs[i - 1], cs[i + 1],
                                     1e-15 * std::fabs(model.F_theta()));
        if (std::fabs(halflen(cm) - env.L) < 1e-9) c_roots.push_back(cm);
    }
    std::sort(c_roots.begin(), c_roots.end());
    std::vector<double> dedup;
    for (double c : c_roots)
        if (dedup.empty() || c - dedup.back() > 1e-10 * std::fabs(model.F_theta()))
            dedup.push_back(c);

    int counter = 0;
    for (double c : dedup) {
        const detail::GPreimages pre = detail::g_preimages(model, env, qbar_v, c);
        if (!pre.below || !pre.above) continue;
        SteadyProfile prof;
        prof.cls = ProfileClass::NonSM;
        prof.energy = c;
        prof.x = detail::uniform_grid(env.L, n_grid);
        prof.p.assign(std::size_t(n_grid), 0.0);
        std::vector<detail::OrbitArc> arcs;
        if (!above_beta) {
            // rise-entry value above p_ext, max, full sweep to min, exit below
            const double q_enter = *pre.above, q_exit = *pre.below;
            const double p_max = invert_F(model, FBranch::upper, c);
            const double p_min = invert_F(model, FBranch::lower, c);
            arcs.emplace_back(model, c, q_enter, p_max, true, false, true);
            arcs.emplace_back(model, c, p_min, p_max, false, true, true);
            if (q_exit - p_min > 1e-15)
                arcs.emplace_back(model, c, p_min, q_exit, true, true, false);
            prof.p_at_minus_L = q_enter;
            prof.p_at_L = q_exit;
        } else {
            // both boundary values below p_ext around a single interior minimum
            const double q_enter = *pre.above, q_exit = *pre.below;
            const double p_min = invert_F(model, FBranch::lower, c);
            arcs.emplace_back(model, c, p_min, q_enter, false, true, false);
            arcs.emplace_back(model, c, p_min, q_exit, true, true, false);
            prof.p_at_minus_L = q_enter;
            prof.p_at_L = q_exit;
        }
        double total = 0.0;
        for (const auto& a : arcs) total += a.span();
        const double scale = total / (2.0 * env.L);
        double x_cursor = -env.L;
        for (auto& a : arcs) {
            a.place(x_cursor, scale);
            x_cursor = a.x_to();
        }
        for (int i = 0; i < n_grid; ++i) {
            const double x = prof.x[i];
            const detail::OrbitArc* arc = &arcs.front();
            for (const auto& a : arcs)
                if (x >= a.x_from()) arc = &a;
            prof.p[i] = arc->value(std::min(x, arc->x_to()));
        }
        prof.p_at_0 = prof.p[std::size_t(n_grid / 2)];
        prof.label = "nonSM-" + std::to_string(++counter);
        out.push_back(std::move(prof));
    }
    return out;
}

// Finite-difference defect of a sampled profile against the steady problem.
inline ResidualReport profile_residual(const ReactionModel& model, const BoundaryEnv& env,
                                       const SteadyProfile& prof) {
    const std::size_t n = prof.x.size();
    if (n < 3 || prof.p.size() != n)
        throw invalid_input("profile_residual: need a grid of at least 3 points");
    const double dx = prof.x[1] - prof.x[0];
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (std::fabs((prof.x[i + 1] - prof.x[i]) - dx) > 1e-9 * std::max(1.0, std::fabs(dx)))
            throw invalid_input("profile_residual: grid is not uniform");
    ResidualReport rep;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double lap = (prof.p[i - 1] - 2.0 * prof.p[i] + prof.p[i + 1]) / (dx * dx);
        rep.interior_norm = std::max(rep.interior_norm,
                                     std::fabs(lap + model.f(prof.p[i])));
    }
    // one-sided second-order derivatives at the ends
    const double dl = (-3.0 * prof.p[0] + 4.0 * prof.p[1] - prof.p[2]) / (2.0 * dx);
    const double dr = (3.0 * prof.p[n - 1] - 4.0 * prof.p[n - 2] + prof.p[n - 3]) / (2.0 * dx);
    rep.bc_left = std::fabs(dl - env.D * (prof.p[0] - env.p_ext));
    rep.bc_right = std::fabs(dr + env.D * (prof.p[n - 1] - env.p_ext));
    double e_min = std::numeric_limits<double>::infinity(), e_max = -e_min;
    for (std::size_t i = 0; i < n; ++i) {
        double dp;
        if (i == 0)
            dp = dl;
        else if (i == n - 1)
            dp = dr;
        else
            dp = (prof.p[i + 1] - prof.p[i - 1]) / (2.0 * dx);
        const double e = 0.5 * dp * dp + model.antiderivative(prof.p[i]);
        e_min = std::min(e_min, e);
        e_max = std::max(e_max, e);
    }
    rep.energy_drift = e_max - e_min;
    return rep;
}

// Full census: symmetric states from both branches, the constant state when
// p_ext equals theta, and the searched asymmetric states.
inline std::vector<SteadyProfile> compute_all_steady_states(const ReactionModel& model,
                                                            const BoundaryEnv& env,
                                                            int n_grid = 1001) {
    std::vector<SteadyProfile> all;
    const BoundaryValueSolutions sd = solve_boundary_values(model, env, Branch::SD);
    std::vector<double> sd_roots = sd.roots;
    std::sort(sd_roots.begin(), sd_roots.end(), std::greater<>()); // largest first
    int k = 0;
    for (double q : sd_roots) {
        SteadyProfile p = reconstruct_profile(model, env, Branch::SD, q, n_grid);
        p.label = "SD-" + std::to_string(++k);
        all.push_back(std::move(p));
    }
    const BoundaryValueSolutions si = solve_boundary_values(model, env, Branch::SI);
    std::vector<double> si_roots = si.roots; // smallest first
    std::sort(si_roots.begin(), si_roots.end());
    k = 0;
    for (double q : si_roots) {
        SteadyProfile p = reconstruct_profile(model, env, Branch::SI, q, n_grid);
        p.label = "SI-" + std::to_string(++k);
        all.push_back(std::move(p));
    }
    if (sd.has_constant) {
        SteadyProfile c;
        c.cls = ProfileClass::Constant;
        c.x = detail::uniform_grid(env.L, n_grid);
        c.p.assign(std::size_t(n_grid), model.theta());
        c.p_at_0 = c.p_at_L = c.p_at_minus_L = model.theta();
        c.energy = model.F_theta();
        c.label = "constant";
        all.push_back(std::move(c));
    }
    for (auto& p : construct_non_monotone(model, env, n_grid)) all.push_back(std::move(p));
    return all;
}

} // namespace robinrd
