#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "robinrd/stability.hpp"
#include "robinrd/steady.hpp"
#include "robinrd/tridiag.hpp"

namespace robinrd {

struct SimConfig {
    double dx = 0.0;  // 0 means L/200
    double dt = 0.0;  // 0 means min(0.1, 0.25/max|f'|)
    double t_max = 100.0;
    double diffusion = 1.0;
    std::vector<double> snapshot_times;

    void validate() const {
        if (dx < 0.0 || dt < 0.0) throw invalid_input("sim config: dx, dt must be >= 0");
        if (!(t_max > 0.0)) throw invalid_input("sim config: t_max must be positive");
        if (!(diffusion > 0.0)) throw invalid_input("sim config: diffusion must be positive");
    }
};

struct SystemConfig {
    WolbachiaParams params;
    double epsilon = 0.1;
    double n_i_ext = 0.0;
    double n_u_ext = 0.0;
    std::function<double(double)> n_i_init; // initial densities over x
    std::function<double(double)> n_u_init;

    void validate() const {
        params.validate();
        if (!(epsilon > 0.0)) throw invalid_input("system config: epsilon must be positive");
        if (!(n_u_ext > 0.0)) throw invalid_input("system config: n_u_ext must be positive");
        if (n_i_ext < 0.0) throw invalid_input("system config: n_i_ext must be >= 0");
        if (!n_i_init || !n_u_init)
            throw invalid_input("system config: initial densities not set");
    }
};

// Exterior densities split by p_ext at total K; equal initial densities K/2.
inline SystemConfig make_balanced_system(const WolbachiaParams& params, double epsilon,
                                         double p_ext) {
    SystemConfig sys;
    sys.params = params;
    sys.epsilon = epsilon;
    sys.n_i_ext = p_ext * params.K;
    sys.n_u_ext = (1.0 - p_ext) * params.K;
    const double half = 0.5 * params.K;
    sys.n_i_init = [half](double) { return half; };
    sys.n_u_init = [half](double) { return half; };
    return sys;
}

// Proportion-weighted hatching reduction from cytoplasmic incompatibility.
inline double ci_hatching_factor(double s_h, double n_i, double n_u) {
    const double total = n_i + n_u;
    if (total < 1e-300) throw numerical_error("ci factor: degenerate total density");
    return 1.0 - s_h * n_i / total;
}

struct Trajectory {
    std::vector<double> x;
    std::vector<double> times;
    std::vector<std::vector<double>> p;    // scalar field, or derived proportion
    std::vector<std::vector<double>> n_i;  // populated by the two-species runs
    std::vector<std::vector<double>> n_u;
    std::vector<double> rate; // sup-norm time derivative at each snapshot
    long clipped = 0;         // values nudged back into range beyond 1e-12
};

namespace detail {

struct Grid1D {
    std::vector<double> x;
    double dx;
};

inline Grid1D make_grid(const BoundaryEnv& env, double dx_req) {
    const double dx0 = dx_req > 0.0 ? dx_req : env.L / 200.0;
    const int n = std::max(3, 1 + int(std::lround(2.0 * env.L / dx0)));
    Grid1D g;
    g.dx = 2.0 * env.L / double(n - 1);
    g.x.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) g.x[std::size_t(i)] = -env.L + g.dx * double(i);
    return g;
}

// One backward-Euler diffusion solve with Robin rows; the reaction part has
// already been added to rhs explicitly.
inline std::vector<double> diffuse_implicit(const std::vector<double>& rhs, double r,
                                            double dx, double D, double ext,
                                            double& bdry_source) {
    const std::size_t n = rhs.size();
    std::vector<double> sub(n, -r), diag(n, 1.0 + 2.0 * r), sup(n, -r), b = rhs;
    diag[0] += 2.0 * r * dx * D;
    sup[0] = -2.0 * r;
    diag[n - 1] += 2.0 * r * dx * D;
    sub[n - 1] = -2.0 * r;
    bdry_source = 2.0 * r * dx * D * ext;
    b[0] += bdry_source;
    b[n - 1] += bdry_source;
    return solve_tridiagonal(std::move(sub), std::move(diag), std::move(sup), std::move(b));
}

inline double max_abs_fprime(const ReactionModel& model) {
    const auto r = fprime_range(model, 0.0, 1.0);
    return std::max(std::fabs(r.first), std::fabs(r.second));
}

} // namespace detail

// Semi-implicit integration of the scalar problem: implicit diffusion,
// explicit reaction, second-order Robin closure through ghost nodes.
inline Trajectory simulate_scalar(const ReactionModel& model, const BoundaryEnv& env,
                                  const std::vector<double>& p_init, SimConfig cfg) {
    env.validate();
    cfg.validate();
    const detail::Grid1D grid = detail::make_grid(env, cfg.dx);
    const std::size_t n = grid.x.size();
    if (p_init.size() != n)
        throw invalid_input("simulate_scalar: p_init size does not match the grid (" +
                            std::to_string(n) + " nodes)");
    for (double v : p_init)
        if (!(v >= 0.0 && v <= 1.0))
            throw invalid_input("simulate_scalar: initial data outside [0, 1]");
    const double fp_max = detail::max_abs_fprime(model);
    const double dt = cfg.dt > 0.0 ? cfg.dt : std::min(0.1, 0.25 / fp_max);
    if (dt > 0.5 / fp_max)
        throw invalid_input("simulate_scalar: dt exceeds the explicit reaction bound "
                            "0.5/max|f'| = " + std::to_string(0.5 / fp_max));
    const double r = cfg.diffusion * dt / (grid.dx * grid.dx);

    Trajectory out;
    out.x = grid.x;
    std::vector<double> p = p_init;
    std::vector<double> snaps = cfg.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto record = [&](double t, double rate) {
        out.times.push_back(t);
        out.p.push_back(p);
        out.rate.push_back(rate);
    };
    record(0.0, std::numeric_limits<double>::infinity());

    const long steps = long(std::ceil(cfg.t_max / dt - 1e-12));
    std::vector<double> rhs(n);
    for (long k = 0; k < steps; ++k) {
        const double t_new = std::min(cfg.t_max, double(k + 1) * dt);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = p[i] + dt * model.f(p[i]);
        double src;
        std::vector<double> pn =
            detail::diffuse_implicit(rhs, r, grid.dx, env.D, env.p_ext, src);
        double rate = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rate = std::max(rate, std::fabs(pn[i] - p[i]) / dt);
            if (pn[i] < 0.0 || pn[i] > 1.0) {
                if (pn[i] < -1e-12 || pn[i] > 1.0 + 1e-12) ++out.clipped;
                pn[i] = std::clamp(pn[i], 0.0, 1.0);
            }
        }
        p = std::move(pn);
        while (next_snap < snaps.size() && snaps[next_snap] <= t_new + 1e-12) {
            record(t_new, rate);
            ++next_snap;
        }
        if (k + 1 == steps && (out.times.empty() || out.times.back() < t_new))
            record(t_new, rate);
    }
    return out;
}

// Semi-implicit integration of the two-species system; emits the densities
// and the derived infected proportion. The time step additionally respects
// the fast reaction scale epsilon/b_u.
inline Trajectory simulate_system(const SystemConfig& sys, const BoundaryEnv& env,
                                  SimConfig cfg) {
    env.validate();
    cfg.validate();
    sys.validate();
    const WolbachiaParams& w = sys.params;
    const detail::Grid1D grid = detail::make_grid(env, cfg.dx);
    const std::size_t n = grid.x.size();
    const double dt_react = 0.2 * sys.epsilon / w.b_u;
    const double dt = std::min(cfg.dt > 0.0 ? cfg.dt : 0.1, dt_react);
    const double r = cfg.diffusion * dt / (grid.dx * grid.dx);

    std::vector<double> ni(n), nu(n);
    double nu_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ni[i] = sys.n_i_init(grid.x[i]);
        nu[i] = sys.n_u_init(grid.x[i]);
        if (ni[i] < 0.0 || nu[i] < 0.0)
            throw invalid_input("simulate_system: negative initial density");
        nu_total += nu[i];
    }
    if (nu_total == 0.0)
        throw invalid_input("simulate_system: uninfected density identically zero");

    Trajectory out;
    out.x = grid.x;
    std::vector<double> snaps = cfg.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto record = [&](double t, double rate) {
        out.times.push_back(t);
        out.n_i.push_back(ni);
        out.n_u.push_back(nu);
        std::vector<double> prop(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double tot = ni[i] + nu[i];
            if (tot < 1e-300)
                throw numerical_error("simulate_system: total density degenerate at x = " +
                                      std::to_string(grid.x[i]));
            prop[i] = ni[i] / tot;
        }
        out.p.push_back(std::move(prop));
        out.rate.push_back(rate);
    };
    record(0.0, std::numeric_limits<double>::infinity());

    const long steps = long(std::ceil(cfg.t_max / dt - 1e-12));
    std::vector<double> rhs_i(n), rhs_u(n);
    for (long k = 0; k < steps; ++k) {
        const double t_new = std::min(cfg.t_max, double(k + 1) * dt);
        for (std::size_t i = 0; i < n; ++i) {
            const double tot = ni[i] + nu[i];
            if (tot < 1e-300)
                throw numerical_error("simulate_system: total density degenerate at x = " +
                                      std::to_string(grid.x[i]));
            const double logistic = 1.0 - tot / w.K;
            const double Ri = (1.0 - w.s_f) * (w.b_u / sys.epsilon) * ni[i] * logistic -
                              w.delta * w.d_u * ni[i];
            const double Ru = (w.b_u / sys.epsilon) * nu[i] *
                                  ci_hatching_factor(w.s_h, ni[i], nu[i]) * logistic -
                              w.d_u * nu[i];
            rhs_i[i] = ni[i] + dt * Ri;
            rhs_u[i] = nu[i] + dt * Ru;
        }
        double src;
        std::vector<double> ni_new =
            detail::diffuse_implicit(rhs_i, r, grid.dx, env.D, sys.n_i_ext, src);
        std::vector<double> nu_new =
            detail::diffuse_implicit(rhs_u, r, grid.dx, env.D, sys.n_u_ext, src);
        double rate = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rate = std::max(rate, std::fabs(ni_new[i] - ni[i]) / dt);
            rate = std::max(rate, std::fabs(nu_new[i] - nu[i]) / dt);
            if (ni_new[i] < 0.0) {
                if (ni_new[i] < -1e-12 * w.K) ++out.clipped;
                ni_new[i] = 0.0;
            }
            if (nu_new[i] < 0.0) {
                if (nu_new[i] < -1e-12 * w.K) ++out.clipped;
                nu_new[i] = 0.0;
            }
        }
        ni = std::move(ni_new);
        nu = std::move(nu_new);
        while (next_snap < snaps.size() && snaps[next_snap] <= t_new + 1e-12) {
            record(t_new, rate);
            ++next_snap;
        }
        if (k + 1 == steps && (out.times.empty() || out.times.back() < t_new))
            record(t_new, rate);
    }
    return out;
}

struct EpsilonStudyRow {
    double epsilon = 0.0;
    double l2_error = 0.0;
    double linf_error = 0.0;
};

// Compares the two-species proportion against the scalar limit field at t_max
// on the shared grid, for each epsilon.
inline std::vector<EpsilonStudyRow> epsilon_convergence_study(const SystemConfig& sys_base,
                                                              const BoundaryEnv& env,
                                                              const SimConfig& cfg,
                                                              std::vector<double> eps_list) {
    if (eps_list.empty()) throw invalid_input("epsilon study: empty epsilon list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw invalid_input("epsilon study: epsilon values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw invalid_input("epsilon study: epsilon values must be decreasing");
    }
    const ReactionModel model = make_wolbachia_reaction(sys_base.params);
    const detail::Grid1D grid = detail::make_grid(env, cfg.dx);
    std::vector<double> p_init(grid.x.size());
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
        const double ni = sys_base.n_i_init(grid.x[i]);
        const double nu = sys_base.n_u_init(grid.x[i]);
        p_init[i] = ni / (ni + nu);
    }
    SimConfig cfg_scalar = cfg;
    cfg_scalar.snapshot_times.clear();
    const Trajectory limit = simulate_scalar(model, env, p_init, cfg_scalar);
    const std::vector<double>& p0 = limit.p.back();

    std::vector<EpsilonStudyRow> rows;
    for (double eps : eps_list) {
        SystemConfig sys = sys_base;
        sys.epsilon = eps;
        SimConfig cfg_sys = cfg;
        cfg_sys.snapshot_times.clear();
        const Trajectory tr = simulate_system(sys, env, cfg_sys);
        const std::vector<double>& pe = tr.p.back();
        EpsilonStudyRow row;
        row.epsilon = eps;
        double acc = 0.0;
        for (std::size_t i = 0; i < p0.size(); ++i) {
            const double d = pe[i] - p0[i];
            const double wgt = (i == 0 || i + 1 == p0.size()) ? 0.5 : 1.0;
            acc += wgt * d * d;
            row.linf_error = std::max(row.linf_error, std::fabs(d));
        }
        row.l2_error = std::sqrt(acc * grid.dx);
        rows.push_back(row);
    }
    return rows;
}

struct RelaxResult {
    SteadyProfile closest;
    double distance = 0.0; // L2 distance to the closest steady state
    Trajectory trajectory;
    double final_rate = 0.0;
};

// Integrates until the sup-norm time derivative drops below tol, then reports
// the nearest constructed steady state in L2.
inline RelaxResult relax_to_steady(const ReactionModel& model, const BoundaryEnv& env,
                                   const std::vector<double>& p_init, SimConfig cfg,
                                   double tol) {
    if (!(tol > 0.0)) throw invalid_input("relax_to_steady: tol must be positive");
    env.validate();
    cfg.validate();
    const detail::Grid1D grid = detail::make_grid(env, cfg.dx);
    const std::size_t n = grid.x.size();
    if (p_init.size() != n)
        throw invalid_input("relax_to_steady: p_init size does not match the grid");
    const double fp_max = detail::max_abs_fprime(model);
    const double dt = cfg.dt > 0.0 ? cfg.dt : std::min(0.1, 0.25 / fp_max);
    const double r = cfg.diffusion * dt / (grid.dx * grid.dx);

    Trajectory traj;
    traj.x = grid.x;
    std::vector<double> p = p_init;
    traj.times.push_back(0.0);
    traj.p.push_back(p);
    traj.rate.push_back(std::numeric_limits<double>::infinity());

    double t = 0.0, rate = std::numeric_limits<double>::infinity();
    std::vector<double> rhs(n);
    bool converged = false;
    while (t < cfg.t_max) {
        for (std::size_t i = 0; i < n; ++i) rhs[i] = p[i] + dt * model.f(p[i]);
        double src;
        std::vector<double> pn =
            detail::diffuse_implicit(rhs, r, grid.dx, env.D, env.p_ext, src);
        rate = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rate = std::max(rate, std::fabs(pn[i] - p[i]) / dt);
            pn[i] = std::clamp(pn[i], 0.0, 1.0);
        }
        p = std::move(pn);
        t += dt;
        if (rate < tol) {
            converged = true;
            break;
        }
    }
    traj.times.push_back(t);
    traj.p.push_back(p);
    traj.rate.push_back(rate);
    if (!converged) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", rate);
        throw numerical_error(std::string("relax_to_steady: rate still ") + buf +
                              " at t_max");
    }

    const std::vector<SteadyProfile> states =
        compute_all_steady_states(model, env, int(n));
    if (states.empty())
        throw numerical_error("relax_to_steady: no steady states constructed");
    RelaxResult out;
    out.trajectory = std::move(traj);
    out.final_rate = rate;
    out.distance = std::numeric_limits<double>::infinity();
    for (const auto& s : states) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = s.p[i] - p[i];
            const double wgt = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
            acc += wgt * d * d;
        }
        const double dist = std::sqrt(acc * grid.dx);
        if (dist < out.distance) {
            out.distance = dist;
            out.closest = s;
        }
    }
    return out;
}

} // namespace robinrd
