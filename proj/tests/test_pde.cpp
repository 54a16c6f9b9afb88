#include <catch2/catch_amalgamated.hpp>

#include "robinrd/pde.hpp"
#include "support.hpp"

using namespace robinrd;
using Catch::Approx;

namespace {
ReactionModel wolbachia() { return make_wolbachia_reaction(WolbachiaParams{}); }

std::vector<double> const_field(const BoundaryEnv& env, double dx, double v) {
    const auto g = robinrd::detail::make_grid(env, dx);
    return std::vector<double>(g.x.size(), v);
}
} // namespace

TEST_CASE("constant state at p_ext = theta is an exact fixed point") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{1.0, 0.2, m.theta()};
    SimConfig cfg;
    cfg.t_max = 20.0;
    const Trajectory tr = simulate_scalar(m, env, const_field(env, 0.0, m.theta()), cfg);
    for (double v : tr.p.back()) REQUIRE(v == Approx(m.theta()).margin(1e-10));
    REQUIRE(tr.clipped == 0);
}

TEST_CASE("input validation of the scalar integrator") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{1.0, 0.2, 0.3};
    SimConfig cfg;
    SECTION("initial data outside the unit interval") {
        auto bad = const_field(env, 0.0, 0.5);
        bad[3] = 1.5;
        REQUIRE_THROWS_AS(simulate_scalar(m, env, bad, cfg), invalid_input);
    }
    SECTION("reaction-limited step bound") {
        cfg.dt = 100.0;
        REQUIRE_THROWS_AS(simulate_scalar(m, env, const_field(env, 0.0, 0.5), cfg),
                          invalid_input);
    }
    SECTION("grid size mismatch") {
        std::vector<double> wrong(17, 0.5);
        REQUIRE_THROWS_AS(simulate_scalar(m, env, wrong, cfg), invalid_input);
    }
}

TEST_CASE("comparison principle for ordered initial data") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{2.0, 0.05, 0.1};
    SimConfig cfg;
    cfg.t_max = 30.0;
    cfg.snapshot_times = {5, 10, 20, 30};
    const auto g = robinrd::detail::make_grid(env, 0.0);
    std::vector<double> lo(g.x.size()), hi(g.x.size());
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        lo[i] = 0.2 + 0.1 * std::sin(3.0 * g.x[i]);
        hi[i] = lo[i] + 0.15 + 0.05 * std::cos(2.0 * g.x[i]);
    }
    const Trajectory t_lo = simulate_scalar(m, env, lo, cfg);
    const Trajectory t_hi = simulate_scalar(m, env, hi, cfg);
    for (std::size_t k = 0; k < t_lo.times.size(); ++k)
        for (std::size_t i = 0; i < g.x.size(); ++i)
            REQUIRE(t_lo.p[k][i] <= t_hi.p[k][i] + 1e-12);
}

TEST_CASE("implicit diffusion conserves the trapezoid mean without exchange") {
    // zero reaction and a sealed boundary: the kernel is used directly
    const double dx = 0.01, r = 0.5;
    std::vector<double> p(101);
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = 0.4 + 0.3 * std::sin(0.17 * double(i));
    auto mean = [&](const std::vector<double>& v) {
        double acc = 0.5 * (v.front() + v.back());
        for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i];
        return acc * dx;
    };
    const double m0 = mean(p);
    for (int step = 0; step < 50; ++step) {
        double src;
        p = robinrd::detail::diffuse_implicit(p, r, dx, 0.0, 0.7, src);
        REQUIRE(src == 0.0);
        REQUIRE(mean(p) == Approx(m0).margin(1e-12));
    }
}

TEST_CASE("relaxation to the unique attractor in a small domain", "[slow]") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{0.5, 0.05, 0.1};
    SimConfig cfg;
    cfg.t_max = 2000.0;
    for (double init : {0.0, 0.5, 1.0}) {
        const RelaxResult rr =
            relax_to_steady(m, env, const_field(env, 0.0, init), cfg, 1e-10);
        REQUIRE(rr.closest.cls == ProfileClass::SI);
        REQUIRE(rr.distance < 1e-3);
    }
}

TEST_CASE("relaxation in the replacement regimes", "[slow]") {
    ReactionModel m = wolbachia();
    SECTION("small treated zone with a high exterior proportion") {
        BoundaryEnv env{2.0, 0.05, 0.8};
        SimConfig cfg;
        cfg.t_max = 2000.0;
        const RelaxResult rr =
            relax_to_steady(m, env, const_field(env, 0.0, 0.5), cfg, 1e-10);
        REQUIRE(rr.closest.cls == ProfileClass::SD);
        REQUIRE(rr.distance < 1e-3);
    }
    SECTION("strong migration keeps only the decreasing state") {
        BoundaryEnv env{12.0, 0.5, 0.8};
        SimConfig cfg;
        cfg.t_max = 3000.0;
        cfg.dx = 12.0 / 120.0;
        const RelaxResult rr =
            relax_to_steady(m, env, const_field(env, cfg.dx, 0.0), cfg, 1e-9);
        REQUIRE(rr.closest.cls == ProfileClass::SD);
        REQUIRE(rr.distance < 1e-3);
    }
}

TEST_CASE("starting at a steady state stays there") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{0.5, 0.05, 0.1};
    const double q = solve_boundary_values(m, env, Branch::SI).roots.at(0);
    const auto g = robinrd::detail::make_grid(env, 0.0);
    const SteadyProfile prof =
        reconstruct_profile(m, env, Branch::SI, q, int(g.x.size()));
    SimConfig cfg;
    cfg.t_max = 100.0;
    const RelaxResult rr = relax_to_steady(m, env, prof.p, cfg, 1e-9);
    REQUIRE(rr.closest.cls == ProfileClass::SI);
    REQUIRE(rr.distance < 1e-6);
}

TEST_CASE("perturbations respect the theorem verdicts", "[slow]") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{8.96, 0.05, 0.1};
    const double l1 = principal_eigenvalue(env);
    const auto g = robinrd::detail::make_grid(env, 0.0);
    const int n = int(g.x.size());
    auto mode = [&](double x) { return std::cos(std::sqrt(l1) * x); };
    const auto all = compute_all_steady_states(m, env, n);
    const SteadyProfile* stable = nullptr;
    const SteadyProfile* unstable = nullptr;
    for (const auto& s : all) {
        if (s.label == "SD-1") stable = &s;
        if (s.label == "SD-2") unstable = &s;
    }
    REQUIRE(stable);
    REQUIRE(unstable);
    SECTION("a stable state pulls back both signed perturbations") {
        for (double sign : {+1.0, -1.0}) {
            std::vector<double> init = stable->p;
            for (int i = 0; i < n; ++i)
                init[i] = std::clamp(init[i] + sign * 0.01 * mode(g.x[i]), 0.0, 1.0);
            SimConfig cfg;
            cfg.t_max = 400.0;
            const Trajectory tr = simulate_scalar(m, env, init, cfg);
            double dist = 0.0;
            for (int i = 0; i < n; ++i)
                dist = std::max(dist, std::fabs(tr.p.back()[i] - stable->p[i]));
            REQUIRE(dist < 2e-3);
        }
    }
    SECTION("an unstable state is abandoned along the principal mode") {
        std::vector<double> init = unstable->p;
        for (int i = 0; i < n; ++i)
            init[i] = std::clamp(init[i] + 0.01 * mode(g.x[i]), 0.0, 1.0);
        SimConfig cfg;
        cfg.t_max = 600.0;
        const Trajectory tr = simulate_scalar(m, env, init, cfg);
        double dist = 0.0;
        for (int i = 0; i < n; ++i)
            dist = std::max(dist, std::fabs(tr.p.back()[i] - unstable->p[i]));
        REQUIRE(dist > 0.05);
    }
}

TEST_CASE("departure from the asymmetric state toward the increasing one", "[slow]") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{8.96, 0.05, 0.1};
    const auto g = robinrd::detail::make_grid(env, 0.0);
    const int n = int(g.x.size());
    const auto non_sm = construct_non_monotone(m, env, n);
    REQUIRE_FALSE(non_sm.empty());
    const double l1 = principal_eigenvalue(env);
    std::vector<double> init = non_sm.front().p;
    for (int i = 0; i < n; ++i)
        init[i] = std::clamp(init[i] - 0.01 * std::cos(std::sqrt(l1) * g.x[i]), 0.0, 1.0);
    SimConfig cfg;
    cfg.t_max = 4000.0;
    const RelaxResult rr = relax_to_steady(m, env, init, cfg, 1e-10);
    REQUIRE(rr.closest.label == "SI-1");
    REQUIRE(rr.distance < 1e-3);
}

TEST_CASE("grid refinement of the scalar scheme is second order", "[slow]") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{0.5, 0.05, 0.1};
    auto run = [&](double dx, double dt) {
        SimConfig cfg;
        cfg.dx = dx;
        cfg.dt = dt;
        cfg.t_max = 40.0;
        const auto g = robinrd::detail::make_grid(env, dx);
        return simulate_scalar(m, env, std::vector<double>(g.x.size(), 0.5), cfg);
    };
    const Trajectory c = run(0.01, 0.05);
    const Trajectory f1 = run(0.005, 0.025);
    const Trajectory f2 = run(0.0025, 0.0125);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < c.p.back().size(); ++i)
        d1 = std::max(d1, std::fabs(c.p.back()[i] - f1.p.back()[2 * i]));
    for (std::size_t i = 0; i < f1.p.back().size(); ++i)
        d2 = std::max(d2, std::fabs(f1.p.back()[i] - f2.p.back()[2 * i]));
    REQUIRE(d1 / d2 == Approx(4.0).margin(2.0));
}

TEST_CASE("two-species system basics") {
    WolbachiaParams w;
    SECTION("equal initial densities give the balanced proportion") {
        SystemConfig sys = make_balanced_system(w, 0.1, 0.1);
        BoundaryEnv env{1.0, 0.05, 0.1};
        SimConfig cfg;
        cfg.t_max = 0.5;
        const Trajectory tr = simulate_system(sys, env, cfg);
        for (double v : tr.p.front()) REQUIRE(v == Approx(0.5).margin(1e-14));
        for (std::size_t k = 0; k < tr.times.size(); ++k)
            for (std::size_t i = 0; i < tr.x.size(); ++i) {
                REQUIRE(tr.n_i[k][i] >= 0.0);
                REQUIRE(tr.n_u[k][i] >= 0.0);
            }
    }
    SECTION("no hatching failure removes the incompatibility pressure") {
        REQUIRE(ci_hatching_factor(0.0, 3.0, 1.0) == 1.0);
        REQUIRE(ci_hatching_factor(1.0, 3.0, 1.0) == Approx(0.25));
        REQUIRE_THROWS_AS(ci_hatching_factor(0.8, 0.0, 0.0), numerical_error);
    }
    SECTION("configuration validation") {
        SystemConfig sys = make_balanced_system(w, 0.1, 0.1);
        sys.epsilon = 0.0;
        BoundaryEnv env{1.0, 0.05, 0.1};
        REQUIRE_THROWS_AS(simulate_system(sys, env, SimConfig{}), invalid_input);
    }
}

TEST_CASE("self-comparison of the limit field is exactly zero") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{1.0, 0.05, 0.1};
    SimConfig cfg;
    cfg.t_max = 5.0;
    const auto g = robinrd::detail::make_grid(env, 0.0);
    const Trajectory a = simulate_scalar(m, env, std::vector<double>(g.x.size(), 0.5), cfg);
    double l2 = 0.0;
    for (std::size_t i = 0; i < a.p.back().size(); ++i) {
        const double d = a.p.back()[i] - a.p.back()[i];
        l2 += d * d;
    }
    REQUIRE(l2 == 0.0);
}

TEST_CASE("proportion of the fast system approaches the scalar limit", "[slow]") {
    WolbachiaParams w;
    BoundaryEnv env{2.0, 0.05, 0.1};
    SystemConfig sys = make_balanced_system(w, 0.1, env.p_ext);
    SimConfig cfg;
    cfg.t_max = 50.0;
    cfg.dx = 0.02;
    cfg.dt = 0.02;
    const auto rows = epsilon_convergence_study(sys, env, cfg, {0.1, 0.05, 0.01});
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0].l2_error > rows[1].l2_error);
    REQUIRE(rows[1].l2_error > rows[2].l2_error);
    REQUIRE(rows[2].l2_error < 0.05);

    SECTION("error at the smallest epsilon is not discretization-dominated") {
        SimConfig fine = cfg;
        fine.dx = 0.5 * cfg.dx;
        fine.dt = 0.5 * cfg.dt;
        const auto fine_rows = epsilon_convergence_study(sys, env, fine, {0.01});
        const double change =
            std::fabs(fine_rows[0].l2_error - rows[2].l2_error) / rows[2].l2_error;
        REQUIRE(change < 0.25);
    }
}

TEST_CASE("epsilon study rejects non-decreasing lists") {
    WolbachiaParams w;
    BoundaryEnv env{1.0, 0.05, 0.1};
    SystemConfig sys = make_balanced_system(w, 0.1, env.p_ext);
    REQUIRE_THROWS_AS(epsilon_convergence_study(sys, env, SimConfig{}, {0.05, 0.1}),
                      invalid_input);
    REQUIRE_THROWS_AS(epsilon_convergence_study(sys, env, SimConfig{}, {}),
                      invalid_input);
}
