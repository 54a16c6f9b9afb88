#include <catch2/catch_amalgamated.hpp>

#include "robinrd/steady.hpp"
#include "support.hpp"

using namespace robinrd;
using Catch::Approx;

namespace {
ReactionModel wolbachia() { return make_wolbachia_reaction(WolbachiaParams{}); }

int count_crossings(const ReactionModel& m, const BoundaryEnv& env, Branch br) {
    // exhaustive sign-change scan, independent of the solver's grid
    const TimeMapBranch dom = time_map_domain(m, env, br);
    if (dom.empty) return 0;
    int count = 0;
    double prev = 0.0;
    const int n = 4096;
    for (int i = 0; i < n; ++i) {
        const double q = i == n - 1 ? dom.domain_hi
                                    : dom.domain_lo +
                                          (dom.domain_hi - dom.domain_lo) * i / (n - 1.0);
        double v;
        try {
            v = time_map(m, env, br, q) - env.L;
        } catch (const numerical_error&) {
            continue;
        }
        if (i > 0 && (v > 0.0) != (prev > 0.0)) ++count;
        prev = v;
    }
    return count;
}
} // namespace

TEST_CASE("boundary-value census at the reported scenarios") {
    ReactionModel m = wolbachia();
    SECTION("small domain keeps only the increasing state") {
        BoundaryEnv env{0.5, 0.05, 0.1};
        REQUIRE(solve_boundary_values(m, env, Branch::SD).roots.empty());
        REQUIRE(solve_boundary_values(m, env, Branch::SI).roots.size() == 1);
    }
    SECTION("two decreasing states beyond the fold") {
        BoundaryEnv env{8.96, 0.05, 0.1};
        REQUIRE(solve_boundary_values(m, env, Branch::SD).roots.size() == 2);
    }
    SECTION("constant state marker appears only when p_ext equals theta") {
        BoundaryEnv env{1.0, 0.1, m.theta()};
        REQUIRE(solve_boundary_values(m, env, Branch::SD).has_constant);
        BoundaryEnv off{1.0, 0.1, 0.3};
        REQUIRE_FALSE(solve_boundary_values(m, off, Branch::SD).has_constant);
    }
}

TEST_CASE("uniqueness on the passive side of the fold") {
    ReactionModel m = wolbachia();
    // p_ext below alpha1: one increasing state; p_ext above alpha2: one decreasing
    for (double L : {0.5, 3.0, 10.0}) {
        BoundaryEnv lo{L, 0.05, 0.1};
        REQUIRE(count_crossings(m, lo, Branch::SI) == 1);
        BoundaryEnv hi{L, 0.05, 0.8};
        REQUIRE(count_crossings(m, hi, Branch::SD) == 1);
    }
}

TEST_CASE("round trip between roots and the time map") {
    ReactionModel m = wolbachia();
    for (auto [L, D, pext] : {std::tuple{8.96, 0.05, 0.1}, {2.0, 0.05, 0.8},
                              {12.0, 0.05, 0.8}}) {
        BoundaryEnv env{L, D, pext};
        for (Branch br : {Branch::SD, Branch::SI}) {
            for (double q : solve_boundary_values(m, env, br).roots) {
                REQUIRE(std::fabs(time_map(m, env, br, q) - L) < 1e-8);
            }
        }
    }
}

TEST_CASE("reconstruction of the symmetric profiles") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{0.5, 0.05, 0.1};
    const double q = solve_boundary_values(m, env, Branch::SI).roots.at(0);
    const SteadyProfile prof = reconstruct_profile(m, env, Branch::SI, q, 1001);

    SECTION("mirror symmetry is exact by construction") {
        for (std::size_t i = 0; i < prof.p.size(); ++i)
            REQUIRE(prof.p[i] == prof.p[prof.p.size() - 1 - i]);
    }
    SECTION("center value is the branch inverse of the boundary energy") {
        const double c = potential_G(m, env, q);
        REQUIRE(prof.p_at_0 == Approx(invert_F(m, FBranch::lower, c)).margin(1e-12));
        REQUIRE(prof.energy == Approx(c).margin(1e-15));
    }
    SECTION("values stay inside the unit interval and below p_ext") {
        for (double v : prof.p) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= env.p_ext + 1e-12);
        }
    }
    SECTION("finite-difference defect of the sampled state") {
        const ResidualReport res = profile_residual(m, env, prof);
        REQUIRE(res.interior_norm < 1e-5);
        REQUIRE(res.bc_left < 1e-6);
        REQUIRE(res.bc_right < 1e-6);
        REQUIRE(res.energy_drift < 1e-8);
    }
    SECTION("half-length recovered by an independent shooting oracle") {
        const double L_meas =
            oracle::measure_half_length(m, env, prof.p_at_0, 2.0 * env.L);
        REQUIRE(L_meas == Approx(env.L).margin(1e-6));
    }
    SECTION("boundary value must solve the half-length equation") {
        REQUIRE_THROWS_AS(reconstruct_profile(m, env, Branch::SI, 0.5 * q, 1001),
                          invalid_input);
    }
}

TEST_CASE("decreasing profiles sit above the boundary value") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{2.0, 0.05, 0.8};
    const double q = solve_boundary_values(m, env, Branch::SD).roots.at(0);
    const SteadyProfile prof = reconstruct_profile(m, env, Branch::SD, q, 1001);
    REQUIRE(prof.p_at_0 >= prof.p_at_L);
    for (double v : prof.p) {
        REQUIRE(v >= env.p_ext - 1e-12);
        REQUIRE(v <= 1.0);
    }
    const ResidualReport res = profile_residual(m, env, prof);
    REQUIRE(res.interior_norm < 1e-5);
    REQUIRE(res.energy_drift < 1e-8);
}

TEST_CASE("ordering of the coexisting states") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{8.96, 0.05, 0.1};
    const auto all = compute_all_steady_states(m, env, 801);
    const SteadyProfile* sd1 = nullptr;
    const SteadyProfile* sd2 = nullptr;
    const SteadyProfile* si1 = nullptr;
    for (const auto& s : all) {
        if (s.label == "SD-1") sd1 = &s;
        if (s.label == "SD-2") sd2 = &s;
        if (s.label == "SI-1") si1 = &s;
    }
    REQUIRE(sd1);
    REQUIRE(sd2);
    REQUIRE(si1);
    for (std::size_t i = 0; i < sd1->p.size(); ++i) {
        REQUIRE(sd1->p[i] > sd2->p[i]);
        REQUIRE(sd2->p[i] > si1->p[i]);
    }
}

TEST_CASE("asymmetric states exist exactly beyond their threshold", "[slow]") {
    ReactionModel m = wolbachia();
    BoundaryEnv base{1.0, 0.05, 0.1};
    const double Ms = nonmonotone_threshold_Mstar(m, base).value();
    SECTION("empty below") {
        BoundaryEnv env{0.99 * Ms, 0.05, 0.1};
        REQUIRE(construct_non_monotone(m, env, 401).empty());
    }
    SECTION("present above") {
        BoundaryEnv env{1.01 * Ms, 0.05, 0.1};
        REQUIRE_FALSE(construct_non_monotone(m, env, 401).empty());
    }
}

TEST_CASE("asymmetric state at the large-domain scenario", "[slow]") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{8.96, 0.05, 0.1};
    const auto profs = construct_non_monotone(m, env, 1001);
    REQUIRE_FALSE(profs.empty());
    for (const auto& prof : profs) {
        REQUIRE(prof.cls == ProfileClass::NonSM);
        // equal potential at the interior extremes, straddling theta
        const auto [mn_it, mx_it] = std::minmax_element(prof.p.begin(), prof.p.end());
        REQUIRE(*mn_it < m.theta());
        REQUIRE(*mx_it > m.theta());
        REQUIRE(m.antiderivative(*mn_it) == Approx(m.antiderivative(*mx_it)).margin(1e-8));
        // not symmetric
        REQUIRE(std::fabs(prof.p_at_L - prof.p_at_minus_L) > 1e-3);
        // grid defect
        const ResidualReport res = profile_residual(m, env, prof);
        REQUIRE(res.interior_norm < 1e-5);
        REQUIRE(res.bc_left < 1e-6);
        REQUIRE(res.bc_right < 1e-6);
    }

    SECTION("shooting oracle confirms the first profile, frozen regression") {
        const SteadyProfile& prof = profs.front();
        // regression values from the first verified construction
        REQUIRE(prof.p_at_minus_L == Approx(0.334282).margin(1e-4));
        REQUIRE(prof.p_at_L == Approx(0.085516).margin(1e-4));
        const double v0 = env.D * (prof.p_at_minus_L - env.p_ext);
        const oracle::ShootResult end =
            oracle::shoot(m, prof.p_at_minus_L, v0, 2.0 * env.L, 400000);
        REQUIRE(end.p == Approx(prof.p_at_L).margin(1e-5));
        REQUIRE(end.dp + env.D * (end.p - env.p_ext) == Approx(0.0).margin(1e-5));
    }
}

TEST_CASE("single-minimum asymmetric states above beta", "[slow]") {
    ReactionModel m = wolbachia();
    BoundaryEnv env{12.0, 0.05, 0.8};
    const auto profs = construct_non_monotone(m, env, 801);
    REQUIRE_FALSE(profs.empty());
    const SteadyProfile& prof = profs.front();
    // single interior minimum below p_ext, no interior maximum
    const auto mn_it = std::min_element(prof.p.begin(), prof.p.end());
    REQUIRE(mn_it != prof.p.begin());
    REQUIRE(mn_it != prof.p.end() - 1);
    REQUIRE(*std::max_element(prof.p.begin(), prof.p.end()) ==
            Approx(std::max(prof.p_at_L, prof.p_at_minus_L)).margin(1e-12));
    const ResidualReport res = profile_residual(m, env, prof);
    REQUIRE(res.interior_norm < 1e-5);
    // shooting oracle across the whole span
    const double v0 = env.D * (prof.p_at_minus_L - env.p_ext);
    const oracle::ShootResult end =
        oracle::shoot(m, prof.p_at_minus_L, v0, 2.0 * env.L, 400000);
    REQUIRE(end.p == Approx(prof.p_at_L).margin(1e-5));
    REQUIRE(end.dp + env.D * (end.p - env.p_ext) == Approx(0.0).margin(1e-5));
}

TEST_CASE("defect report flags perturbations and bad grids") {
    ReactionModel m = wolbachia();
    SECTION("constant state has zero defect") {
        BoundaryEnv env{1.0, 0.1, m.theta()};
        const auto all = compute_all_steady_states(m, env, 201);
        const auto it = std::find_if(all.begin(), all.end(), [](const SteadyProfile& s) {
            return s.cls == ProfileClass::Constant;
        });
        REQUIRE(it != all.end());
        const ResidualReport res = profile_residual(m, env, *it);
        REQUIRE(res.interior_norm < 1e-14);
        REQUIRE(res.bc_left < 1e-14);
        REQUIRE(res.bc_right < 1e-14);
        REQUIRE(res.energy_drift < 1e-14);
    }
    SECTION("a single perturbed node shows up at second-difference scale") {
        BoundaryEnv env{0.5, 0.05, 0.1};
        const double q = solve_boundary_values(m, env, Branch::SI).roots.at(0);
        SteadyProfile prof = reconstruct_profile(m, env, Branch::SI, q, 1001);
        prof.p[500] += 1e-2;
        const ResidualReport res = profile_residual(m, env, prof);
        const double n_over_2L = 1001.0 / (2.0 * env.L);
        REQUIRE(res.interior_norm > 1e-2 * n_over_2L * n_over_2L);
    }
    SECTION("non-uniform grids are rejected") {
        BoundaryEnv env{0.5, 0.05, 0.1};
        const double q = solve_boundary_values(m, env, Branch::SI).roots.at(0);
        SteadyProfile prof = reconstruct_profile(m, env, Branch::SI, q, 101);
        prof.x[50] += 1e-3;
        REQUIRE_THROWS_AS(profile_residual(m, env, prof), invalid_input);
    }
}

TEST_CASE("thresholds gate the census", "[slow]") {
    ReactionModel m = wolbachia();
    SECTION("decreasing branch around its fold") {
        BoundaryEnv base{1.0, 0.05, 0.1};
        const double Md = monotone_threshold(m, base, Branch::SD).value();
        BoundaryEnv below{0.99 * Md, 0.05, 0.1};
        REQUIRE(solve_boundary_values(m, below, Branch::SD).roots.empty());
        BoundaryEnv above{1.01 * Md, 0.05, 0.1};
        REQUIRE_FALSE(solve_boundary_values(m, above, Branch::SD).roots.empty());
    }
    SECTION("increasing branch around its fold") {
        BoundaryEnv base{1.0, 0.05, 0.8};
        const double Mi = monotone_threshold(m, base, Branch::SI).value();
        BoundaryEnv below{0.99 * Mi, 0.05, 0.8};
        REQUIRE(solve_boundary_values(m, below, Branch::SI).roots.empty());
        BoundaryEnv above{1.01 * Mi, 0.05, 0.8};
        REQUIRE_FALSE(solve_boundary_values(m, above, Branch::SI).roots.empty());
    }
}

TEST_CASE("cubic model reconstruction oracle") {
    ReactionModel m = make_cubic_reaction(0.2);
    BoundaryEnv env{2.0, 0.25, 0.1};
    const auto roots = solve_boundary_values(m, env, Branch::SI).roots;
    REQUIRE(roots.size() == 1);
    const SteadyProfile prof = reconstruct_profile(m, env, Branch::SI, roots[0], 1001);
    const ResidualReport res = profile_residual(m, env, prof);
    REQUIRE(res.interior_norm < 1e-5);
    REQUIRE(res.energy_drift < 1e-8);
    const double L_meas =
        oracle::measure_half_length(m, env, prof.p_at_0, 2.0 * env.L);
    REQUIRE(L_meas == Approx(env.L).margin(1e-6));
}
