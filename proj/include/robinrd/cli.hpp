#pragma once

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "robinrd/pde.hpp"
#include "robinrd/stability.hpp"
#include "robinrd/steady.hpp"
#include "robinrd/timemap.hpp"

namespace robinrd::cli {

// shortest decimal representation that round-trips to the same double
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw invalid_input("cannot open for writing: " + tmp.string());
        out << content;
        if (!out.flush()) throw invalid_input("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

struct Scenario {
    std::string model_kind = "wolbachia";
    WolbachiaParams params;
    double cubic_theta = 0.25;
    double sigma = 1.0; // accepted and unused
    double p_ext = 0.1;
    double D = 0.05;
    std::optional<double> L;

    ReactionModel model() const {
        if (model_kind == "cubic") return make_cubic_reaction(cubic_theta);
        if (model_kind == "wolbachia") return make_wolbachia_reaction(params);
        throw invalid_input("unknown model kind: " + model_kind);
    }

    BoundaryEnv env() const {
        if (!L) throw invalid_input("this command requires --L");
        BoundaryEnv e{*L, D, p_ext};
        e.validate();
        return e;
    }
};

namespace detail {

inline nlohmann::json extended_to_json(const ExtendedReal& v) {
    if (v.is_zero()) return "0";
    if (v.is_infinite()) return "inf";
    return v.value();
}

inline ExtendedReal extended_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        if (j == "0") return ExtendedReal::zero();
        if (j == "inf") return ExtendedReal::infinite();
        throw invalid_input("bad extended-real tag: " + j.dump());
    }
    return ExtendedReal::finite(j.get<double>());
}

inline nlohmann::json model_to_json(const Scenario& sc, const ReactionModel& model) {
    nlohmann::json j;
    j["kind"] = sc.model_kind;
    j["theta"] = model.theta();
    if (sc.model_kind == "wolbachia") {
        j["b_u"] = sc.params.b_u;
        j["d_u"] = sc.params.d_u;
        j["delta"] = sc.params.delta;
        j["s_f"] = sc.params.s_f;
        j["s_h"] = sc.params.s_h;
        j["K"] = sc.params.K;
    }
    return j;
}

inline std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& body) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::future<void>> futs;
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::min<unsigned>(jobs, unsigned(n));
    for (unsigned w = 0; w < workers; ++w)
        futs.push_back(std::async(std::launch::async, [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        }));
    for (auto& f : futs) f.get();
}

} // namespace detail

// Full report for a scenario: landmarks and thresholds always; eigenvalue and
// the solution census (with optional linearization oracle) when L is known.
inline nlohmann::json build_report(const Scenario& sc, bool with_solutions,
                                   bool with_oracle, int n_grid = 1001) {
    const ReactionModel model = sc.model();
    const Landmarks lm = compute_landmarks(model);
    nlohmann::json j;
    j["model"] = detail::model_to_json(sc, model);
    nlohmann::json env_j;
    env_j["D"] = sc.D;
    env_j["p_ext"] = sc.p_ext;
    if (sc.L) env_j["L"] = *sc.L;
    j["env"] = env_j;
    j["landmarks"] = {{"theta", lm.theta},
                      {"alpha1", lm.alpha1},
                      {"alpha2", lm.alpha2},
                      {"beta", lm.beta}};
    // thresholds depend on (p_ext, D) but not on L
    BoundaryEnv env_free{sc.L ? *sc.L : 1.0, sc.D, sc.p_ext};
    const ThresholdReport th = compute_thresholds(model, env_free);
    nlohmann::json th_j;
    th_j["M_d"] = detail::extended_to_json(th.M_d);
    th_j["M_i"] = detail::extended_to_json(th.M_i);
    th_j["M_star"] = detail::extended_to_json(th.M_star);
    if (th.D_star) th_j["D_star"] = *th.D_star;
    j["thresholds"] = th_j;
    if (sc.L && with_solutions) {
        const BoundaryEnv env = sc.env();
        j["lambda1"] = principal_eigenvalue(env);
        nlohmann::json sols = nlohmann::json::array();
        for (const auto& prof : compute_all_steady_states(model, env, n_grid)) {
            const StabilityVerdict v = classify_stability(model, env, prof, with_oracle);
            nlohmann::json s;
            s["class"] = to_string(prof.cls);
            s["label"] = prof.label;
            s["p_at_L"] = prof.p_at_L;
            s["p_at_0"] = prof.p_at_0;
            s["verdict"] = to_string(v.verdict);
            if (v.mu1) s["mu1"] = *v.mu1;
            sols.push_back(s);
        }
        j["solutions"] = sols;
    }
    return j;
}

inline std::string profiles_to_csv(const std::vector<SteadyProfile>& profs) {
    std::string out = "x,p,class,label\n";
    bool first = true;
    for (const auto& pr : profs) {
        if (!first) out += "\n";
        first = false;
        for (std::size_t i = 0; i < pr.x.size(); ++i) {
            out += format_double(pr.x[i]);
            out += ',';
            out += format_double(pr.p[i]);
            out += ',';
            out += to_string(pr.cls);
            out += ',';
            out += pr.label;
            out += '\n';
        }
    }
    return out;
}

inline std::string trajectory_to_csv(const Trajectory& tr, bool system) {
    std::string out = system ? "t,x,n_i,n_u,p_eps\n" : "t,x,p\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        for (std::size_t i = 0; i < tr.x.size(); ++i) {
            out += format_double(tr.times[k]);
            out += ',';
            out += format_double(tr.x[i]);
            out += ',';
            if (system) {
                out += format_double(tr.n_i[k][i]);
                out += ',';
                out += format_double(tr.n_u[k][i]);
                out += ',';
            }
            out += format_double(tr.p[k][i]);
            out += '\n';
        }
    }
    return out;
}

struct SweepRow {
    double L;
    Branch branch;
    double p_at_L;
};

// Boundary-value roots per branch on a uniform grid of half-lengths.
inline std::vector<SweepRow> sweep_bifurcation(const ReactionModel& model, double p_ext,
                                               double D, double L_min, double L_max,
                                               int n_points, unsigned jobs = 1) {
    if (!(L_min > 0.0) || !(L_max > L_min))
        throw invalid_input("sweep: require 0 < Lmin < Lmax");
    if (n_points < 2) throw invalid_input("sweep: require at least 2 grid points");
    std::vector<std::vector<SweepRow>> per_point(static_cast<std::size_t>(n_points));
    detail::parallel_for(std::size_t(n_points), jobs, [&](std::size_t i) {
        const double L =
            L_min + (L_max - L_min) * double(i) / double(n_points - 1);
        BoundaryEnv env{L, D, p_ext};
        for (Branch br : {Branch::SD, Branch::SI}) {
            const auto sol = solve_boundary_values(model, env, br);
            for (double q : sol.roots) per_point[i].push_back({L, br, q});
        }
    });
    std::vector<SweepRow> rows;
    for (auto& v : per_point)
        for (auto& r : v) rows.push_back(r);
    return rows;
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "L,branch,p_at_L\n";
    for (const auto& r : rows) {
        out += format_double(r.L);
        out += ',';
        out += to_string(r.branch);
        out += ',';
        out += format_double(r.p_at_L);
        out += '\n';
    }
    return out;
}

inline const char* k_format_help =
    "Artifact formats\n"
    "================\n"
    "profiles CSV   header `x,p,class,label`; one block of rows per solution,\n"
    "               blocks separated by a blank line; class is SD, SI, non-SM\n"
    "               or constant.\n"
    "trajectory CSV header `t,x,p` for the scalar equation, or\n"
    "               `t,x,n_i,n_u,p_eps` for the two-species system; one row\n"
    "               per grid node per recorded time.\n"
    "sweep CSV      header `L,branch,p_at_L`; one row per boundary-value root\n"
    "               per half-length; L ascending.\n"
    "epsilon CSV    header `epsilon,l2_error,linf_error`.\n"
    "report JSON    {model:{...}, env:{L,D,p_ext}, landmarks:{theta,alpha1,\n"
    "               alpha2,beta}, thresholds:{M_d,M_i,M_star,D_star}, lambda1,\n"
    "               solutions:[{class,label,p_at_L,p_at_0,verdict,mu1}]}.\n"
    "               Thresholds are numbers, or the strings \"0\" / \"inf\".\n"
    "               D_star appears only for p_ext > beta; lambda1 and\n"
    "               solutions appear when --L is given; mu1 comes from the\n"
    "               stability command.\n"
    "Floats use the shortest representation that round-trips exactly, so\n"
    "re-running a command reproduces artifacts byte for byte.\n";

// Front end: parses one subcommand, runs it, writes declared artifacts
// atomically. Returns 0, or 2 on validation errors, or 3 on numerical failure.
inline int run_command(std::vector<std::string> args) {
    CLI::App app{"steady states and dynamics of a bistable reaction-diffusion "
                 "equation with Robin boundary conditions"};
    app.require_subcommand(0, 1);
    app.set_config("--config", "", "key=value option file; flags take precedence");
    app.allow_config_extras(false);

    bool help_formats = false;
    app.add_flag("--help-formats", help_formats, "describe the artifact file formats");

    Scenario sc;
    std::string preset;
    auto add_model_opts = [&](CLI::App* cmd) {
        cmd->add_option("--model", sc.model_kind, "wolbachia or cubic")
            ->check(CLI::IsMember({"wolbachia", "cubic"}));
        cmd->add_option("--preset", preset, "table1 loads the mosquito parameters exactly, overriding --bu and friends")
            ->check(CLI::IsMember({"table1"}));
        cmd->add_option("--bu", sc.params.b_u, "uninfected birth rate (1/day)");
        cmd->add_option("--du", sc.params.d_u, "uninfected death rate (1/day)");
        cmd->add_option("--delta", sc.params.delta, "lifespan reduction factor");
        cmd->add_option("--sf", sc.params.s_f, "fecundity decrease");
        cmd->add_option("--sh", sc.params.s_h, "CI hatching failure fraction");
        cmd->add_option("--K", sc.params.K, "carrying capacity");
        cmd->add_option("--sigma", sc.sigma, "accepted for compatibility; unused");
        cmd->add_option("--theta", sc.cubic_theta, "interior zero of the cubic model");
        cmd->add_option("--pext", sc.p_ext, "exterior proportion")->required();
        cmd->add_option("--D", sc.D, "migration rate")->required();
    };
    double L_val = 0.0;
    auto add_L = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--L", L_val, "half-length of the domain");
        if (required) opt->required();
        return opt;
    };

    std::string out_path;
    int n_grid = 1001;
    unsigned jobs = 1;

    auto* analyze = app.add_subcommand(
        "analyze", "landmarks and existence thresholds, plus the solution census "
                   "when --L is given");
    add_model_opts(analyze);
    auto* analyze_L = add_L(analyze, false);
    analyze->add_option("-o,--output", out_path, "report JSON path")->required();
    analyze->add_option("--ngrid", n_grid, "profile grid size");

    auto* steady_cmd =
        app.add_subcommand("steady", "solve and sample the steady-state profiles");
    add_model_opts(steady_cmd);
    add_L(steady_cmd, true);
    std::string cls_filter = "all";
    steady_cmd->add_option("--class", cls_filter, "all, sd, si, nonsm or constant")
        ->check(CLI::IsMember({"all", "sd", "si", "nonsm", "constant"}));
    steady_cmd->add_option("--ngrid", n_grid, "profile grid size");
    steady_cmd->add_option("-o,--output", out_path, "profiles CSV path")->required();

    auto* stab = app.add_subcommand(
        "stability", "solution census with verdicts and the linearization oracle");
    add_model_opts(stab);
    add_L(stab, true);
    stab->add_option("--ngrid", n_grid, "profile grid size");
    stab->add_option("-o,--output", out_path, "report JSON path")->required();

    auto* sim = app.add_subcommand("simulate", "integrate the evolution problem");
    add_model_opts(sim);
    add_L(sim, true);
    double p_init_const = 0.5;
    bool system_run = false;
    double epsilon = 0.1;
    SimConfig sim_cfg;
    std::string snapshots = "";
    sim->add_option("--pinit", p_init_const, "constant initial proportion");
    sim->add_flag("--system", system_run, "run the two-species system instead");
    sim->add_option("--epsilon", epsilon, "fecundity scale of the system");
    sim->add_option("--dx", sim_cfg.dx, "grid spacing (default L/200)");
    sim->add_option("--dt", sim_cfg.dt, "time step (default reaction-limited)");
    sim->add_option("--tmax", sim_cfg.t_max, "time horizon (days)");
    sim->add_option("--snapshots", snapshots, "comma list of record times");
    sim->add_option("-o,--output", out_path, "trajectory CSV path")->required();

    auto* sweep = app.add_subcommand("sweep", "boundary values against the half-length");
    add_model_opts(sweep);
    double L_min = 0.1, L_max = 10.0;
    int n_points = 10;
    sweep->add_option("--Lmin", L_min, "first half-length")->required();
    sweep->add_option("--Lmax", L_max, "last half-length")->required();
    sweep->add_option("--n", n_points, "number of half-lengths")->required();
    sweep->add_option("--jobs", jobs, "parallel workers");
    sweep->add_option("-o,--output", out_path, "sweep CSV path")->required();

    auto* eps_cmd = app.add_subcommand(
        "epsilon-study", "two-species proportion against the scalar limit");
    add_model_opts(eps_cmd);
    add_L(eps_cmd, true);
    std::string eps_list_str = "0.1,0.05,0.01";
    eps_cmd->add_option("--eps", eps_list_str, "comma list, decreasing");
    eps_cmd->add_option("--dx", sim_cfg.dx, "grid spacing (default L/200)");
    eps_cmd->add_option("--dt", sim_cfg.dt, "time step cap");
    eps_cmd->add_option("--tmax", sim_cfg.t_max, "comparison time (days)");
    eps_cmd->add_option("--jobs", jobs, "parallel workers");
    eps_cmd->add_option("-o,--output", out_path, "study CSV path")->required();

    args.insert(args.begin(), "robinrd");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (help_formats) {
        std::cout << k_format_help;
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << "error: no subcommand given (see --help)\n";
        return 2;
    }

    try {
        if (preset == "table1") {
            sc.params = WolbachiaParams{}; // the defaults are the table values
            sc.model_kind = "wolbachia";
        }
        sc.L = L_val;
        if (analyze->parsed() && analyze_L->count() == 0) sc.L.reset();

        if (analyze->parsed() || stab->parsed()) {
            const bool with_solutions = stab->parsed() || sc.L.has_value();
            const nlohmann::json j =
                build_report(sc, with_solutions, stab->parsed(), n_grid);
            write_atomic(out_path, j.dump(2) + "\n");
            std::cout << "wrote " << out_path << " ("
                      << (j.contains("solutions") ? j["solutions"].size() : 0)
                      << " solutions)\n";
        } else if (steady_cmd->parsed()) {
            const ReactionModel model = sc.model();
            const BoundaryEnv env = sc.env();
            std::vector<SteadyProfile> profs = compute_all_steady_states(model, env, n_grid);
            if (cls_filter != "all") {
                const ProfileClass want = cls_filter == "sd"  ? ProfileClass::SD
                                          : cls_filter == "si" ? ProfileClass::SI
                                          : cls_filter == "nonsm" ? ProfileClass::NonSM
                                                                  : ProfileClass::Constant;
                std::erase_if(profs, [&](const SteadyProfile& p) { return p.cls != want; });
            }
            write_atomic(out_path, profiles_to_csv(profs));
            std::cout << "wrote " << out_path << " (" << profs.size() << " profiles)\n";
        } else if (sim->parsed()) {
            const BoundaryEnv env = sc.env();
            sim_cfg.snapshot_times = detail::parse_list(snapshots);
            if (sim_cfg.snapshot_times.empty())
                sim_cfg.snapshot_times = {10, 20, 40, 60, 100};
            Trajectory tr;
            if (system_run) {
                SystemConfig sys = make_balanced_system(sc.params, epsilon, sc.p_ext);
                if (p_init_const != 0.5) {
                    const double K = sc.params.K;
                    sys.n_i_init = [=](double) { return p_init_const * K; };
                    sys.n_u_init = [=](double) { return (1.0 - p_init_const) * K; };
                }
                tr = simulate_system(sys, env, sim_cfg);
            } else {
                const ReactionModel model = sc.model();
                const auto g = robinrd::detail::make_grid(env, sim_cfg.dx);
                std::vector<double> init(g.x.size(), p_init_const);
                tr = simulate_scalar(model, env, init, sim_cfg);
            }
            write_atomic(out_path, trajectory_to_csv(tr, system_run));
            std::cout << "wrote " << out_path << " (" << tr.times.size()
                      << " snapshots)\n";
        } else if (sweep->parsed()) {
            const ReactionModel model = sc.model();
            const auto rows =
                sweep_bifurcation(model, sc.p_ext, sc.D, L_min, L_max, n_points, jobs);
            write_atomic(out_path, sweep_to_csv(rows));
            std::cout << "wrote " << out_path << " (" << rows.size() << " rows)\n";
        } else if (eps_cmd->parsed()) {
            const BoundaryEnv env = sc.env();
            const SystemConfig sys = make_balanced_system(sc.params, 0.1, sc.p_ext);
            const std::vector<double> eps_list = detail::parse_list(eps_list_str);
            const auto rows = epsilon_convergence_study(sys, env, sim_cfg, eps_list);
            std::string out = "epsilon,l2_error,linf_error\n";
            for (const auto& r : rows)
                out += format_double(r.epsilon) + "," + format_double(r.l2_error) + "," +
                       format_double(r.linf_error) + "\n";
            write_atomic(out_path, out);
            std::cout << "wrote " << out_path << " (" << rows.size() << " rows)\n";
        }
    } catch (const invalid_input& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const numerical_error& ex) {
        std::cerr << "numerical failure: " << ex.what() << "\n";
        return 3;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace robinrd::cli
