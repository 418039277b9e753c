#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "linids/core.hpp"
#include "linids/harness/aggregate.hpp"
#include "linids/harness/config.hpp"
#include "linids/harness/runner.hpp"
#include "linids/harness/selftest.hpp"
#include "linids/harness/sweep.hpp"
#include "linids/lowerbound.hpp"

namespace linids::harness {

/// Value published for the end-of-optimism family, printed next to the solver's answer.
inline constexpr double published_eoo_cstar = 64.0;

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string p;
    while (std::getline(ss, p, sep))
        parts.push_back(p);
    return parts;
}

/**
 * Instance specs for `lb`:
 *   eoo:<eps>[:<sigma>]
 *   random:<d>:<k>:<seed>[:<sigma>]
 *   orthonormal            ({e1, e2}, theta* = (1, 0.5))
 *   <path>                 (JSON instance file)
 */
inline Instance parse_instance_spec(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (!parts.empty() && parts[0] == "eoo") {
        if (parts.size() < 2 || parts.size() > 3)
            throw std::invalid_argument("expected eoo:<eps>[:<sigma>]");
        return make_eoo_instance(std::stod(parts[1]), parts.size() == 3 ? std::stod(parts[2]) : 1.0);
    }
    if (!parts.empty() && parts[0] == "random") {
        if (parts.size() < 4 || parts.size() > 5)
            throw std::invalid_argument("expected random:<d>:<k>:<seed>[:<sigma>]");
        RngStream rng = derive_stream(std::stoull(parts[3]), 0, StreamPurpose::instance);
        return make_random_instance(std::stoull(parts[1]), std::stoull(parts[2]),
                                    parts.size() == 5 ? std::stod(parts[4]) : 1.0, rng, spec);
    }
    if (spec == "orthonormal") {
        Matrix a(2, 2);
        a << 1, 0, 0, 1;
        Vector th(2);
        th << 1, 0.5;
        return Instance(a, th, 1.0, "orthonormal");
    }
    return instance_from_json(read_json_file(spec));
}

inline void print_solution(std::ostream& out, const AllocationSolution& s) {
    out << s.method << ',' << format_number(s.cost) << ',' << format_number(s.min_constraint) << ','
        << format_number(s.min_constraint - 1.0) << ',' << s.iterations << ',';
    for (Eigen::Index i = 0; i < s.alpha.size(); ++i)
        out << (i ? ";" : "") << format_number(s.alpha(i));
    out << '\n';
}

inline int cmd_lb(const std::string& spec, const std::string& method, std::size_t budget, double beta_n,
                  std::ostream& out) {
    const Instance inst = parse_instance_spec(spec);
    out << "instance," << inst.label() << "\nk," << inst.k() << "\nd," << inst.d() << '\n';
    out << "method,c_star,min_constraint,constraint_slack,iterations,alpha\n";
    if (method == "subgradient" || method == "all")
        print_solution(out, solve_cstar(inst, {CstarMethod::subgradient, budget, beta_n}));
    if (method == "game" || method == "all")
        print_solution(out, solve_cstar(inst, {CstarMethod::game, budget, beta_n}));
    if (method == "brute" || method == "all") {
        if (inst.k() - 1 <= 4)
            print_solution(out, brute_force_cstar(inst));
        else if (method == "brute")
            throw std::invalid_argument("brute force oracle supports at most four suboptimal actions");
    }
    if (inst.label().rfind("eoo-", 0) == 0)
        out << "published_c_star," << format_number(published_eoo_cstar) << '\n';
    return 0;
}

} // namespace detail

/// Command-line entry point; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulation and lower-bound tools for finite-armed linear bandits", "linids"};
    app.require_subcommand(1);

    std::string config_path, dir, out_dir, spec, method = "all";
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    bool assert_mode = false;
    std::size_t budget = 100000;
    double beta_n = std::log(1e6);

    auto* run = app.add_subcommand("run", "Run an experiment config and write per-run CSVs");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    run->add_flag("--assert", assert_mode, "Check per-round invariants (IDS)");
    run->add_option("--out", out_dir, "Override output directory");

    auto* agg = app.add_subcommand("aggregate", "Write summary.csv for a directory of traces");
    agg->add_option("dir", dir, "Directory with trace CSVs")->required();

    auto* sweep = app.add_subcommand("sweep", "Run the beta x eta grid of a config");
    sweep->add_option("config", config_path, "Experiment config with a sweep section")->required();
    sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_flag("--assert", assert_mode, "Check per-round invariants (IDS)");
    sweep->add_option("--out", out_dir, "Override output directory");

    auto* lb = app.add_subcommand("lb", "Solve the asymptotic lower-bound program");
    lb->add_option("instance", spec, "eoo:<eps>[:<sigma>] | random:<d>:<k>:<seed>[:<sigma>] | orthonormal | file.json")
        ->required();
    lb->add_option("--method", method, "subgradient | game | brute | all")
        ->check(CLI::IsMember({"subgradient", "game", "brute", "all"}));
    lb->add_option("--budget", budget, "Iteration budget")->check(CLI::PositiveNumber);
    lb->add_option("--beta-n", beta_n, "Confidence level for the game method")->check(CLI::PositiveNumber);

    auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*run || *sweep) {
            ExperimentConfig c = load_config(config_path);
            if (!out_dir.empty())
                c.output_dir = out_dir;
            const RunOptions opts{assert_mode, threads};
            if (*run) {
                const auto res = run_experiment(c, opts);
                out << "wrote " << res.traces.size() - res.failures << " traces to " << c.output_dir << '\n';
                for (const auto& tr : res.traces)
                    if (tr.failed)
                        err << "run " << tr.algo << " rep " << tr.rep << " failed: " << tr.error << '\n';
                return res.failures == 0 ? 0 : 1;
            }
            const auto res = run_sweep(c, opts);
            out << sweep_csv(res);
            return res.failures == 0 ? 0 : 1;
        }
        if (*agg) {
            out << summary_csv(aggregate_directory(dir));
            return 0;
        }
        if (*lb)
            return detail::cmd_lb(spec, method, budget, beta_n, out);
        if (*selftest)
            return run_selftest(out) ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace linids::harness
