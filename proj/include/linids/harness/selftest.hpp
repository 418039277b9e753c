#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "linids/core.hpp"
#include "linids/estimator.hpp"
#include "linids/harness/runner.hpp"
#include "linids/ids.hpp"
#include "linids/lowerbound.hpp"
#include "linids/rng.hpp"

namespace linids::harness {

namespace detail {

inline bool selftest_estimator() {
    RngStream rng(7, 0);
    const Eigen::Index d = 4;
    EstimatorState est = init_estimator(d, 0.5);
    Matrix v = Matrix::Identity(d, d);
    Vector b = Vector::Zero(d);
    for (int i = 0; i < 200; ++i) {
        const Vector x = sample_unit_sphere(d, rng);
        const double y = rng.normal();
        update_in_place(est, x, y);
        v += x * x.transpose() / 0.25;
        b += x * y / 0.25;
    }
    const Vector theta = v.ldlt().solve(b);
    return (est.theta_hat - theta).norm() <= 1e-8 * std::max(1.0, theta.norm()) &&
           std::abs(est.logdet - std::log(v.determinant())) <= 1e-8 * std::max(1.0, est.logdet);
}

inline bool selftest_ids_invariants(InfoGainKind kind) {
    const Instance inst = make_eoo_instance(0.01, std::sqrt(0.1));
    IdsOptions o;
    o.variant.kind = kind;
    IdsAlgoState st = init_ids(inst, o);
    RngStream policy(11, 2), noise(11, 1);
    for (int t = 0; t < 2000; ++t) {
        if (!st.last_round || st.last_round->local_s != st.local_s) {
            st.last_round = compute_ids_round(st.estimator, inst, st.options, st.local_s);
            if (!check_round_invariants(*st.last_round, st.estimator, inst, st.options, &inst.theta_star()).empty())
                return false;
        }
        ids_step(st, inst, policy, noise);
    }
    return true;
}

inline bool selftest_lower_bound() {
    Matrix a(2, 2);
    a << 1, 0, 0, 1;
    Vector th(2);
    th << 1, 0.5;
    const Instance inst(a, th, 1.0, "orthonormal");
    const auto sol = solve_cstar(inst);
    return std::abs(sol.cost - 4.0) <= 0.08 && sol.min_constraint >= 1.0 - 1e-6;
}

inline bool selftest_determinism() {
    ExperimentConfig c;
    c.instance.type = InstanceType::random;
    c.instance.d = 2;
    c.instance.k = 4;
    c.instance.noise_std = 0.3;
    AlgorithmSpec ids;
    ids.name = "ids";
    AlgorithmSpec ts;
    ts.name = "ts";
    ts.kind = AlgorithmKind::thompson;
    c.algorithms = {ids, ts};
    c.horizon = 300;
    c.repetitions = 3;
    c.base_seed = 5;
    const auto a = run_experiment(c, {false, 1}, false);
    const auto b = run_experiment(c, {false, 3}, false);
    for (std::size_t i = 0; i < a.traces.size(); ++i)
        if (a.traces[i].failed || trace_csv(a.traces[i]) != trace_csv(b.traces[i]))
            return false;
    return true;
}

} // namespace detail

/// Quick invariant battery; prints one line per check and returns overall success.
inline bool run_selftest(std::ostream& out) {
    const std::vector<std::pair<std::string, std::function<bool()>>> checks = {
        {"estimator matches batch ridge solve", detail::selftest_estimator},
        {"ids round invariants (H) on eoo", [] { return detail::selftest_ids_invariants(InfoGainKind::H); }},
        {"ids round invariants (H_UCB) on eoo", [] { return detail::selftest_ids_invariants(InfoGainKind::H_UCB); }},
        {"lower bound on orthonormal pair", detail::selftest_lower_bound},
        {"thread-count independent traces", detail::selftest_determinism},
    };
    bool all = true;
    for (const auto& [name, fn] : checks) {
        bool ok = false;
        std::string note;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            note = std::string(" (") + e.what() + ")";
        }
        out << (ok ? "PASS " : "FAIL ") << name << note << '\n';
        all = all && ok;
    }
    return all;
}

} // namespace linids::harness
