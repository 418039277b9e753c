#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "linids/baselines.hpp"
#include "linids/core.hpp"
#include "linids/errors.hpp"
#include "linids/estimator.hpp"
#include "linids/harness/config.hpp"
#include "linids/ids.hpp"
#include "linids/rng.hpp"

namespace linids::harness {

// ---------------------------------------------------------------------------
// Agents
// ---------------------------------------------------------------------------

class Agent {
public:
    virtual ~Agent() = default;
    virtual StepOutcome step(const Instance& instance, RngStream& policy_rng, RngStream& noise_rng) = 0;
    virtual const EstimatorState& estimator() const = 0;
};

class IdsAgent final : public Agent {
public:
    IdsAgent(const Instance& instance, IdsOptions options, bool assert_invariants)
        : state_(init_ids(instance, std::move(options))), assert_(assert_invariants) {}

    StepOutcome step(const Instance& instance, RngStream& policy_rng, RngStream& noise_rng) override {
        if (assert_ && (!state_.last_round || state_.last_round->local_s != state_.local_s)) {
            state_.last_round = compute_ids_round(state_.estimator, instance, state_.options, state_.local_s);
            state_.last_round->global_t = state_.global_t;
            const auto fails = check_round_invariants(*state_.last_round, state_.estimator, instance,
                                                      state_.options, &instance.theta_star());
            if (!fails.empty())
                throw InvariantViolation(fails.front());
        }
        return ids_step(state_, instance, policy_rng, noise_rng);
    }

    const EstimatorState& estimator() const override { return state_.estimator; }
    const IdsAlgoState& state() const { return state_; }

private:
    IdsAlgoState state_;
    bool assert_;
};

class BaselineAgent final : public Agent {
public:
    BaselineAgent(const Instance& instance, BaselineKind kind, const AlgorithmSpec& spec)
        : state_(init_baseline(instance, kind, spec.beta, spec.mc_samples)) {
        state_.fast_pairing = spec.fast_pairing;
    }

    StepOutcome step(const Instance& instance, RngStream& policy_rng, RngStream& noise_rng) override {
        return baseline_step(state_, instance, policy_rng, noise_rng);
    }

    const EstimatorState& estimator() const override { return state_.estimator; }

private:
    BaselineState state_;
};

inline std::unique_ptr<Agent> make_agent(const AlgorithmSpec& spec, const Instance& instance, bool assert_invariants) {
    switch (spec.kind) {
    case AlgorithmKind::ids: {
        IdsOptions o;
        o.variant = spec.variant;
        o.beta_spec = spec.beta;
        o.fast_pairing = spec.fast_pairing;
        o.thresholded_gaps = spec.thresholded_gaps;
        return std::make_unique<IdsAgent>(instance, o, assert_invariants);
    }
    case AlgorithmKind::linucb: return std::make_unique<BaselineAgent>(instance, BaselineKind::linucb, spec);
    case AlgorithmKind::thompson: return std::make_unique<BaselineAgent>(instance, BaselineKind::thompson, spec);
    case AlgorithmKind::bayes_ids: return std::make_unique<BaselineAgent>(instance, BaselineKind::bayes_ids, spec);
    }
    throw std::logic_error("unknown algorithm kind");
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// Geometric grid {1, 2, 4, ...} (densified to `per_octave` points per doubling) plus n.
inline std::vector<std::size_t> checkpoint_grid(std::size_t n, std::size_t per_octave = 1) {
    if (n < 1 || per_octave < 1)
        throw std::invalid_argument("checkpoint grid needs n >= 1 and per_octave >= 1");
    std::vector<std::size_t> grid;
    for (std::size_t j = 0;; ++j) {
        const double v = std::round(std::exp2(static_cast<double>(j) / static_cast<double>(per_octave)));
        const auto t = static_cast<std::size_t>(v);
        if (t >= n)
            break;
        if (grid.empty() || t > grid.back())
            grid.push_back(t);
    }
    grid.push_back(n);
    return grid;
}

struct Checkpoint {
    std::size_t t = 0;
    double cum_regret = 0.0;
    double gamma = 0.0;
    std::size_t s_t = 0;
    std::size_t exploit_rounds = 0;
    bool concentration_ok = true;
};

struct RegretTrace {
    std::string algo;
    std::string instance;
    std::uint64_t seed = 0;
    std::size_t rep = 0;
    std::vector<Checkpoint> checkpoints;
    bool failed = false;
    std::string error;
};

inline constexpr const char* csv_header = "algo,instance,seed,t,cum_regret,gamma,s_t,exploit_rounds,concentration_ok";

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string trace_csv(const RegretTrace& tr) {
    std::string out = csv_header;
    out += '\n';
    for (const Checkpoint& c : tr.checkpoints) {
        out += tr.algo + ',' + tr.instance + ',' + std::to_string(tr.seed) + ',' + std::to_string(c.t) + ',' +
               format_number(c.cum_regret) + ',' + format_number(c.gamma) + ',' + std::to_string(c.s_t) + ',' +
               std::to_string(c.exploit_rounds) + ',' + (c.concentration_ok ? "1" : "0") + '\n';
    }
    return out;
}

inline std::string trace_file_name(const std::string& algo, std::size_t rep) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_rep%03zu.csv", rep);
    return algo + buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

struct RunOptions {
    bool assert_invariants = false;
    std::size_t threads = 1;
};

/// Simulates one (algorithm, repetition) unit. Exceptions propagate.
inline RegretTrace simulate(const ExperimentConfig& config, const AlgorithmSpec& spec, std::size_t rep,
                            bool assert_invariants) {
    const Instance instance = make_instance(config, rep);
    const GapProfile gp = gap_profile(instance);
    RngStream noise_rng = derive_stream(config.base_seed, rep, StreamPurpose::noise);
    RngStream policy_rng = derive_stream(config.base_seed, rep, StreamPurpose::policy);
    std::unique_ptr<Agent> agent = make_agent(spec, instance, assert_invariants);

    RegretTrace tr;
    tr.algo = spec.name;
    tr.instance = instance.label();
    tr.seed = config.base_seed;
    tr.rep = rep;

    const auto grid = checkpoint_grid(config.horizon, config.checkpoints.per_octave);
    std::size_t next = 0;
    double regret = 0.0, gamma = 0.0;
    bool concentration = true;
    std::size_t last_step = agent->estimator().step;
    const BetaSpec theory_beta = BetaSpec::logdet();
    const Vector& theta = instance.theta_star();

    for (std::size_t t = 1; t <= config.horizon; ++t) {
        const StepOutcome out = agent->step(instance, policy_rng, noise_rng);
        regret += gp.gaps(static_cast<Eigen::Index>(out.arm));
        if (out.explored)
            gamma += out.info_gain;
        const EstimatorState& est = agent->estimator();
        if (est.step != last_step) {
            last_step = est.step;
            if (concentration) {
                const Vector err = est.theta_hat - theta;
                const double s = static_cast<double>(est.step);
                concentration = err.dot(est.precision * err) <= whitened_beta(est, theory_beta, s * s);
            }
        }
        if (t == grid[next]) {
            Checkpoint c;
            c.t = t;
            c.cum_regret = regret;
            c.gamma = gamma;
            c.s_t = est.step - 1;
            c.exploit_rounds = t - c.s_t;
            c.concentration_ok = concentration;
            tr.checkpoints.push_back(c);
            ++next;
        }
    }
    return tr;
}

/// Runs `task(i)` for i in [0, count) on up to `threads` workers.
template <class Task>
void parallel_for(std::size_t count, std::size_t threads, Task&& task) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
                task(i);
        });
    for (auto& th : pool)
        th.join();
}

struct ExperimentResult {
    std::vector<RegretTrace> traces; // algorithm-major order
    std::filesystem::path output_dir;
    std::size_t failures = 0;
};

inline std::string manifest_json(const ExperimentConfig& config, const ExperimentResult& res) {
    json m;
    m["library_version"] = library_version;
    m["config_hash"] = hex64(fnv1a(config.canonical));
    m["horizon"] = config.horizon;
    m["repetitions"] = config.repetitions;
    m["base_seed"] = config.base_seed;
    m["runs"] = json::array();
    for (const RegretTrace& tr : res.traces) {
        json r;
        r["algo"] = tr.algo;
        r["rep"] = tr.rep;
        r["instance"] = tr.instance;
        r["seed"] = tr.seed;
        r["status"] = tr.failed ? "failed" : "ok";
        if (tr.failed)
            r["error"] = tr.error;
        else
            r["file"] = trace_file_name(tr.algo, tr.rep);
        m["runs"].push_back(r);
    }
    return m.dump(2) + "\n";
}

/**
 * Runs every (algorithm, repetition) unit and writes one CSV per run plus
 * manifest.json into the output directory. A failing unit is recorded as
 * failed in the manifest and does not affect the others.
 */
using UnitRunner = std::function<RegretTrace(const ExperimentConfig&, const AlgorithmSpec&, std::size_t, bool)>;

inline ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opts = {},
                                       bool write_files = true, const UnitRunner& runner = simulate) {
    config.validate();
    ExperimentResult res;
    res.output_dir = config.output_dir;
    if (write_files) {
        std::error_code ec;
        std::filesystem::create_directories(res.output_dir, ec);
        if (ec || !std::filesystem::is_directory(res.output_dir))
            throw std::runtime_error("cannot create output directory '" + config.output_dir + "'");
    }

    const std::size_t reps = config.repetitions;
    res.traces.resize(config.algorithms.size() * reps);
    parallel_for(res.traces.size(), opts.threads, [&](std::size_t unit) {
        const AlgorithmSpec& spec = config.algorithms[unit / reps];
        const std::size_t rep = unit % reps;
        RegretTrace& tr = res.traces[unit];
        try {
            tr = runner(config, spec, rep, opts.assert_invariants);
        } catch (const std::exception& e) {
            tr = RegretTrace{};
            tr.algo = spec.name;
            tr.seed = config.base_seed;
            tr.rep = rep;
            tr.failed = true;
            tr.error = e.what();
        }
    });

    for (const RegretTrace& tr : res.traces)
        res.failures += tr.failed ? 1 : 0;
    if (write_files) {
        for (const RegretTrace& tr : res.traces)
            if (!tr.failed)
                write_text_file(res.output_dir / trace_file_name(tr.algo, tr.rep), trace_csv(tr));
        write_text_file(res.output_dir / "manifest.json", manifest_json(config, res));
    }
    return res;
}

} // namespace linids::harness
