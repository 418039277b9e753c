#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "linids/harness/config.hpp"
#include "linids/harness/runner.hpp"

namespace linids::harness {

struct SweepResult {
    std::vector<std::string> beta_labels;
    std::vector<std::string> eta_labels;
    Matrix mean_final_regret; // rows: beta, cols: eta
    std::size_t failures = 0;
};

/// Matrix layout: header `beta\eta,<eta...>`, one row per beta value.
inline std::string sweep_csv(const SweepResult& r) {
    std::string out = "beta\\eta";
    for (const auto& e : r.eta_labels)
        out += ',' + e;
    out += '\n';
    for (std::size_t b = 0; b < r.beta_labels.size(); ++b) {
        out += r.beta_labels[b];
        for (std::size_t e = 0; e < r.eta_labels.size(); ++e)
            out += ',' + format_number(r.mean_final_regret(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e)));
        out += '\n';
    }
    return out;
}

/// Algorithm spec of one sweep cell.
inline AlgorithmSpec sweep_cell_spec(const AlgorithmSpec& base, const BetaSpec& beta, const std::optional<double>& eta) {
    AlgorithmSpec a = base;
    a.beta = beta;
    if (eta) {
        a.variant.learning_rate_mode = LearningRateMode::fixed;
        a.variant.fixed_eta = eta;
    } else {
        a.variant.learning_rate_mode = LearningRateMode::automatic;
        a.variant.fixed_eta.reset();
    }
    return a;
}

/**
 * Final-regret mean for every (beta, eta) cell, using the first algorithm of
 * the config as the template. Every cell reuses the repetition seeds of the
 * config, so a cell's value depends only on its (beta, eta) pair.
 */
inline SweepResult run_sweep(const ExperimentConfig& config, const RunOptions& opts = {}, bool write_files = true) {
    config.validate();
    if (!config.sweep)
        throw std::invalid_argument("config has no sweep section");
    const SweepSpec& s = *config.sweep;
    if (s.beta.empty() || s.eta.empty())
        throw std::invalid_argument("sweep grids must be nonempty");
    const AlgorithmSpec& base = config.algorithms.front();
    if (base.kind != AlgorithmKind::ids)
        throw std::invalid_argument("sweep template algorithm must be of kind ids");

    const std::size_t nb = s.beta.size(), ne = s.eta.size(), reps = config.repetitions;
    std::vector<double> finals(nb * ne * reps, 0.0);
    std::vector<char> failed(finals.size(), 0);
    parallel_for(finals.size(), opts.threads, [&](std::size_t unit) {
        const std::size_t cell = unit / reps, rep = unit % reps;
        const AlgorithmSpec spec = sweep_cell_spec(base, s.beta[cell / ne], s.eta[cell % ne]);
        try {
            finals[unit] = simulate(config, spec, rep, opts.assert_invariants).checkpoints.back().cum_regret;
        } catch (const std::exception&) {
            failed[unit] = 1;
        }
    });

    SweepResult res;
    res.beta_labels = s.beta_labels;
    res.eta_labels = s.eta_labels;
    res.mean_final_regret = Matrix::Constant(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(ne),
                                             std::numeric_limits<double>::quiet_NaN());
    for (std::size_t cell = 0; cell < nb * ne; ++cell) {
        double sum = 0.0;
        std::size_t ok = 0;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const std::size_t unit = cell * reps + rep;
            if (failed[unit]) {
                ++res.failures;
                continue;
            }
            sum += finals[unit];
            ++ok;
        }
        if (ok > 0)
            res.mean_final_regret(static_cast<Eigen::Index>(cell / ne), static_cast<Eigen::Index>(cell % ne)) =
                sum / static_cast<double>(ok);
    }

    if (write_files) {
        std::error_code ec;
        std::filesystem::create_directories(config.output_dir, ec);
        if (ec || !std::filesystem::is_directory(config.output_dir))
            throw std::runtime_error("cannot create output directory '" + config.output_dir + "'");
        write_text_file(std::filesystem::path(config.output_dir) / "sweep.csv", sweep_csv(res));
    }
    return res;
}

} // namespace linids::harness
