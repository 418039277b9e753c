#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "linids/core.hpp"
#include "linids/errors.hpp"
#include "linids/estimator.hpp"
#include "linids/ids.hpp"
#include "linids/rng.hpp"

namespace linids {

enum class BaselineKind { linucb, thompson, bayes_ids };

/// Shared state of the baselines. Every observation is absorbed; there is no
/// exploration/exploitation split.
struct BaselineState {
    EstimatorState estimator;
    std::size_t global_t = 1;
    BaselineKind kind = BaselineKind::linucb;
    std::size_t mc_samples = 10000;
    BetaSpec beta_spec;
    bool fast_pairing = false;
};

inline BaselineState init_baseline(const Instance& instance, BaselineKind kind, BetaSpec beta_spec = {},
                                   std::size_t mc_samples = 10000) {
    beta_spec.validate();
    if (kind == BaselineKind::bayes_ids && mc_samples < 100)
        throw std::invalid_argument("bayes_ids needs at least 100 posterior samples");
    BaselineState s;
    s.estimator = init_estimator(instance.d(), instance.noise_std());
    s.kind = kind;
    s.mc_samples = mc_samples;
    s.beta_spec = beta_spec;
    return s;
}

namespace detail {

inline StepOutcome observe(BaselineState& state, const Instance& instance, std::size_t arm, RngStream& noise_rng) {
    StepOutcome out;
    out.arm = arm;
    out.reward = sample_reward(instance, arm, noise_rng);
    update_in_place(state.estimator, instance.action(arm), out.reward);
    ++state.global_t;
    return out;
}

/// Lower Cholesky factor of the posterior covariance V^-1.
inline Matrix posterior_factor(const EstimatorState& est) {
    Eigen::LLT<Matrix> llt(est.precision_inv);
    if (llt.info() != Eigen::Success)
        throw NumericalError("posterior covariance is not positive definite");
    return llt.matrixL();
}

} // namespace detail

/// Optimistic action with the confidence coefficient at delta^-1 = t^2.
inline StepOutcome linucb_step(BaselineState& state, const Instance& instance, RngStream& noise_rng) {
    const double t = static_cast<double>(state.global_t);
    const double b = whitened_beta(state.estimator, state.beta_spec, t * t, std::max(3.0, t));
    return detail::observe(state, instance, ucb_action(state.estimator, instance, b), noise_rng);
}

/// Draw from N(theta_hat, V^-1) (same whitened ridge model as the estimator).
inline Vector sample_posterior(const EstimatorState& est, RngStream& rng) {
    const Matrix l = detail::posterior_factor(est);
    Vector z(static_cast<Eigen::Index>(est.dim));
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z(i) = rng.normal();
    return est.theta_hat + l * z;
}

inline StepOutcome thompson_step(BaselineState& state, const Instance& instance, RngStream& policy_rng,
                                 RngStream& noise_rng) {
    const Vector theta = sample_posterior(state.estimator, policy_rng);
    return detail::observe(state, instance, argmax_lowest(instance.actions() * theta), noise_rng);
}

/// Monte-Carlo posterior summaries used by Bayesian IDS.
struct BayesIdsEstimate {
    Vector q;                      // fraction of samples whose argmax is z
    std::vector<Vector> cell_mean; // mean of samples in each cell (zero when empty)
    Vector mean;                   // overall sample mean
    Vector gaps;                   // E[max_z <z,theta> - <x,theta>]
    Vector info;                   // variance-based information gain
};

/// Statistics from explicit posterior samples (rows of `samples`).
inline BayesIdsEstimate bayes_statistics(const Matrix& samples, const Matrix& actions) {
    const auto m = samples.rows();
    const auto k = actions.rows();
    const auto d = actions.cols();
    if (m == 0 || samples.cols() != d)
        throw std::invalid_argument("bayes_statistics: bad sample matrix");

    BayesIdsEstimate e;
    e.q = Vector::Zero(k);
    e.cell_mean.assign(static_cast<std::size_t>(k), Vector::Zero(d));
    e.mean = Vector::Zero(d);
    e.gaps = Vector::Zero(k);

    const Matrix values = samples * actions.transpose(); // m x k
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index x = 1; x < k; ++x)
            if (values(i, x) > values(i, best))
                best = x;
        e.q(best) += 1.0;
        e.cell_mean[static_cast<std::size_t>(best)] += samples.row(i).transpose();
        e.gaps += (values(i, best) - values.row(i).array()).matrix().transpose();
    }
    e.mean = samples.colwise().mean().transpose();
    e.gaps /= static_cast<double>(m);
    for (Eigen::Index z = 0; z < k; ++z)
        if (e.q(z) > 0.0)
            e.cell_mean[static_cast<std::size_t>(z)] /= e.q(z);
    e.q /= static_cast<double>(m);

    e.info = Vector::Zero(k);
    for (Eigen::Index z = 0; z < k; ++z) {
        if (e.q(z) == 0.0)
            continue;
        const Vector proj = actions * (e.cell_mean[static_cast<std::size_t>(z)] - e.mean);
        e.info += e.q(z) * proj.cwiseAbs2();
    }
    return e;
}

inline BayesIdsEstimate bayes_ids_estimate(const EstimatorState& est, const Matrix& actions, std::size_t mc_samples,
                                           RngStream& rng) {
    const Matrix l = detail::posterior_factor(est);
    const auto d = static_cast<Eigen::Index>(est.dim);
    Matrix z(static_cast<Eigen::Index>(mc_samples), d);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            z(i, j) = rng.normal();
    Matrix samples = z * l.transpose();
    samples.rowwise() += est.theta_hat.transpose();
    return bayes_statistics(samples, actions);
}

struct BayesIdsDiagnostics {
    BayesIdsEstimate estimate;
    ActionDistribution mu;
    double psi = 0.0;
    bool fallback = false;
};

/**
 * Approximate Bayesian IDS with the variance-based information gain.
 * Falls back to the posterior-favored action when every I^VAR vanishes.
 */
inline StepOutcome bayes_ids_step(BaselineState& state, const Instance& instance, RngStream& policy_rng,
                                  RngStream& noise_rng, BayesIdsDiagnostics* diagnostics = nullptr) {
    BayesIdsDiagnostics diag;
    diag.estimate = bayes_ids_estimate(state.estimator, instance.actions(), state.mc_samples, policy_rng);
    const BayesIdsEstimate& e = diag.estimate;
    std::size_t arm = 0;
    if (!(e.info.maxCoeff() > 0.0)) {
        diag.fallback = true;
        arm = argmax_lowest(e.q);
        diag.mu = ActionDistribution::point(arm);
    } else {
        const std::size_t hat_x = best_empirical_action(state.estimator, instance);
        const IdsChoice choice = ids_distribution(e.gaps, e.info, hat_x, state.fast_pairing);
        diag.mu = choice.mu;
        diag.psi = choice.psi;
        arm = diag.mu.sample(policy_rng);
    }
    StepOutcome out = detail::observe(state, instance, arm, noise_rng);
    out.info_gain = e.info(static_cast<Eigen::Index>(arm));
    if (diagnostics)
        *diagnostics = std::move(diag);
    return out;
}

inline StepOutcome baseline_step(BaselineState& state, const Instance& instance, RngStream& policy_rng,
                                 RngStream& noise_rng) {
    switch (state.kind) {
    case BaselineKind::linucb: return linucb_step(state, instance, noise_rng);
    case BaselineKind::thompson: return thompson_step(state, instance, policy_rng, noise_rng);
    case BaselineKind::bayes_ids: return bayes_ids_step(state, instance, policy_rng, noise_rng);
    }
    throw std::logic_error("unknown baseline");
}

} // namespace linids
