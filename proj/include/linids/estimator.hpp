#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "linids/core.hpp"
#include "linids/errors.hpp"

namespace linids {

/// Noise scale used for whitening. A noiseless instance is treated as unit
/// variance so that the confidence machinery stays well defined.
inline double effective_noise_scale(double noise_std) noexcept { return noise_std > 0.0 ? noise_std : 1.0; }

/**
 * Regularized least-squares sufficient statistics in whitened coordinates.
 *
 * Every observation (x, y) is absorbed as (x / sigma, y / sigma), so
 * precision = I + sigma^-2 sum x x^T and theta_hat is the matching ridge
 * estimate of theta. `step` is 1-based: it counts absorbed observations + 1.
 */
struct EstimatorState {
    std::size_t dim = 0;
    std::size_t step = 1;
    double noise_scale = 1.0;
    Matrix precision;
    Matrix precision_inv;
    double logdet = 0.0;
    Vector data_sum;
    Vector theta_hat;
};

inline EstimatorState init_estimator(std::size_t d, double noise_std = 1.0) {
    if (d == 0)
        throw std::invalid_argument("estimator dimension must be positive");
    const auto n = static_cast<Eigen::Index>(d);
    EstimatorState s;
    s.dim = d;
    s.noise_scale = effective_noise_scale(noise_std);
    s.precision = Matrix::Identity(n, n);
    s.precision_inv = Matrix::Identity(n, n);
    s.data_sum = Vector::Zero(n);
    s.theta_hat = Vector::Zero(n);
    return s;
}

/// Rebuilds inverse, log-determinant and estimate from the precision matrix.
inline void refresh_from_precision(EstimatorState& s) {
    Eigen::LLT<Matrix> llt(s.precision);
    if (llt.info() != Eigen::Success)
        throw NumericalError("precision matrix lost positive definiteness");
    const auto n = static_cast<Eigen::Index>(s.dim);
    s.precision_inv = llt.solve(Matrix::Identity(n, n));
    s.precision_inv = 0.5 * (s.precision_inv + s.precision_inv.transpose());
    s.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    s.theta_hat = s.precision_inv * s.data_sum;
}

/// Rank-one Sherman-Morrison update with the whitened pair (x/sigma, y/sigma).
inline void update_in_place(EstimatorState& s, const Eigen::Ref<const Vector>& x, double y) {
    if (static_cast<std::size_t>(x.size()) != s.dim)
        throw std::invalid_argument("observation dimension mismatch");
    if (!x.allFinite() || !std::isfinite(y))
        throw std::invalid_argument("non-finite observation");

    const double inv_sigma = 1.0 / s.noise_scale;
    const Vector xw = x * inv_sigma;
    const double yw = y * inv_sigma;
    const Vector u = s.precision_inv * xw;
    const double denom = 1.0 + xw.dot(u);
    if (!(denom > 0.0) || !std::isfinite(denom))
        throw NumericalError("rank-one update would make the precision indefinite", denom);

    const double residual = yw - xw.dot(s.theta_hat);
    s.precision.noalias() += xw * xw.transpose();
    s.precision_inv.noalias() -= (u * u.transpose()) / denom;
    s.precision_inv = 0.5 * (s.precision_inv + s.precision_inv.transpose());
    s.logdet += std::log(denom);
    s.data_sum.noalias() += xw * yw;
    s.theta_hat.noalias() += u * (residual / denom);
    ++s.step;

    // Long runs (10^6 updates) accumulate rounding in the recursions.
    if ((s.step & 0xfff) == 0)
        refresh_from_precision(s);
}

inline EstimatorState update(EstimatorState s, const Eigen::Ref<const Vector>& x, double y) {
    update_in_place(s, x, y);
    return s;
}

/// sqrt(v^T V v), or sqrt(v^T V^-1 v) with `inverse` set.
inline double weighted_norm(const EstimatorState& s, const Eigen::Ref<const Vector>& v, bool inverse) {
    if (static_cast<std::size_t>(v.size()) != s.dim)
        throw std::invalid_argument("vector dimension mismatch");
    const Matrix& m = inverse ? s.precision_inv : s.precision;
    return std::sqrt(std::max(0.0, v.dot(m * v)));
}

enum class BetaMode { logdet, simplified, fixed };

struct BetaSpec {
    BetaMode mode = BetaMode::logdet;
    std::optional<double> fixed_value;

    static BetaSpec logdet() { return {}; }
    static BetaSpec simplified() { return {BetaMode::simplified, std::nullopt}; }
    static BetaSpec fixed(double value) {
        if (!(value > 0.0))
            throw std::invalid_argument("fixed beta must be positive");
        return {BetaMode::fixed, value};
    }

    void validate() const {
        if (mode == BetaMode::fixed && !(fixed_value && *fixed_value > 0.0))
            throw std::invalid_argument("fixed beta mode requires a positive value");
    }
};

/**
 * Concentration coefficient in reward units.
 *
 *  - logdet:     sigma^2 (sqrt(2 log delta^-1 + log det V) + 1)^2
 *  - simplified: sigma^2 (2 log t + d log log t), t = `global_t` (>= 3)
 *  - fixed:      the configured value
 *
 * Algorithms working in whitened coordinates use `whitened_beta`, which
 * divides by sigma^2.
 */
inline double beta(const EstimatorState& s, const BetaSpec& spec, double delta_inv, double noise_std,
                   std::optional<double> global_t = std::nullopt) {
    if (!(delta_inv >= 1.0))
        throw std::invalid_argument("delta_inv must be at least 1");
    const double sigma = effective_noise_scale(noise_std);
    const double sigma2 = sigma * sigma;
    switch (spec.mode) {
    case BetaMode::logdet: {
        const double root = std::sqrt(std::max(0.0, 2.0 * std::log(delta_inv) + s.logdet)) + 1.0;
        return sigma2 * root * root;
    }
    case BetaMode::simplified: {
        if (!global_t || *global_t < 3.0)
            throw std::invalid_argument("simplified beta needs global_t >= 3");
        const double t = *global_t;
        return sigma2 * (2.0 * std::log(t) + static_cast<double>(s.dim) * std::log(std::log(t)));
    }
    case BetaMode::fixed:
        spec.validate();
        return *spec.fixed_value;
    }
    return 0.0;
}

inline double whitened_beta(const EstimatorState& s, const BetaSpec& spec, double delta_inv,
                            std::optional<double> global_t = std::nullopt) {
    const double sigma2 = s.noise_scale * s.noise_scale;
    return beta(s, spec, delta_inv, s.noise_scale, global_t) / sigma2;
}

} // namespace linids
