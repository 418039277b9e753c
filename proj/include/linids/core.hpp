#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "linids/rng.hpp"

namespace linids {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Numerical rank of a k x d matrix, relative threshold on singular values.
inline Eigen::Index numerical_rank(const Matrix& m, double rel_tol = 1e-10) {
    if (m.size() == 0)
        return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    const double cutoff = rel_tol * std::max(1.0, sv(0));
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff)
            ++r;
    return r;
}

/// Index of the largest entry, lowest index on ties.
inline std::size_t argmax_lowest(const Vector& v) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(static_cast<Eigen::Index>(best)))
            best = static_cast<std::size_t>(i);
    return best;
}

/**
 * Ground-truth finite-armed linear bandit.
 *
 * Rows of `actions()` are the k feature vectors. The constructor rejects
 * rank-deficient action sets and instances whose best arm is not unique
 * (best two mean rewards closer than 1e-12). Diameter bounds are not
 * enforced; `diameter_warning()` reports max pairwise distance > 1.
 */
class Instance {
public:
    static constexpr double tie_tolerance = 1e-12;

    Instance(Matrix actions, Vector theta_star, double noise_std, std::string label = "custom")
        : actions_(std::move(actions)), theta_star_(std::move(theta_star)), noise_std_(noise_std),
          label_(std::move(label)) {
        if (actions_.rows() < 2)
            throw std::invalid_argument("instance needs at least two actions");
        if (actions_.cols() < 1 || actions_.cols() != theta_star_.size())
            throw std::invalid_argument("action and parameter dimensions differ");
        if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_))
            throw std::invalid_argument("noise_std must be finite and nonnegative");
        if (!actions_.allFinite() || !theta_star_.allFinite())
            throw std::invalid_argument("non-finite instance data");
        if (numerical_rank(actions_) != actions_.cols())
            throw std::invalid_argument("action set does not span R^d");

        means_ = actions_ * theta_star_;
        best_ = argmax_lowest(means_);
        for (Eigen::Index i = 0; i < means_.size(); ++i) {
            if (static_cast<std::size_t>(i) != best_ && means_(static_cast<Eigen::Index>(best_)) - means_(i) <= tie_tolerance)
                throw std::invalid_argument("best action is not unique");
        }

        for (Eigen::Index i = 0; i < actions_.rows() && !diameter_warning_; ++i)
            for (Eigen::Index j = i + 1; j < actions_.rows(); ++j)
                if ((actions_.row(i) - actions_.row(j)).norm() > 1.0 + 1e-12) {
                    diameter_warning_ = true;
                    break;
                }
    }

    const Matrix& actions() const noexcept { return actions_; }
    auto action(std::size_t i) const { return actions_.row(static_cast<Eigen::Index>(i)).transpose(); }
    const Vector& theta_star() const noexcept { return theta_star_; }
    double noise_std() const noexcept { return noise_std_; }
    const std::string& label() const noexcept { return label_; }
    std::size_t k() const noexcept { return static_cast<std::size_t>(actions_.rows()); }
    std::size_t d() const noexcept { return static_cast<std::size_t>(actions_.cols()); }

    /// Mean rewards <x, theta*> for every arm.
    const Vector& means() const noexcept { return means_; }
    std::size_t best_index() const noexcept { return best_; }
    bool diameter_warning() const noexcept { return diameter_warning_; }

private:
    Matrix actions_;
    Vector theta_star_;
    double noise_std_;
    std::string label_;
    Vector means_;
    std::size_t best_ = 0;
    bool diameter_warning_ = false;
};

struct GapProfile {
    Vector gaps;
    std::size_t best_index = 0;
    double delta_min = 0.0;
};

inline GapProfile gap_profile(const Instance& instance) {
    GapProfile p;
    p.best_index = instance.best_index();
    const double best = instance.means()(static_cast<Eigen::Index>(p.best_index));
    p.gaps = (best - instance.means().array()).matrix();
    p.gaps(static_cast<Eigen::Index>(p.best_index)) = 0.0;
    p.delta_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.gaps.size(); ++i)
        if (static_cast<std::size_t>(i) != p.best_index)
            p.delta_min = std::min(p.delta_min, p.gaps(i));
    return p;
}

/// Uniform draw on the unit sphere in R^d (normalized Gaussian vector).
inline Vector sample_unit_sphere(std::size_t d, RngStream& rng) {
    Vector v(static_cast<Eigen::Index>(d));
    double norm = 0.0;
    do {
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v(i) = rng.normal();
        norm = v.norm();
    } while (norm < 1e-300);
    return v / norm;
}

/// k arms and theta* drawn uniformly on the unit sphere. Redraws the whole
/// instance on the (probability zero) rank-deficient or tied outcomes.
inline Instance make_random_instance(std::size_t d, std::size_t k, double noise_std, RngStream& rng,
                                     std::string label = "random") {
    if (d < 1)
        throw std::invalid_argument("dimension must be at least 1");
    if (k < 2)
        throw std::invalid_argument("need at least two actions");
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Matrix actions(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < k; ++i)
            actions.row(static_cast<Eigen::Index>(i)) = sample_unit_sphere(d, rng).transpose();
        Vector theta = sample_unit_sphere(d, rng);
        try {
            return Instance(std::move(actions), std::move(theta), noise_std, label);
        } catch (const std::invalid_argument&) {
            if (k < d)
                throw;
        }
    }
    throw std::runtime_error("could not draw a valid random instance");
}

/// Three-armed 'end of optimism' instance: (1,0), (1-eps, 2 eps), (0,1) with theta* = (1,0).
inline Instance make_eoo_instance(double epsilon, double noise_std) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    Matrix actions(3, 2);
    actions << 1.0, 0.0, 1.0 - epsilon, 2.0 * epsilon, 0.0, 1.0;
    Vector theta(2);
    theta << 1.0, 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "eoo-%g", epsilon);
    return Instance(std::move(actions), std::move(theta), noise_std, buf);
}

inline double sample_reward(const Instance& instance, std::size_t arm, RngStream& rng) {
    if (arm >= instance.k())
        throw std::invalid_argument("arm index out of range");
    const double mean = instance.means()(static_cast<Eigen::Index>(arm));
    if (instance.noise_std() == 0.0)
        return mean;
    return mean + instance.noise_std() * rng.normal();
}

} // namespace linids
