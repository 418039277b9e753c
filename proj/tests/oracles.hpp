#pragma once

// Independent reference computations used only by the tests. Nothing here
// shares code with the library beyond the Eigen types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Batch {
    Mat v;
    Vec theta;
    double logdet = 0.0;
};

/// From-scratch ridge solve with whitened observations.
inline Batch batch_ridge(const std::vector<Vec>& xs, const std::vector<double>& ys, double sigma) {
    const auto d = xs.front().size();
    Batch b;
    b.v = Mat::Identity(d, d);
    Vec rhs = Vec::Zero(d);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        b.v += xs[i] * xs[i].transpose() / (sigma * sigma);
        rhs += xs[i] * ys[i] / (sigma * sigma);
    }
    Eigen::FullPivLU<Mat> lu(b.v);
    b.theta = lu.solve(rhs);
    // Sum of log |u_ii| avoids overflow of the raw determinant at d = 8.
    const Mat u = lu.matrixLU().triangularView<Eigen::Upper>();
    b.logdet = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
        b.logdet += std::log(std::abs(u(i, i)));
    return b;
}

/// Euclidean projection onto the probability simplex (sort-based).
inline Vec project_simplex(const Vec& y) {
    std::vector<double> u(y.data(), y.data() + y.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, tau = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumsum += u[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0)
            tau = t;
    }
    return (y.array() - tau).max(0.0).matrix();
}

inline double ratio(const Vec& gaps, const Vec& info, const Vec& p) {
    const double g = p.dot(gaps), i = p.dot(info);
    return i > 0.0 ? g * g / i : std::numeric_limits<double>::infinity();
}

/**
 * min over the simplex of (p.gaps)^2 / (p.info) by accelerated projected
 * gradient with backtracking, restarted from every vertex and the barycenter.
 */
inline double min_ratio_simplex(const Vec& gaps, const Vec& info, int iterations = 20000) {
    const auto k = gaps.size();
    auto grad = [&](const Vec& p) {
        const double g = p.dot(gaps), i = p.dot(info);
        return Vec(2.0 * g / i * gaps - (g * g) / (i * i) * info);
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<Vec> starts;
    starts.push_back(Vec::Constant(k, 1.0 / static_cast<double>(k)));
    for (Eigen::Index j = 0; j < k; ++j)
        if (info(j) > 0.0)
            starts.push_back(0.5 * Vec::Unit(k, j) + 0.5 * starts.front());
    for (const Vec& start : starts) {
        Vec p = start, y = start;
        double tk = 1.0, step = 1.0;
        for (int it = 0; it < iterations; ++it) {
            const Vec gy = grad(y);
            const double fy = ratio(gaps, info, y);
            Vec next;
            for (;;) {
                next = project_simplex(y - step * gy);
                const Vec diff = next - y;
                if (ratio(gaps, info, next) <= fy + gy.dot(diff) + diff.squaredNorm() / (2.0 * step) || step < 1e-16)
                    break;
                step *= 0.5;
            }
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
            Vec ny = next + ((tk - 1.0) / tn) * (next - p);
            if (ratio(gaps, info, next) > ratio(gaps, info, p)) { // adaptive restart
                ny = next;
                tk = 1.0;
            } else {
                tk = tn;
            }
            p = next;
            y = ny;
            step *= 1.5;
            best = std::min(best, ratio(gaps, info, p));
        }
    }
    return best;
}

/// min 1/2 (nu - theta)^T V (nu - theta) subject to <nu, a> >= 0, by projected gradient.
inline Vec halfspace_projected_gradient(const Mat& v, const Vec& theta, const Vec& a, int iterations = 200000) {
    Eigen::SelfAdjointEigenSolver<Mat> es(v);
    const double step = 1.0 / es.eigenvalues().maxCoeff();
    auto project = [&](const Vec& x) {
        const double s = x.dot(a);
        return s >= 0.0 ? x : Vec(x - (s / a.squaredNorm()) * a);
    };
    Vec nu = project(theta);
    for (int it = 0; it < iterations; ++it) {
        const Vec next = project(nu - step * (v * (nu - theta)));
        if ((next - nu).norm() < 1e-15)
            break;
        nu = next;
    }
    return nu;
}

/// Minimizes f over a 2-d box by repeated grid refinement around the incumbent.
inline std::pair<Vec, double> grid_minimize_2d(const std::function<double(const Vec&)>& f, Vec lo, Vec hi,
                                               int points = 401, int zooms = 12) {
    Vec best(2);
    double best_val = std::numeric_limits<double>::infinity();
    for (int z = 0; z <= zooms; ++z) {
        for (int i = 0; i < points; ++i)
            for (int j = 0; j < points; ++j) {
                Vec x(2);
                x << lo(0) + (hi(0) - lo(0)) * i / (points - 1), lo(1) + (hi(1) - lo(1)) * j / (points - 1);
                const double val = f(x);
                if (val < best_val) {
                    best_val = val;
                    best = x;
                }
            }
        const Vec half = (hi - lo) / 8.0;
        lo = best - half;
        hi = best + half;
    }
    return {best, best_val};
}

/// Brute-force scan of the two-point ratio over p in [0, 1] with the given step.
inline double best_p_grid(double d1, double d2, double i1, double i2, double step = 1e-5) {
    double best_p = 0.0, best = std::numeric_limits<double>::infinity();
    const long n = std::lround(1.0 / step);
    for (long j = 0; j <= n; ++j) {
        const double p = static_cast<double>(j) / static_cast<double>(n);
        const double g = (1 - p) * d1 + p * d2, i = (1 - p) * i1 + p * i2;
        const double r = i > 0 ? g * g / i : std::numeric_limits<double>::infinity();
        if (r < best) {
            best = r;
            best_p = p;
        }
    }
    return best_p;
}

} // namespace oracle
