#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linids/core.hpp"
#include "linids/errors.hpp"
#include "linids/ids.hpp"

namespace linids {

/// Mass placed on the optimal action in place of the unbounded optimum.
inline constexpr double optimal_arm_surrogate = 1e8;
/// Ridge added to V(alpha) for evaluation only.
inline constexpr double evaluation_ridge = 1e-12;

struct AllocationSolution {
    Vector alpha;              // over all actions; alpha[x*] holds the surrogate mass
    double cost = 0.0;         // sum over suboptimal actions of alpha(x) gap(x)
    double min_constraint = 0.0;
    std::string method;
    std::size_t iterations = 0;
};

namespace detail {

struct ConstraintEval {
    double value = std::numeric_limits<double>::infinity();
    std::size_t active = 0;   // suboptimal arm attaining the minimum
    Vector gradient;          // d value / d alpha over all actions (active constraint)
};

/// Per-instance quantities reused across evaluations: a basis with x* as first
/// axis, the actions and the differences x* - z expressed in that basis.
struct ConstraintGeometry {
    Eigen::Index k = 0;
    Eigen::Index d = 0;
    std::size_t best = 0;
    Vector gaps;
    Matrix xr;                 // actions in the rotated basis (rows)
    std::vector<Eigen::Index> sub;
    std::vector<Vector> w;     // rotated x* - z for each z in sub

    ConstraintGeometry(const Instance& instance, const GapProfile& gp)
        : k(static_cast<Eigen::Index>(instance.k())), d(static_cast<Eigen::Index>(instance.d())),
          best(gp.best_index), gaps(gp.gaps) {
        const Vector xstar = instance.action(best);
        Matrix rot = Matrix::Identity(d, d);
        if (xstar.norm() > 0.0) {
            const Eigen::HouseholderQR<Matrix> qr(xstar);
            rot = qr.householderQ() * Matrix::Identity(d, d);
        }
        xr = instance.actions() * rot;
        for (Eigen::Index z = 0; z < k; ++z)
            if (static_cast<std::size_t>(z) != best) {
                sub.push_back(z);
                w.push_back((xr.row(static_cast<Eigen::Index>(best)) - xr.row(z)).transpose());
            }
    }
};

// V^-1 through the Schur complement of V(0, 0), where the surrogate mass sits.
inline ConstraintEval evaluate_constraints(const ConstraintGeometry& geo, const Vector& alpha, bool with_gradient) {
    const Eigen::Index d = geo.d;
    if (alpha.size() != geo.k)
        throw std::invalid_argument("allocation has wrong length");
    if ((alpha.array() < 0.0).any())
        throw std::invalid_argument("allocation must be nonnegative");
    const Matrix v = geo.xr.transpose() * alpha.asDiagonal() * geo.xr;
    const double m = v(0, 0) + evaluation_ridge;
    const Vector b = v.col(0).tail(d - 1);
    Matrix basis = Matrix::Identity(d - 1, d - 1);
    Vector inv_spec = Vector::Zero(d - 1);
    if (d > 1) {
        Matrix schur = v.bottomRightCorner(d - 1, d - 1) - b * b.transpose() / m;
        schur = 0.5 * (schur + schur.transpose()).eval();
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(schur);
        if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite())
            throw NumericalError("V(alpha) is singular");
        basis = eig.eigenvectors();
        // spectrum clamped at the ridge
        inv_spec = (eig.eigenvalues().array() + evaluation_ridge).max(evaluation_ridge).inverse().matrix();
    }

    ConstraintEval out;
    Vector best_vinv_w;
    double best_norm2 = 0.0;
    Vector vinv_w(d);
    for (std::size_t j = 0; j < geo.sub.size(); ++j) {
        const Vector& w = geo.w[j];
        const Vector r = w.tail(d - 1) - (w(0) / m) * b;
        vinv_w.tail(d - 1) = basis * inv_spec.asDiagonal() * (basis.transpose() * r);
        vinv_w(0) = (w(0) - b.dot(vinv_w.tail(d - 1))) / m;
        const double norm2 = w(0) * w(0) / m + r.dot(vinv_w.tail(d - 1));
        if (!(norm2 > 0.0) || !std::isfinite(norm2))
            throw NumericalError("V(alpha) is singular", norm2);
        const double gap = geo.gaps(geo.sub[j]);
        const double value = gap * gap / (2.0 * norm2);
        if (value < out.value) {
            out.value = value;
            out.active = static_cast<std::size_t>(geo.sub[j]);
            if (with_gradient) {
                best_vinv_w = vinv_w;
                best_norm2 = norm2;
            }
        }
    }
    if (with_gradient) {
        const double gap = geo.gaps(static_cast<Eigen::Index>(out.active));
        const Vector proj = geo.xr * best_vinv_w;
        out.gradient = (0.5 * gap * gap / (best_norm2 * best_norm2)) * proj.cwiseAbs2();
    }
    return out;
}

inline ConstraintEval evaluate_constraints(const Instance& instance, const GapProfile& gp, const Vector& alpha,
                                           bool with_gradient) {
    return evaluate_constraints(ConstraintGeometry(instance, gp), alpha, with_gradient);
}

inline Vector with_surrogate(const Instance& instance, std::size_t best, const Vector& sub_alpha_full) {
    Vector a = sub_alpha_full;
    a(static_cast<Eigen::Index>(best)) = optimal_arm_surrogate;
    (void)instance;
    return a;
}

/// Smallest c with g(surrogate + c * direction) >= 1 (up to 1e-9 relative).
inline double feasible_scale(const ConstraintGeometry& geo, const Vector& direction) {
    Vector alpha(direction.size());
    auto g = [&](double c) {
        alpha = c * direction;
        alpha(static_cast<Eigen::Index>(geo.best)) = optimal_arm_surrogate;
        return evaluate_constraints(geo, alpha, false).value;
    };
    const double g1 = g(1.0);
    if (!(g1 > 0.0))
        throw ConvergenceError("allocation direction carries no information", g1);
    // g is close to linear in c, so c <- c / g(c) converges in a few steps.
    double guess = 1.0 / g1;
    if (guess > 1e30)
        throw ConvergenceError("no feasible scale for allocation direction", g1);
    for (int i = 0; i < 20; ++i) {
        const double gv = g(guess);
        if (!(gv > 0.0) || !std::isfinite(gv))
            break;
        const double next = guess / gv;
        if (next > 1e30)
            throw ConvergenceError("no feasible scale for allocation direction", gv);
        const bool done = std::abs(next - guess) <= 1e-13 * guess;
        guess = next;
        if (done)
            break;
    }
    if (g(guess * (1.0 + 1e-10)) >= 1.0 && g(guess * (1.0 - 1e-7)) < 1.0)
        return guess * (1.0 + 1e-10);

    double lo = guess, hi = guess;
    while (g(hi) < 1.0) {
        hi *= 2.0;
        if (hi > 1e30)
            throw ConvergenceError("no feasible scale for allocation direction", g(hi));
    }
    while (lo > 0.0 && g(lo) >= 1.0)
        lo *= 0.5;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) >= 1.0 ? hi : lo) = mid;
    }
    return hi;
}

inline AllocationSolution finish(const Instance& instance, const GapProfile& gp, const Vector& sub_alpha,
                                 std::string method, std::size_t iterations) {
    AllocationSolution sol;
    sol.alpha = with_surrogate(instance, gp.best_index, sub_alpha);
    sol.cost = sub_alpha.dot(gp.gaps);
    sol.min_constraint = evaluate_constraints(instance, gp, sol.alpha, false).value;
    sol.method = std::move(method);
    sol.iterations = iterations;
    return sol;
}

} // namespace detail

/// min over suboptimal z of gap(z)^2 / (2 ||x* - z||^2_{V(alpha)^-1}).
inline double constraint_value(const Instance& instance, const Vector& alpha) {
    const GapProfile gp = gap_profile(instance);
    return detail::evaluate_constraints(instance, gp, alpha, false).value;
}

// ---------------------------------------------------------------------------
// Primal-dual game (oracle setting)
// ---------------------------------------------------------------------------

enum class GameResponse { ratio, ids };

struct GameOptions {
    GameResponse response = GameResponse::ratio;
    /// Error term added to the gaps for the IDS response (defaults to half the smallest gap).
    double ids_delta = 0.0;
};

struct GameState {
    Vector q_dual;
    Vector cum_alloc;
    Vector cum_loss;
    double beta_n = 0.0;
};

struct GameTraceEntry {
    std::size_t iteration = 0;
    std::size_t arm = 0;      // suboptimal action chosen (x* when exploiting)
    double p = 1.0;           // probability on `arm`
    double min_level = 0.0;   // min_j h_j(alpha_{t-1})
    double info = 0.0;        // I_t(mu_t)
};

struct GameResult {
    AllocationSolution solution; // allocation and cost normalized by beta_n
    GameState state;
    std::vector<GameTraceEntry> trace;
    double total_info = 0.0;
    double max_h = 0.0;
    bool satisfied = false;
};

/// Two-point distribution (1-p) x* + p z with z = argmin gap/info, p = delta / gap(z).
inline ActionDistribution oracle_ids_response(const Vector& gaps, double delta, const Vector& info,
                                              std::size_t best_index) {
    if (!(delta > 0.0))
        throw std::invalid_argument("oracle IDS needs delta > 0");
    if (gaps.size() != info.size())
        throw std::invalid_argument("gap and information vectors differ in length");
    std::size_t z_best = best_index;
    double ratio_best = std::numeric_limits<double>::infinity();
    for (Eigen::Index z = 0; z < gaps.size(); ++z) {
        if (static_cast<std::size_t>(z) == best_index || !(info(z) > 0.0))
            continue;
        const double r = gaps(z) / info(z);
        if (r < ratio_best) {
            ratio_best = r;
            z_best = static_cast<std::size_t>(z);
        }
    }
    if (z_best == best_index)
        throw DegenerateInformation("no suboptimal action carries information");
    const double p = std::clamp(delta / gaps(static_cast<Eigen::Index>(z_best)), 0.0, 1.0);
    return ActionDistribution::mix(best_index, z_best, p);
}

/**
 * Fictitious game on the covering program. Constraints are indexed by
 * suboptimal arms; h_z(x) = 1/2 <nu_z - theta*, x>^2 with nu_z the closest
 * point of the halfspace where z beats x*, measured in the norm of
 * I + surrogate x* x*^T + V(alpha_t). The dual player runs exponential
 * weights on the constraint levels h_z(alpha_{t-1}); the primal player
 * answers with the best gap/information ratio (or the oracle IDS mix) until
 * every level reaches beta_n.
 */
inline GameResult oracle_primal_dual(const Instance& instance, double beta_n, std::size_t rounds,
                                     const GameOptions& opts = {}) {
    if (!(beta_n > 0.0))
        throw std::invalid_argument("beta_n must be positive");
    const GapProfile gp = gap_profile(instance);
    const auto k = static_cast<Eigen::Index>(instance.k());
    const auto d = static_cast<Eigen::Index>(instance.d());
    const Matrix& x = instance.actions();
    const Vector xstar = instance.action(gp.best_index);
    const double delta = opts.ids_delta > 0.0 ? opts.ids_delta : 0.5 * gp.delta_min;

    std::vector<Eigen::Index> sub;
    for (Eigen::Index z = 0; z < k; ++z)
        if (static_cast<std::size_t>(z) != gp.best_index)
            sub.push_back(z);
    const auto l = static_cast<Eigen::Index>(sub.size());

    GameResult res;
    res.state.beta_n = beta_n;
    res.state.cum_alloc = Vector::Zero(k);
    res.state.cum_loss = Vector::Zero(l);
    res.state.q_dual = Vector::Constant(l, 1.0 / static_cast<double>(l));

    Matrix h(l, k);
    std::size_t t = 1;
    for (; t <= rounds; ++t) {
        Matrix w_mat = Matrix::Identity(d, d) + optimal_arm_surrogate * xstar * xstar.transpose() +
                       x.transpose() * res.state.cum_alloc.asDiagonal() * x;
        Eigen::LDLT<Matrix> ldlt(w_mat);
        for (Eigen::Index j = 0; j < l; ++j) {
            const Vector w = xstar - x.row(sub[static_cast<std::size_t>(j)]).transpose();
            const Vector winv_w = ldlt.solve(w);
            const double gap = gp.gaps(sub[static_cast<std::size_t>(j)]);
            const Vector shift = -(gap / w.dot(winv_w)) * winv_w; // nu_z - theta*
            h.row(j) = (0.5 * (x * shift).cwiseAbs2()).transpose();
        }
        res.max_h = std::max(res.max_h, h.maxCoeff());
        res.state.cum_loss = h * res.state.cum_alloc;
        const double min_level = res.state.cum_loss.minCoeff();
        if (min_level >= beta_n) {
            res.satisfied = true;
            res.trace.push_back({t, gp.best_index, 1.0, min_level, 0.0});
            break;
        }

        const double hmax = std::max(h.maxCoeff(), 1e-300);
        const double eta = std::sqrt(std::log(std::max<double>(static_cast<double>(l), 2.0)) / static_cast<double>(t)) / hmax;
        const Vector shifted = (-eta * (res.state.cum_loss.array() - res.state.cum_loss.minCoeff())).exp().matrix();
        res.state.q_dual = shifted / shifted.sum();
        const Vector info = h.transpose() * res.state.q_dual; // I_t over all actions

        GameTraceEntry e;
        e.iteration = t;
        e.min_level = min_level;
        Vector mu = Vector::Zero(k);
        if (opts.response == GameResponse::ratio) {
            double best_ratio = std::numeric_limits<double>::infinity();
            Eigen::Index arm = sub.front();
            for (Eigen::Index z : sub) {
                if (!(info(z) > 0.0))
                    continue;
                const double r = gp.gaps(z) / info(z);
                if (r < best_ratio) {
                    best_ratio = r;
                    arm = z;
                }
            }
            mu(arm) = 1.0;
            e.arm = static_cast<std::size_t>(arm);
        } else {
            Vector info_sub = info;
            info_sub(static_cast<Eigen::Index>(gp.best_index)) = 0.0;
            const ActionDistribution dist = oracle_ids_response(gp.gaps, delta, info_sub, gp.best_index);
            for (const auto& [a, p] : dist.support)
                mu(static_cast<Eigen::Index>(a)) += p;
            e.arm = dist.support.back().first;
            e.p = dist.support.back().second;
        }
        e.info = info.dot(mu);
        res.total_info += e.info;
        res.state.cum_alloc += mu;
        res.trace.push_back(e);
    }

    Vector sub_alpha = res.state.cum_alloc / beta_n;
    sub_alpha(static_cast<Eigen::Index>(gp.best_index)) = 0.0;
    res.solution = detail::finish(instance, gp, sub_alpha, opts.response == GameResponse::ratio ? "game" : "game-ids",
                                  std::min(t, rounds));
    return res;
}

// ---------------------------------------------------------------------------
// c* solvers
// ---------------------------------------------------------------------------

enum class CstarMethod { subgradient, game };

struct CstarOptions {
    CstarMethod method = CstarMethod::subgradient;
    std::size_t budget = 100000;
    /// Confidence level for the game method.
    double game_beta = std::log(1e6);
};

namespace detail {

inline AllocationSolution solve_cstar_subgradient(const Instance& instance, const GapProfile& gp, std::size_t budget) {
    const auto k = static_cast<Eigen::Index>(instance.k());
    const Vector zero = Vector::Zero(k);
    const ConstraintGeometry geo(instance, gp);
    if (evaluate_constraints(geo, with_surrogate(instance, gp.best_index, zero), false).value >= 1.0)
        return finish(instance, gp, zero, "subgradient", 0);

    // Exponentiated-gradient (mirror descent on log alpha) over directions
    // on the simplex of suboptimal actions, minimizing cost / constraint.
    Vector p = Vector::Constant(k, 1.0 / static_cast<double>(k - 1));
    p(static_cast<Eigen::Index>(gp.best_index)) = 0.0;
    Vector best_p = p;
    double best_ratio = std::numeric_limits<double>::infinity();
    std::size_t it = 1;
    for (; it <= budget; ++it) {
        const ConstraintEval ev = evaluate_constraints(geo, with_surrogate(instance, gp.best_index, p), true);
        const double cost = p.dot(gp.gaps);
        const double ratio = cost / ev.value;
        if (ratio < best_ratio) {
            best_ratio = ratio;
            best_p = p;
        }
        Vector grad = (gp.gaps * ev.value - cost * ev.gradient) / (ev.value * ev.value);
        grad(static_cast<Eigen::Index>(gp.best_index)) = 0.0;
        const double scale = grad.cwiseAbs().maxCoeff();
        if (!(scale > 0.0) || !std::isfinite(scale))
            break;
        const double step = 1.0 / std::sqrt(static_cast<double>(it));
        for (Eigen::Index i = 0; i < k; ++i)
            if (static_cast<std::size_t>(i) != gp.best_index)
                p(i) = std::max(p(i) * std::exp(-step * grad(i) / scale), 1e-300);
        p /= p.sum();
    }
    const double c = feasible_scale(geo, best_p);
    return finish(instance, gp, c * best_p, "subgradient", std::min(it, budget));
}

} // namespace detail

inline AllocationSolution solve_cstar(const Instance& instance, const CstarOptions& opts = {}) {
    const GapProfile gp = gap_profile(instance);
    if (opts.method == CstarMethod::game)
        return oracle_primal_dual(instance, opts.game_beta, opts.budget).solution;
    return detail::solve_cstar_subgradient(instance, gp, opts.budget);
}

struct GridSpec {
    /// Log-spaced values per suboptimal coordinate (zero is always included).
    std::size_t points_per_axis = 0; // 0 selects a default by dimension
    double lo = 1e-3;
    double hi = 1e3;
    /// Zoom passes around the incumbent after the coarse grid.
    std::size_t refinements = 3;
};

/**
 * Grid oracle for c*: enumerates allocation directions over the suboptimal
 * actions and scales each to the feasibility boundary. Limited to at most
 * four suboptimal actions.
 */
inline AllocationSolution brute_force_cstar(const Instance& instance, GridSpec grid = {}) {
    const GapProfile gp = gap_profile(instance);
    const std::size_t m = instance.k() - 1;
    if (m > 4)
        throw std::invalid_argument("brute force oracle supports at most four suboptimal actions");
    if (grid.points_per_axis == 0) {
        static constexpr std::size_t defaults[] = {0, 8, 300, 40, 16};
        grid.points_per_axis = defaults[m];
    }
    if (grid.points_per_axis < 1 || !(grid.lo > 0.0) || !(grid.hi > grid.lo))
        throw std::invalid_argument("invalid grid settings");

    const auto k = static_cast<Eigen::Index>(instance.k());
    std::vector<Eigen::Index> sub;
    for (Eigen::Index z = 0; z < k; ++z)
        if (static_cast<std::size_t>(z) != gp.best_index)
            sub.push_back(z);

    const Vector zero = Vector::Zero(k);
    const detail::ConstraintGeometry geo(instance, gp);
    if (detail::evaluate_constraints(geo, detail::with_surrogate(instance, gp.best_index, zero), false).value >= 1.0)
        return detail::finish(instance, gp, zero, "brute_force", 1);

    double best_cost = std::numeric_limits<double>::infinity();
    Vector best_alpha = zero;
    std::size_t evaluations = 0;

    auto search = [&](const std::vector<std::vector<double>>& axes) {
        std::vector<std::size_t> idx(m, 0);
        for (;;) {
            Vector dir = zero;
            bool any = false;
            for (std::size_t j = 0; j < m; ++j) {
                dir(sub[j]) = axes[j][idx[j]];
                any = any || dir(sub[j]) > 0.0;
            }
            if (any) {
                ++evaluations;
                try {
                    const double c = detail::feasible_scale(geo, dir);
                    const double cost = c * dir.dot(gp.gaps);
                    if (cost < best_cost) {
                        best_cost = cost;
                        best_alpha = c * dir;
                    }
                } catch (const ConvergenceError&) {
                    // direction cannot satisfy every constraint
                }
            }
            std::size_t j = 0;
            while (j < m && ++idx[j] == axes[j].size())
                idx[j++] = 0;
            if (j == m)
                break;
        }
    };

    auto logspace = [](double lo, double hi, std::size_t n) {
        std::vector<double> v;
        if (n == 1) {
            v.push_back(std::sqrt(lo * hi));
            return v;
        }
        for (std::size_t i = 0; i < n; ++i)
            v.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) /
                                                     static_cast<double>(n - 1)));
        return v;
    };

    std::vector<std::vector<double>> axes(m);
    for (auto& a : axes) {
        a = logspace(grid.lo, grid.hi, grid.points_per_axis);
        a.insert(a.begin(), 0.0);
    }
    search(axes);

    double ratio = grid.points_per_axis > 1
                       ? std::pow(grid.hi / grid.lo, 1.0 / static_cast<double>(grid.points_per_axis - 1))
                       : grid.hi / grid.lo;
    for (std::size_t pass = 0; pass < grid.refinements && std::isfinite(best_cost); ++pass) {
        const double span = ratio * ratio;
        const std::size_t n = std::max<std::size_t>(grid.points_per_axis, 9);
        for (std::size_t j = 0; j < m; ++j) {
            const double center = best_alpha(sub[j]);
            // Zoom around the incumbent, relative to the largest coordinate.
            const double ref = center > 0.0 ? center : best_alpha.maxCoeff() * grid.lo;
            axes[j] = logspace(ref / span, ref * span, n);
            axes[j].insert(axes[j].begin(), 0.0);
        }
        search(axes);
        ratio = std::pow(span * span, 1.0 / static_cast<double>(n - 1));
    }

    if (!std::isfinite(best_cost))
        throw ConvergenceError("no feasible grid point");
    return detail::finish(instance, gp, best_alpha, "brute_force", evaluations);
}

} // namespace linids
