#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "linids/core.hpp"
#include "linids/errors.hpp"
#include "linids/estimator.hpp"
#include "linids/rng.hpp"

namespace linids {

// ---------------------------------------------------------------------------
// Variants and configuration
// ---------------------------------------------------------------------------

/// Information-gain flavours: halfspace (H) or cell (C) alternatives, with
/// the optimism bonus on every action or only on the UCB action.
enum class InfoGainKind { H, H_UCB, C, C_UCB };

enum class LearningRateMode { automatic, fixed };

struct InfoGainVariant {
    InfoGainKind kind = InfoGainKind::H_UCB;
    LearningRateMode learning_rate_mode = LearningRateMode::automatic;
    std::optional<double> fixed_eta;

    void validate() const {
        if (learning_rate_mode == LearningRateMode::fixed && !(fixed_eta && *fixed_eta > 0.0))
            throw std::invalid_argument("fixed learning rate requires a positive eta");
    }

    bool uses_cells() const noexcept { return kind == InfoGainKind::C || kind == InfoGainKind::C_UCB; }
    bool bonus_on_all() const noexcept { return kind == InfoGainKind::H || kind == InfoGainKind::C; }
};

inline const char* to_string(InfoGainKind k) noexcept {
    switch (k) {
    case InfoGainKind::H: return "H";
    case InfoGainKind::H_UCB: return "H_UCB";
    case InfoGainKind::C: return "C";
    case InfoGainKind::C_UCB: return "C_UCB";
    }
    return "?";
}

inline InfoGainKind info_gain_kind_from_string(const std::string& s) {
    if (s == "H") return InfoGainKind::H;
    if (s == "H_UCB") return InfoGainKind::H_UCB;
    if (s == "C") return InfoGainKind::C;
    if (s == "C_UCB") return InfoGainKind::C_UCB;
    throw std::invalid_argument("unknown information gain variant: " + s);
}

// ---------------------------------------------------------------------------
// Action scores
// ---------------------------------------------------------------------------

/// ||x||_{V^-1} for every row of `actions`.
inline Vector inverse_norms(const EstimatorState& est, const Matrix& actions) {
    const Matrix xv = actions * est.precision_inv;
    return (xv.array() * actions.array()).rowwise().sum().max(0.0).sqrt().matrix();
}

inline std::size_t best_empirical_action(const EstimatorState& est, const Instance& instance) {
    return argmax_lowest(instance.actions() * est.theta_hat);
}

/// argmax <x, theta_hat> + beta^{1/2} ||x||_{V^-1}; `beta` is whitened.
inline std::size_t ucb_action(const EstimatorState& est, const Instance& instance, double beta) {
    if (!(beta >= 0.0))
        throw std::invalid_argument("beta must be nonnegative");
    const Vector index = instance.actions() * est.theta_hat + std::sqrt(beta) * inverse_norms(est, instance.actions());
    return argmax_lowest(index);
}

struct GapEstimates {
    Vector gaps;
    double delta = 0.0;
    std::size_t hat_x = 0;
};

/// Optimistic gap estimates: max_z (<z,theta_hat> + beta^{1/2}||z||_{V^-1}) - <x,theta_hat>.
inline GapEstimates gap_estimates(const EstimatorState& est, const Instance& instance, double beta_gap) {
    if (!(beta_gap >= 0.0))
        throw std::invalid_argument("beta_gap must be nonnegative");
    const Vector values = instance.actions() * est.theta_hat;
    const Vector index = values + std::sqrt(beta_gap) * inverse_norms(est, instance.actions());
    GapEstimates g;
    g.hat_x = argmax_lowest(values);
    g.gaps = (index.maxCoeff() - values.array()).matrix();
    g.delta = g.gaps(static_cast<Eigen::Index>(g.hat_x));
    return g;
}

// ---------------------------------------------------------------------------
// Alternative parameters
// ---------------------------------------------------------------------------

struct Alternative {
    Vector nu;
    double half_sq_distance = 0.0;
};

/**
 * Closest parameter (in V-norm) to theta_hat under which z is at least as
 * good as hat_x. Closed form for an unconstrained parameter set. When z
 * already beats hat_x under theta_hat the projection is inactive and
 * (theta_hat, 0) is returned.
 */
inline Alternative alternative_halfspace(const EstimatorState& est, const Instance& instance, std::size_t hat_x,
                                         std::size_t z) {
    if (hat_x >= instance.k() || z >= instance.k())
        throw std::invalid_argument("action index out of range");
    if (hat_x == z)
        throw std::invalid_argument("alternative requires z != hat_x");
    const Vector w = instance.action(hat_x) - instance.action(z);
    const Vector vinv_w = est.precision_inv * w;
    const double norm2 = w.dot(vinv_w);
    const double margin = est.theta_hat.dot(w);
    if (margin <= 0.0 || norm2 <= 0.0)
        return {est.theta_hat, 0.0};
    return {est.theta_hat - (margin / norm2) * vinv_w, 0.5 * margin * margin / norm2};
}

struct CellSolverOptions {
    std::size_t max_sweeps = 10000;
    double tolerance = 1e-8;
};

/**
 * Closest parameter to theta_hat (V-norm) inside the cell of z, i.e. where z
 * is optimal among all actions. Hildreth's dual coordinate ascent, which is
 * Dykstra's cyclic projection scheme specialized to halfspaces.
 */
inline Alternative alternative_cell(const EstimatorState& est, const Instance& instance, std::size_t z,
                                    const CellSolverOptions& opts = {}) {
    if (z >= instance.k())
        throw std::invalid_argument("action index out of range");
    const std::size_t k = instance.k();
    const Vector xz = instance.action(z);

    std::vector<Vector> normals;
    std::vector<Vector> vinv_normals;
    std::vector<double> curvature;
    for (std::size_t i = 0; i < k; ++i) {
        if (i == z)
            continue;
        Vector a = xz - instance.action(i);
        if (a.squaredNorm() <= 1e-300)
            continue;
        Vector va = est.precision_inv * a;
        curvature.push_back(a.dot(va));
        normals.push_back(std::move(a));
        vinv_normals.push_back(std::move(va));
    }

    Vector nu = est.theta_hat;
    std::vector<double> lambda(normals.size(), 0.0);
    const double scale = std::max(1.0, est.theta_hat.norm());
    double residual = std::numeric_limits<double>::infinity();

    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < normals.size(); ++i) {
            const double step = -normals[i].dot(nu) / curvature[i];
            const double updated = std::max(0.0, lambda[i] + step);
            const double change = updated - lambda[i];
            if (change != 0.0) {
                nu.noalias() += change * vinv_normals[i];
                lambda[i] = updated;
            }
        }
        residual = 0.0;
        for (std::size_t i = 0; i < normals.size(); ++i) {
            const double slack = normals[i].dot(nu) / normals[i].norm();
            residual = std::max(residual, std::max(0.0, -slack));
            residual = std::max(residual, lambda[i] * std::abs(slack) * std::sqrt(curvature[i]));
        }
        if (residual <= opts.tolerance * scale) {
            const Vector diff = nu - est.theta_hat;
            return {nu, 0.5 * diff.dot(est.precision * diff)};
        }
    }
    throw NumericalError("cell projection did not converge", residual);
}

// ---------------------------------------------------------------------------
// Soft-min weights, learning rate, information gain
// ---------------------------------------------------------------------------

/// q(z) proportional to exp(-eta * half_sq_distance(z)), normalized.
inline Vector q_weights(const Vector& half_sq_distances, double eta) {
    if (half_sq_distances.size() == 0)
        throw std::invalid_argument("q_weights needs at least one entry");
    if (!(eta > 0.0))
        throw std::invalid_argument("eta must be positive");
    const double lo = half_sq_distances.minCoeff();
    Vector q = (-eta * (half_sq_distances.array() - lo)).exp().matrix();
    return q / q.sum();
}

inline constexpr double min_learning_rate = 1e-6;
inline constexpr double max_learning_rate = 1e6;

/// Automatic mode: eta = 1/sqrt(beta_ref); fixed mode: the configured eta.
inline double learning_rate(const InfoGainVariant& variant, double beta_ref) {
    double eta = 0.0;
    if (variant.learning_rate_mode == LearningRateMode::fixed) {
        variant.validate();
        eta = *variant.fixed_eta;
    } else {
        if (!(beta_ref > 0.0))
            return max_learning_rate;
        eta = 1.0 / std::sqrt(beta_ref);
    }
    return std::clamp(eta, min_learning_rate, max_learning_rate);
}

/**
 * I(x) = 1/2 sum_j q_j (|<nu_j - theta_hat, x>| + b(x))^2.
 *
 * `directions` holds nu_j - theta_hat for each alternative j with weight
 * q_j. `bonus` is beta^{1/2}||x||_{V^-1} per action; it is applied to every
 * action for H / C and only to `ucb_x` for H_UCB / C_UCB.
 */
inline Vector info_gain(const Matrix& actions, const std::vector<Vector>& directions, const Vector& q,
                        const Vector& bonus, InfoGainKind kind, std::size_t ucb_x) {
    const auto k = actions.rows();
    Vector info = Vector::Zero(k);
    const bool everywhere = kind == InfoGainKind::H || kind == InfoGainKind::C;
    for (std::size_t j = 0; j < directions.size(); ++j) {
        const double qj = q(static_cast<Eigen::Index>(j));
        if (qj == 0.0)
            continue;
        const Vector proj = actions * directions[j];
        for (Eigen::Index x = 0; x < k; ++x) {
            const double b = (everywhere || static_cast<std::size_t>(x) == ucb_x) ? bonus(x) : 0.0;
            const double term = std::abs(proj(x)) + b;
            info(x) += qj * term * term;
        }
    }
    return 0.5 * info;
}

// ---------------------------------------------------------------------------
// IDS distribution
// ---------------------------------------------------------------------------

struct TradeOff {
    double p = 0.0;   // probability on the second (larger-gap) action
    double psi = 0.0; // information ratio at p
};

inline double two_point_ratio(double d1, double d2, double i1, double i2, double p) {
    const double gap = (1.0 - p) * d1 + p * d2;
    const double info = (1.0 - p) * i1 + p * i2;
    if (info <= 0.0)
        return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return gap * gap / info;
}

/// Optimal mixing probability between two actions with gaps 0 < d1 <= d2.
inline TradeOff two_action_tradeoff(double d1, double d2, double i1, double i2) {
    if (!(d1 > 0.0))
        throw std::invalid_argument("two_action_tradeoff needs d1 > 0");
    if (d2 < d1)
        throw std::invalid_argument("two_action_tradeoff needs d1 <= d2");
    double p = 0.0;
    if (i1 < i2) {
        if (d2 == d1)
            p = 1.0;
        else
            p = std::clamp(d1 / (d2 - d1) - 2.0 * i1 / (i2 - i1), 0.0, 1.0);
    }
    return {p, two_point_ratio(d1, d2, i1, i2, p)};
}

/// Distribution over actions with at most two support points.
struct ActionDistribution {
    std::vector<std::pair<std::size_t, double>> support;

    static ActionDistribution point(std::size_t a) { return {{{a, 1.0}}}; }

    static ActionDistribution mix(std::size_t a, std::size_t b, double p_b) {
        if (a == b || p_b <= 0.0)
            return point(a);
        if (p_b >= 1.0)
            return point(b);
        return {{{a, 1.0 - p_b}, {b, p_b}}};
    }

    double expect(const Vector& v) const {
        double s = 0.0;
        for (const auto& [a, p] : support)
            s += p * v(static_cast<Eigen::Index>(a));
        return s;
    }

    double prob(std::size_t a) const {
        double s = 0.0;
        for (const auto& [b, p] : support)
            if (a == b)
                s += p;
        return s;
    }

    std::size_t sample(RngStream& rng) const {
        if (support.size() == 1)
            return support.front().first;
        return rng.uniform() < support.front().second ? support.front().first : support.back().first;
    }
};

struct IdsChoice {
    ActionDistribution mu;
    double psi = 0.0;
};

/**
 * Minimizes the information ratio over two-point distributions. With
 * `fast_pairing` only pairs (hat_x, z) are searched, otherwise all pairs.
 * Zero gap estimates (possible only with a zero confidence width) are
 * handled by playing the zero-gap action with the most information.
 */
inline IdsChoice ids_distribution(const Vector& gaps, const Vector& info, std::size_t hat_x, bool fast_pairing) {
    const auto k = static_cast<std::size_t>(gaps.size());
    if (k == 0 || static_cast<std::size_t>(info.size()) != k || hat_x >= k)
        throw std::invalid_argument("ids_distribution: inconsistent inputs");
    if (!(info.maxCoeff() > 0.0))
        throw DegenerateInformation("all information gains are zero");

    std::optional<std::size_t> zero_gap;
    for (std::size_t x = 0; x < k; ++x) {
        const auto ix = static_cast<Eigen::Index>(x);
        if (gaps(ix) <= 0.0) {
            if (!zero_gap || info(ix) > info(static_cast<Eigen::Index>(*zero_gap)) ||
                (x == hat_x && info(ix) >= info(static_cast<Eigen::Index>(*zero_gap))))
                zero_gap = x;
        }
    }
    if (zero_gap)
        return {ActionDistribution::point(*zero_gap), 0.0};

    IdsChoice best{ActionDistribution::point(hat_x), std::numeric_limits<double>::infinity()};
    auto consider = [&](std::size_t a, std::size_t b) {
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        const bool a_first = gaps(ia) <= gaps(ib);
        const std::size_t lo = a_first ? a : b, hi = a_first ? b : a;
        const auto il = static_cast<Eigen::Index>(lo), ih = static_cast<Eigen::Index>(hi);
        const TradeOff t = two_action_tradeoff(gaps(il), gaps(ih), info(il), info(ih));
        if (t.psi < best.psi) {
            best.psi = t.psi;
            best.mu = ActionDistribution::mix(lo, hi, t.p);
        }
    };

    if (fast_pairing) {
        for (std::size_t z = 0; z < k; ++z)
            if (z != hat_x)
                consider(hat_x, z);
        if (k == 1)
            consider(hat_x, hat_x);
    } else {
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                consider(a, b);
        if (k == 1)
            consider(0, 0);
    }
    return best;
}

/// Exploitation condition: m_s >= beta / 2 (inclusive).
inline bool exploit_check(double m_s, double beta_exploit) noexcept { return m_s >= 0.5 * beta_exploit; }

// ---------------------------------------------------------------------------
// One round of the algorithm
// ---------------------------------------------------------------------------

struct IdsRound {
    std::size_t local_s = 1;
    std::size_t global_t = 1;
    std::size_t hat_x = 0;
    std::size_t ucb_x = 0;
    double beta_gap = 0.0;     // whitened beta at delta^-1 = s^2
    double beta_exploit = 0.0; // whitened beta at delta^-1 = t log t
    double delta_s = 0.0;      // gap estimate of hat_x (after thresholding, if enabled)
    bool thresholded = false;  // delta_s was raised to 1/sqrt(s)
    Vector gaps;
    Vector bonus;              // beta_gap^{1/2} ||x||_{V^-1}
    /// Alternative per action; the entry for hat_x is unused.
    std::vector<Alternative> alternatives;
    /// Halfspace alternatives, always computed (they define m_s).
    std::vector<Alternative> halfspace_alternatives;
    double m_s = 0.0;
    double eta_s = 0.0;
    Vector q;                  // length k, q[hat_x] = 0
    Vector info;
    ActionDistribution mu;
    double psi = 0.0;
    bool exploit = false;
};

struct IdsOptions {
    InfoGainVariant variant;
    BetaSpec beta_spec;
    bool fast_pairing = true;
    bool thresholded_gaps = false;
    CellSolverOptions cell;
};

inline double gap_beta(const EstimatorState& est, const BetaSpec& spec, std::size_t s) {
    const double sd = static_cast<double>(s);
    return whitened_beta(est, spec, std::max(1.0, sd * sd), std::max(3.0, sd));
}

inline double exploit_beta(const EstimatorState& est, const BetaSpec& spec, std::size_t t) {
    const double td = static_cast<double>(t);
    const double delta_inv = std::max(td * std::log(std::max(td, 1.0)), std::exp(1.0));
    return whitened_beta(est, spec, delta_inv, std::max(3.0, td));
}

/// Everything computed from the estimator at local time s; the exploit flag
/// is evaluated separately for the current global time.
inline IdsRound compute_ids_round(const EstimatorState& est, const Instance& instance, const IdsOptions& opts,
                                  std::size_t local_s) {
    const std::size_t k = instance.k();
    const Matrix& actions = instance.actions();
    IdsRound r;
    r.local_s = local_s;
    r.beta_gap = gap_beta(est, opts.beta_spec, local_s);

    const Vector values = actions * est.theta_hat;
    r.bonus = std::sqrt(r.beta_gap) * inverse_norms(est, actions);
    const Vector index = values + r.bonus;
    r.hat_x = argmax_lowest(values);
    r.ucb_x = argmax_lowest(index);
    r.gaps = (index.maxCoeff() - values.array()).matrix();
    r.delta_s = r.gaps(static_cast<Eigen::Index>(r.hat_x));
    if (opts.thresholded_gaps) {
        const double floor = 1.0 / std::sqrt(static_cast<double>(local_s));
        if (r.delta_s < floor) {
            r.delta_s = floor;
            r.thresholded = true;
            const double lead = values(static_cast<Eigen::Index>(r.hat_x));
            r.gaps = ((lead - values.array()) + r.delta_s).matrix();
        }
    }

    r.halfspace_alternatives.assign(k, Alternative{est.theta_hat, 0.0});
    r.m_s = std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < k; ++z) {
        if (z == r.hat_x)
            continue;
        r.halfspace_alternatives[z] = alternative_halfspace(est, instance, r.hat_x, z);
        r.m_s = std::min(r.m_s, r.halfspace_alternatives[z].half_sq_distance);
    }
    if (opts.variant.uses_cells()) {
        r.alternatives.assign(k, Alternative{est.theta_hat, 0.0});
        for (std::size_t z = 0; z < k; ++z)
            if (z != r.hat_x)
                r.alternatives[z] = alternative_cell(est, instance, z, opts.cell);
    } else {
        r.alternatives = r.halfspace_alternatives;
    }

    r.eta_s = learning_rate(opts.variant, r.beta_gap);
    Vector reduced(static_cast<Eigen::Index>(k - 1));
    std::vector<Vector> directions;
    directions.reserve(k - 1);
    for (std::size_t z = 0, j = 0; z < k; ++z) {
        if (z == r.hat_x)
            continue;
        reduced(static_cast<Eigen::Index>(j++)) = r.alternatives[z].half_sq_distance;
        directions.push_back(r.alternatives[z].nu - est.theta_hat);
    }
    const Vector q_reduced = q_weights(reduced, r.eta_s);
    r.q = Vector::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t z = 0, j = 0; z < k; ++z)
        if (z != r.hat_x)
            r.q(static_cast<Eigen::Index>(z)) = q_reduced(static_cast<Eigen::Index>(j++));

    r.info = info_gain(actions, directions, q_reduced, r.bonus, opts.variant.kind, r.ucb_x);
    const IdsChoice choice = ids_distribution(r.gaps, r.info, r.hat_x, opts.fast_pairing);
    r.mu = choice.mu;
    r.psi = choice.psi;
    return r;
}

// ---------------------------------------------------------------------------
// Algorithm state and step
// ---------------------------------------------------------------------------

struct IdsAlgoState {
    EstimatorState estimator;
    std::size_t local_s = 1;
    std::size_t global_t = 1;
    IdsOptions options;
    std::optional<IdsRound> last_round;
};

inline IdsAlgoState init_ids(const Instance& instance, IdsOptions options = {}) {
    options.variant.validate();
    options.beta_spec.validate();
    IdsAlgoState s;
    s.estimator = init_estimator(instance.d(), instance.noise_std());
    s.options = std::move(options);
    return s;
}

struct StepOutcome {
    std::size_t arm = 0;
    double reward = 0.0;
    bool explored = true;
    /// Information gain of the played action (0 when not tracked).
    double info_gain = 0.0;
};

/**
 * One global round. The per-s quantities are cached, so exploitation rounds
 * only re-evaluate the exploitation threshold for the new global time.
 * Exploitation rounds discard the observation; exploration rounds sample
 * from the IDS distribution and update the estimator.
 */
inline StepOutcome ids_step(IdsAlgoState& state, const Instance& instance, RngStream& policy_rng,
                            RngStream& noise_rng) {
    if (!state.last_round || state.last_round->local_s != state.local_s)
        state.last_round = compute_ids_round(state.estimator, instance, state.options, state.local_s);
    IdsRound& r = *state.last_round;
    r.global_t = state.global_t;
    r.beta_exploit = exploit_beta(state.estimator, state.options.beta_spec, state.global_t);
    r.exploit = exploit_check(r.m_s, r.beta_exploit);

    StepOutcome out;
    if (r.exploit) {
        out.arm = r.hat_x;
        out.reward = sample_reward(instance, out.arm, noise_rng);
        out.explored = false;
        ++state.global_t;
        return out;
    }
    out.arm = r.mu.sample(policy_rng);
    out.reward = sample_reward(instance, out.arm, noise_rng);
    out.info_gain = r.info(static_cast<Eigen::Index>(out.arm));
    update_in_place(state.estimator, instance.action(out.arm), out.reward);
    ++state.local_s;
    ++state.global_t;
    return out;
}

inline StepOutcome ids_step(IdsAlgoState& state, const Instance& instance, RngStream& rng) {
    return ids_step(state, instance, rng, rng);
}

// ---------------------------------------------------------------------------
// Per-round invariant checks
// ---------------------------------------------------------------------------

struct RoundCheckOptions {
    double slack = 1e-9;
    double gap_identity_tol = 1e-12;
    double support_tol = 1e-6;
    /// Support characterization of the minimizer; valid for the exact (all pairs) search.
    bool check_support = false;
};

/**
 * Deterministic inequalities that hold in every exploration round. Returns
 * a human-readable list of violations (empty when all hold). `theta_star`
 * enables the conditional gap-domination check.
 */
inline std::vector<std::string> check_round_invariants(const IdsRound& r, const EstimatorState& est,
                                                       const Instance& instance, const IdsOptions& opts,
                                                       const Vector* theta_star = nullptr,
                                                       const RoundCheckOptions& co = {}) {
    std::vector<std::string> fail;
    auto report = [&](const std::string& name, double lhs, double rhs) {
        std::ostringstream os;
        os.precision(17);
        os << "s=" << r.local_s << " t=" << r.global_t << ": " << name << " (" << lhs << " vs " << rhs << ")";
        fail.push_back(os.str());
    };
    const std::size_t k = instance.k();
    const Vector values = instance.actions() * est.theta_hat;
    const double lead = values(static_cast<Eigen::Index>(r.hat_x));
    const double scale = std::max(1.0, r.gaps.cwiseAbs().maxCoeff() + std::abs(lead));

    for (std::size_t x = 0; x < k; ++x) {
        const auto ix = static_cast<Eigen::Index>(x);
        const double expected = lead - values(ix) + r.delta_s;
        if (std::abs(r.gaps(ix) - expected) > co.gap_identity_tol * scale)
            report("gap identity at arm " + std::to_string(x), r.gaps(ix), expected);
        if (r.gaps(ix) < r.bonus(ix) - co.slack * scale)
            report("gap below confidence width at arm " + std::to_string(x), r.gaps(ix), r.bonus(ix));
    }

    if (std::abs(r.q.sum() - 1.0) > co.slack || r.q(static_cast<Eigen::Index>(r.hat_x)) != 0.0)
        report("q is not a distribution on X \\ {hat_x}", r.q.sum(), 1.0);
    if (r.mu.support.empty() || r.mu.support.size() > 2)
        report("IDS support size", static_cast<double>(r.mu.support.size()), 2.0);
    double mass = 0.0;
    for (const auto& [a, p] : r.mu.support)
        mass += p;
    if (std::abs(mass - 1.0) > co.slack)
        report("IDS distribution mass", mass, 1.0);

    double m_q = std::numeric_limits<double>::infinity();
    double weighted = 0.0;
    for (std::size_t z = 0; z < k; ++z) {
        if (z == r.hat_x)
            continue;
        const double a = r.alternatives[z].half_sq_distance;
        m_q = std::min(m_q, a);
        weighted += r.q(static_cast<Eigen::Index>(z)) * a;
    }
    const double sandwich_slack = co.slack * std::max(1.0, m_q);
    if (weighted < m_q - sandwich_slack)
        report("soft-min lower bound", weighted, m_q);
    const double upper = m_q + std::log(static_cast<double>(k)) / r.eta_s;
    if (weighted > upper + sandwich_slack)
        report("soft-min upper bound", weighted, upper);

    const bool halfspace_variant = opts.variant.kind == InfoGainKind::H || opts.variant.kind == InfoGainKind::H_UCB;
    const auto iu = static_cast<Eigen::Index>(r.ucb_x);
    if (halfspace_variant && !r.thresholded && r.bonus(iu) > 0.0 && r.info(iu) > 0.0) {
        const double ucb_ratio = r.gaps(iu) * r.gaps(iu) / r.info(iu);
        if (r.psi > ucb_ratio * (1.0 + co.slack) + co.slack)
            report("ratio above UCB singleton ratio", r.psi, ucb_ratio);
        if (ucb_ratio > 2.0 + co.slack)
            report("UCB singleton ratio above 2", ucb_ratio, 2.0);
        if (r.psi > 2.0 + co.slack)
            report("information ratio above 2", r.psi, 2.0);
    }

    const double mu_gap = r.mu.expect(r.gaps);
    if (r.delta_s > 0.0 && mu_gap > 2.0 * r.delta_s + co.slack)
        report("almost-greedy bound", mu_gap, 2.0 * r.delta_s);

    for (std::size_t z = 0; z < k; ++z) {
        if (z == r.hat_x)
            continue;
        const Alternative& alt = r.halfspace_alternatives[z];
        if (alt.half_sq_distance <= 0.0)
            continue;
        const Vector w = instance.action(r.hat_x) - instance.action(z);
        const double inner = alt.nu.dot(w);
        if (std::abs(inner) > co.slack * std::max(1.0, alt.nu.norm() * w.norm()))
            report("halfspace projection off the boundary for arm " + std::to_string(z), inner, 0.0);
    }

    if (theta_star) {
        const Vector err = est.theta_hat - *theta_star;
        if (err.dot(est.precision * err) <= r.beta_gap) {
            const GapProfile truth = gap_profile(instance);
            for (std::size_t x = 0; x < k; ++x) {
                const auto ix = static_cast<Eigen::Index>(x);
                if (truth.gaps(ix) > 2.0 * r.gaps(ix) + co.slack)
                    report("true gap above twice the estimate at arm " + std::to_string(x), truth.gaps(ix),
                           2.0 * r.gaps(ix));
            }
        }
    }

    if (co.check_support && mu_gap > 0.0 && std::isfinite(r.psi)) {
        const Vector g = (r.gaps.array() - (r.psi / (2.0 * mu_gap)) * r.info.array()).matrix();
        const double gmin = g.minCoeff();
        const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
        for (const auto& [a, p] : r.mu.support)
            if (p > 0.0 && g(static_cast<Eigen::Index>(a)) > gmin + co.support_tol * gscale)
                report("support point does not minimize g at arm " + std::to_string(a), g(static_cast<Eigen::Index>(a)),
                       gmin);
    }
    return fail;
}

} // namespace linids
