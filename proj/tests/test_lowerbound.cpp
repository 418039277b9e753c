#include <cmath>

#include <gtest/gtest.h>

#include "linids/core.hpp"
#include "linids/ids.hpp"
#include "linids/lowerbound.hpp"

using namespace linids;

namespace {

Instance orthonormal() {
    Matrix a(2, 2);
    a << 1, 0, 0, 1;
    Vector th(2);
    th << 1, 0.5;
    return Instance(a, th, 1.0, "orthonormal");
}

Instance colinear() {
    Matrix a(2, 1);
    a << 1, 0.5;
    return Instance(a, Vector::Ones(1), 1.0, "colinear");
}

} // namespace

TEST(Constraint, ZeroAllocation) {
    EXPECT_NEAR(constraint_value(orthonormal(), Vector::Zero(2)), 0.0, 1e-10);
}

TEST(Constraint, OrthonormalLimit) {
    Vector alpha(2);
    alpha << 1e8, 8;
    // 0.25 / (2 (1/A + 1/8)) with A = 1e8.
    const double expected = 0.25 / (2.0 * (1e-8 + 0.125));
    EXPECT_NEAR(constraint_value(orthonormal(), alpha), expected, 1e-9);
    EXPECT_NEAR(constraint_value(orthonormal(), alpha), 1.0, 1e-6);
}

TEST(Constraint, PositiveHomogeneity) {
    RngStream rng(1, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const Instance inst = make_random_instance(3, 5, 1.0, rng);
        Vector alpha(5);
        for (int i = 0; i < 5; ++i)
            alpha(i) = 0.1 + 10 * rng.uniform();
        const double g = constraint_value(inst, alpha);
        for (double c : {0.5, 2.0, 10.0})
            EXPECT_NEAR(constraint_value(inst, c * alpha), c * g, 1e-9 * std::max(1.0, c * g));
    }
}

TEST(Constraint, RejectsNegativeAllocation) {
    Vector alpha(2);
    alpha << 1, -1;
    EXPECT_THROW(constraint_value(orthonormal(), alpha), std::invalid_argument);
}

TEST(Cstar, Orthonormal) {
    const AllocationSolution sub = solve_cstar(orthonormal());
    EXPECT_NEAR(sub.cost, 4.0, 0.08);
    EXPECT_GE(sub.min_constraint, 1.0 - 1e-6);
    const AllocationSolution bf = brute_force_cstar(orthonormal());
    EXPECT_NEAR(bf.cost, 4.0, 0.08);
    EXPECT_GE(bf.min_constraint, 1.0 - 1e-6);
    EXPECT_TRUE((sub.alpha.array() >= 0.0).all());
}

TEST(Cstar, OrthonormalEmbeddingSumsPerArmCosts) {
    // Orthonormal arms e1..e4 with theta* = (1, a, b, c): c* = sum 2 / gap.
    Matrix a = Matrix::Identity(4, 4);
    Vector th(4);
    th << 1.0, 0.6, 0.3, 0.1;
    const Instance inst(a, th, 1.0);
    const double expected = 2.0 / 0.4 + 2.0 / 0.7 + 2.0 / 0.9;
    const AllocationSolution sub = solve_cstar(inst);
    EXPECT_NEAR(sub.cost, expected, 0.02 * expected);
    const AllocationSolution bf = brute_force_cstar(inst);
    EXPECT_NEAR(bf.cost, expected, 0.05 * expected);
}

TEST(Cstar, ColinearIsFree) {
    const AllocationSolution sub = solve_cstar(colinear());
    EXPECT_LE(sub.cost, 1e-3);
    EXPECT_LE(brute_force_cstar(colinear()).cost, 1e-3);
}

TEST(Cstar, EndOfOptimismHandValue) {
    // With P = alpha_3 + 4 eps^2 alpha_2 the constraints read P / 8 >= 1 (arm 2) and
    // P / 2 >= 1 (arm 3); alpha_3 is the cheaper way to buy P, so c* = 8.
    const Instance eoo = make_eoo_instance(0.01, 1.0);
    const AllocationSolution sub = solve_cstar(eoo);
    const AllocationSolution bf = brute_force_cstar(eoo);
    EXPECT_NEAR(sub.cost, 8.0, 0.02 * 8.0);
    EXPECT_NEAR(sub.cost, bf.cost, 0.05 * bf.cost);
}

TEST(Cstar, SubgradientAgreesWithBruteForce) {
    RngStream rng(2, 0);
    for (int trial = 0; trial < 8; ++trial) {
        const Instance inst = make_random_instance(2 + trial % 2, 3 + trial % 3, 1.0, rng);
        const AllocationSolution sub = solve_cstar(inst);
        const AllocationSolution bf = brute_force_cstar(inst);
        EXPECT_GE(sub.min_constraint, 1.0 - 1e-6);
        EXPECT_GE(bf.min_constraint, 1.0 - 1e-6);
        EXPECT_NEAR(sub.cost, bf.cost, 0.05 * std::max(bf.cost, 1e-9)) << "trial " << trial;
    }
}

TEST(Cstar, CoarseGridIsUpperBound) {
    RngStream rng(3, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance inst = make_random_instance(2, 4, 1.0, rng);
        GridSpec coarse;
        coarse.points_per_axis = 2;
        coarse.refinements = 0;
        const AllocationSolution bf = brute_force_cstar(inst, coarse);
        const AllocationSolution sub = solve_cstar(inst);
        // The grid value bounds c* from above; the solver is accurate to ~1e-4.
        EXPECT_GE(bf.cost, sub.cost * (1 - 1e-3));
        EXPECT_GE(bf.min_constraint, 1.0 - 1e-6);
    }
}

TEST(Cstar, BruteForceGuard) {
    RngStream rng(4, 0);
    const Instance inst = make_random_instance(2, 6, 1.0, rng);
    EXPECT_THROW(brute_force_cstar(inst), std::invalid_argument);
}

TEST(Game, SingleSuboptimalArm) {
    const double beta_n = std::log(1e6);
    const GameResult g = oracle_primal_dual(orthonormal(), beta_n, 100000);
    ASSERT_TRUE(g.satisfied);
    ASSERT_EQ(g.state.q_dual.size(), 1);
    EXPECT_DOUBLE_EQ(g.state.q_dual(0), 1.0);
    // Each pull adds ~Delta^2/2 = 0.125, so ceil(beta_n / 0.125) pulls are needed.
    const double pulls = std::ceil(beta_n / 0.125);
    EXPECT_NEAR(g.state.cum_alloc(1), pulls, 1.0);
    EXPECT_NEAR(g.solution.cost, 0.5 * pulls / beta_n, 0.5 / beta_n);
    EXPECT_NEAR(g.solution.cost, 4.0, 0.4);
}

TEST(Game, DoublingBetaKeepsCostStable) {
    for (const Instance& inst : {orthonormal(), make_eoo_instance(0.01, 1.0)}) {
        const GameResult a = oracle_primal_dual(inst, 20.0, 1000000);
        const GameResult b = oracle_primal_dual(inst, 40.0, 1000000);
        ASSERT_TRUE(a.satisfied && b.satisfied);
        EXPECT_NEAR(b.solution.cost, a.solution.cost, 0.1 * a.solution.cost);
    }
}

TEST(Game, DualWeightsAndStopping) {
    RngStream rng(5, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance inst = make_random_instance(2, 5, 1.0, rng);
        const double beta_n = std::log(1e5);
        const GameResult g = oracle_primal_dual(inst, beta_n, 1000000);
        EXPECT_TRUE(g.satisfied);
        EXPECT_NEAR(g.state.q_dual.sum(), 1.0, 1e-12);
        EXPECT_TRUE((g.state.q_dual.array() >= 0.0).all());
        // Stops at the first round whose minimum level reaches beta_n.
        ASSERT_GE(g.trace.size(), 2u);
        EXPECT_GE(g.trace.back().min_level, beta_n);
        EXPECT_LT(g.trace[g.trace.size() - 2].min_level, beta_n);
        for (const auto& e : g.trace)
            EXPECT_LE(e.info, g.max_h * (1 + 1e-12));
        const AllocationSolution sub = solve_cstar(inst);
        EXPECT_GE(g.solution.cost, sub.cost * (1 - 1e-6));
    }
}

TEST(Game, IdsResponse) {
    GameOptions o;
    o.response = GameResponse::ids;
    const GameResult g = oracle_primal_dual(make_eoo_instance(0.01, 1.0), 20.0, 1000000, o);
    EXPECT_TRUE(g.satisfied);
    for (const auto& e : g.trace) {
        EXPECT_GE(e.p, 0.0);
        EXPECT_LE(e.p, 1.0);
    }
}

TEST(OracleIds, Examples) {
    Vector gaps(3), info(3);
    gaps << 0.0, 0.5, 1.0;
    info << 0.0, 0.2, 0.1;
    // z = argmin gap / info = arm 1.
    EXPECT_DOUBLE_EQ(oracle_ids_response(gaps, 0.5, info, 0).prob(1), 1.0);
    EXPECT_NEAR(oracle_ids_response(gaps, 1e-12, info, 0).prob(0), 1.0, 1e-11);
    EXPECT_THROW(oracle_ids_response(gaps, 0.0, info, 0), std::invalid_argument);
    EXPECT_THROW(oracle_ids_response(gaps, 0.1, Vector::Zero(3), 0), DegenerateInformation);
}

TEST(OracleIds, MatchesGeneralIdsDistribution) {
    RngStream rng(6, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng.below(4);
        Vector gaps(k), info(k);
        gaps(0) = 0.0;
        info(0) = 0.0;
        for (std::size_t x = 1; x < k; ++x) {
            gaps(x) = 0.1 + rng.uniform();
            info(x) = 0.05 + rng.uniform();
        }
        const double delta = 0.5 * gaps.tail(k - 1).minCoeff() * rng.uniform() + 1e-3;
        const ActionDistribution o = oracle_ids_response(gaps, delta, info, 0);
        const Vector shifted = (gaps.array() + delta).matrix();
        const IdsChoice c = ids_distribution(shifted, info, 0, false);
        std::size_t z = o.support.back().first;
        EXPECT_NEAR(o.prob(z), c.mu.prob(z), 1e-6) << "trial " << trial;
    }
}
