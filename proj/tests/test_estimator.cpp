#include <cmath>

#include <gtest/gtest.h>

#include "linids/core.hpp"
#include "linids/estimator.hpp"
#include "oracles.hpp"

using namespace linids;

namespace {

double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

} // namespace

TEST(Estimator, Init) {
    const EstimatorState s = init_estimator(2);
    EXPECT_EQ(s.precision, Matrix::Identity(2, 2));
    EXPECT_EQ(s.theta_hat, Vector::Zero(2));
    EXPECT_EQ(s.logdet, 0.0);
    EXPECT_EQ(s.step, 1u);
    EXPECT_EQ(init_estimator(5).theta_hat.norm(), 0.0);
    EXPECT_THROW(init_estimator(0), std::invalid_argument);
}

TEST(Estimator, SingleAndDoubleUpdate) {
    EstimatorState s = update(init_estimator(2), Vector::Unit(2, 0), 1.0);
    Matrix v1(2, 2);
    v1 << 2, 0, 0, 1;
    EXPECT_TRUE(s.precision.isApprox(v1));
    EXPECT_NEAR(s.theta_hat(0), 0.5, 1e-15);
    EXPECT_NEAR(s.theta_hat(1), 0.0, 1e-15);
    s = update(s, Vector::Unit(2, 0), 1.0);
    EXPECT_NEAR(s.precision(0, 0), 3.0, 1e-15);
    EXPECT_NEAR(s.theta_hat(0), 2.0 / 3.0, 1e-15);
    EXPECT_EQ(s.step, 3u);
}

TEST(Estimator, RejectsBadObservations) {
    EstimatorState s = init_estimator(2);
    EXPECT_THROW(update_in_place(s, Vector::Ones(3), 1.0), std::invalid_argument);
    EXPECT_THROW(update_in_place(s, Vector::Ones(2), std::nan("")), std::invalid_argument);
}

class EstimatorBatch : public ::testing::TestWithParam<int> {};

TEST_P(EstimatorBatch, IncrementalMatchesBatch) {
    const int d = GetParam();
    for (double sigma : {1.0, std::sqrt(0.1)}) {
        RngStream rng(100 + d, 0);
        EstimatorState s = init_estimator(d, sigma);
        std::vector<Vector> xs;
        std::vector<double> ys;
        for (int i = 0; i < 1000; ++i) {
            Vector x(d);
            for (int j = 0; j < d; ++j)
                x(j) = rng.normal();
            const double y = rng.normal() * 3.0;
            update_in_place(s, x, y);
            xs.push_back(x);
            ys.push_back(y);
        }
        const oracle::Batch b = oracle::batch_ridge(xs, ys, sigma);
        EXPECT_LT(rel_err(s.precision, b.v), 1e-8);
        EXPECT_LT(rel_err(s.theta_hat, b.theta), 1e-8);
        EXPECT_LT(std::abs(s.logdet - b.logdet) / std::max(1.0, std::abs(b.logdet)), 1e-8);
        EXPECT_LT(rel_err(s.precision_inv, b.v.inverse()), 1e-8);
    }
}

INSTANTIATE_TEST_SUITE_P(Dims, EstimatorBatch, ::testing::Values(2, 8));

TEST(Estimator, WeightedNorm) {
    EstimatorState s = init_estimator(3);
    Vector v(3);
    v << 1, -2, 2;
    EXPECT_NEAR(weighted_norm(s, v, false), 3.0, 1e-15);
    EXPECT_NEAR(weighted_norm(s, v, true), 3.0, 1e-15);
    EXPECT_EQ(weighted_norm(s, Vector::Zero(3), true), 0.0);

    RngStream rng(5, 0);
    for (int i = 0; i < 50; ++i)
        update_in_place(s, sample_unit_sphere(3, rng), rng.normal());
    const Matrix dense_inv = s.precision.inverse();
    for (int i = 0; i < 20; ++i) {
        const Vector w = sample_unit_sphere(3, rng) * 2.0;
        const double n = weighted_norm(s, w, true);
        EXPECT_NEAR(n * n, w.dot(dense_inv * w), 1e-9);
    }
}

TEST(Estimator, Monotonicity) {
    RngStream rng(8, 0);
    EstimatorState s = init_estimator(3, 0.5);
    const Vector probe = sample_unit_sphere(3, rng);
    double logdet = s.logdet, nv = weighted_norm(s, probe, false), ni = weighted_norm(s, probe, true);
    double b = beta(s, BetaSpec::logdet(), 10.0, 0.5);
    for (int i = 0; i < 200; ++i) {
        update_in_place(s, sample_unit_sphere(3, rng), rng.normal());
        EXPECT_GE(s.logdet, logdet - 1e-12);
        EXPECT_GE(weighted_norm(s, probe, false), nv - 1e-12);
        EXPECT_LE(weighted_norm(s, probe, true), ni + 1e-12);
        const double bn = beta(s, BetaSpec::logdet(), 10.0, 0.5);
        EXPECT_GE(bn, b - 1e-12);
        EXPECT_GE(beta(s, BetaSpec::logdet(), 20.0, 0.5), bn);
        logdet = s.logdet;
        nv = weighted_norm(s, probe, false);
        ni = weighted_norm(s, probe, true);
        b = bn;
    }
}

TEST(Beta, ClosedForms) {
    const EstimatorState s = init_estimator(2);
    EXPECT_DOUBLE_EQ(beta(s, BetaSpec::logdet(), 1.0, 1.0), 1.0);
    EXPECT_NEAR(beta(s, BetaSpec::logdet(), std::exp(1.0), 1.0), 3.0 + 2.0 * std::sqrt(2.0), 1e-12);
    // 2 log 100 + 2 log log 100 evaluated with long double as reference.
    const long double l = std::log(100.0L);
    const double expected = static_cast<double>(2.0L * l + 2.0L * std::log(l));
    EXPECT_NEAR(beta(s, BetaSpec::simplified(), 1.0, 1.0, 100.0), expected, 1e-12);
    EXPECT_NEAR(expected, 12.2647, 1e-4);
    EXPECT_DOUBLE_EQ(beta(s, BetaSpec::fixed(2.5), 7.0, 1.0), 2.5);
}

TEST(Beta, NoiseScaling) {
    EstimatorState s = init_estimator(2, std::sqrt(0.1));
    update_in_place(s, Vector::Unit(2, 1), 0.3);
    const double w = whitened_beta(s, BetaSpec::logdet(), 50.0);
    EXPECT_NEAR(beta(s, BetaSpec::logdet(), 50.0, std::sqrt(0.1)), 0.1 * w, 1e-12);
    // A noiseless instance is whitened with unit scale.
    EXPECT_DOUBLE_EQ(init_estimator(2, 0.0).noise_scale, 1.0);
}

TEST(Beta, Errors) {
    const EstimatorState s = init_estimator(2);
    EXPECT_THROW(beta(s, BetaSpec::logdet(), 0.5, 1.0), std::invalid_argument);
    EXPECT_THROW(beta(s, BetaSpec::simplified(), 2.0, 1.0), std::invalid_argument);
    EXPECT_THROW(BetaSpec::fixed(0.0), std::invalid_argument);
    BetaSpec bad;
    bad.mode = BetaMode::fixed;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Estimator, LongRunStaysAccurate) {
    RngStream rng(77, 0);
    EstimatorState s = init_estimator(2, std::sqrt(0.1));
    std::vector<Vector> xs;
    std::vector<double> ys;
    const Vector arms[3] = {Vector::Unit(2, 0), (Vector(2) << 0.99, 0.02).finished(), Vector::Unit(2, 1)};
    for (int i = 0; i < 100000; ++i) {
        const Vector& x = arms[i % 7 == 0 ? 2 : (i % 3 == 0 ? 1 : 0)];
        const double y = x(0) + std::sqrt(0.1) * rng.normal();
        update_in_place(s, x, y);
        xs.push_back(x);
        ys.push_back(y);
    }
    const oracle::Batch b = oracle::batch_ridge(xs, ys, std::sqrt(0.1));
    EXPECT_LT(rel_err(s.theta_hat, b.theta), 1e-8);
    EXPECT_LT(std::abs(s.logdet - b.logdet) / b.logdet, 1e-8);
}
