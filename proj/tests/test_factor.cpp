#include <gtest/gtest.h>

#include "na1lab/arbitrage.hpp"
#include "na1lab/factor.hpp"

#include <boost/math/special_functions/expint.hpp>

#include <cmath>
#include <random>

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace na1lab;

namespace {

MatrixXd triangular_2(double gamma) {
    MatrixXd Q(2, 2);
    Q << 1, gamma, 0, 1;
    return Q;
}

// Point-mass factors on the largest supports allowed for Q = [[1, g], [0, 1]].
FactorModel point_mass_model(double gamma, double c) {
    const double lo = gamma >= 1.0 ? -1.0 / gamma : -1.0;
    const double hi = gamma < 0.0 ? -1.0 / gamma : kInf;
    const double top = std::isfinite(hi) ? hi : 1.0;
    Factor y1{0.0, kInf, PointMass{{0.0, 1.0}, {0.5, 0.5}}};
    Factor y2{lo, hi, PointMass{{lo, top}, {0.5, 0.5}}};
    return FactorModel(triangular_2(gamma), {y1, y2}, c);
}

MatrixXd random_unit_triangular(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    MatrixXd Q = MatrixXd::Identity(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) Q(i, j) = U(rng);
    return Q;
}

}  // namespace

TEST(FactorModel, RejectsBadSignPatternsAndSupports) {
    Factor y1{0.0, kInf, Exponential{1.0, 0.0}};
    Factor y2{-1.0, kInf, Exponential{1.0, -1.0}};
    EXPECT_NO_THROW(FactorModel(triangular_2(0.5), {y1, y2}, 1.0));
    EXPECT_THROW(FactorModel(triangular_2(0.5), {y1, y2}, 0.0), InvalidParameter);
    Factor bad1{-0.5, kInf, Exponential{1.0, 0.0}};
    EXPECT_THROW(FactorModel(triangular_2(0.5), {bad1, y2}, 1.0), InvalidParameter);
    Factor leaks{-0.5, kInf, Exponential{1.0, -1.0}};
    EXPECT_THROW(FactorModel(triangular_2(0.5), {y1, leaks}, 1.0), InvalidParameter);
    MatrixXd thin(2, 1);
    thin << 1, 1;
    EXPECT_THROW(FactorModel(thin, {y1}, 1.0), InvalidParameter);
}

TEST(FactorModel, PositivityReport) {
    auto ok = point_mass_model(0.5, 1.0);
    auto rep = validate_positivity(ok);
    EXPECT_TRUE(rep.all_ok());
    ASSERT_TRUE(rep.triangular);
    EXPECT_TRUE(rep.triangular_ok[0] && rep.triangular_ok[1]);
    EXPECT_NEAR(rep.worst_return[0], -0.5, 1e-15);
    EXPECT_NEAR(rep.worst_return[1], -1.0, 1e-15);

    // gamma = 2 with y2 down to -1 makes the first asset lose more than everything.
    Factor y1{0.0, kInf, PointMass{{0.0, 1.0}, {0.5, 0.5}}};
    Factor y2{-1.0, kInf, PointMass{{-1.0, 1.0}, {0.5, 0.5}}};
    auto bad = validate_positivity(FactorModel(triangular_2(2.0), {y1, y2}, 1.0));
    EXPECT_FALSE(bad.all_ok());
    EXPECT_FALSE(bad.triangular_ok[0]);
    EXPECT_EQ(bad.violations.size(), 1u);
}

TEST(FactorModel, MaximalArbitrageClosedForm) {
    for (double gamma : {-2.0, -0.3, 0.0, 0.5, 0.9}) {
        for (double c : {0.5, 1.0, 2.5}) {
            const VectorXd pi = max_arbitrage_strategy(point_mass_model(gamma, c));
            EXPECT_NEAR(pi(0), c / (1 - gamma), 1e-12);
            EXPECT_NEAR(pi(1), -c * gamma / (1 - gamma), 1e-12);
        }
    }
    const VectorXd fig = max_arbitrage_strategy(point_mass_model(0.5, 2.5));
    EXPECT_NEAR(fig(0), 5.0, 1e-12);
    EXPECT_NEAR(fig(1), -2.5, 1e-12);
    EXPECT_THROW(max_arbitrage_strategy(point_mass_model(1.5, 1.0)), DomainError);
}

TEST(FactorModel, Na1AgreesWithTheDiscreteMarket) {
    for (double gamma : {-1.0, 0.0, 0.5, 0.99, 1.0, 1.5, 3.0}) {
        auto model = point_mass_model(gamma, 1.0);
        const bool closed = na1_factor(model);
        EXPECT_EQ(closed, gamma < 1.0) << gamma;
        EXPECT_EQ(na1_triangular(model.Q()), closed);
        auto disc = discretize(model, 2);
        EXPECT_EQ(check_na1(disc.market).holds(), closed) << gamma;
    }
}

TEST(FactorModel, NoArbitrageRayWhenE1OutsideRange) {
    MatrixXd Q(2, 3);
    Q << 1, 1, 0, 1, 0, 1;
    Factor y1{0.0, kInf, PointMass{{0.0, 1.0}, {0.5, 0.5}}};
    Factor y{-1.0, 1.0, PointMass{{-0.5, 0.5}, {0.5, 0.5}}};
    FactorModel m(Q, {y1, y, y}, 1.0);
    EXPECT_FALSE(arbitrage_ray(m).has_value());
    EXPECT_THROW(na1_factor(m), DomainError);
    EXPECT_THROW(max_arbitrage_strategy(m), DomainError);
}

TEST(FactorModel, StandardFormLayout) {
    VectorXd mean(2);
    mean << 0.1, 0.2;
    MatrixXd B(2, 1);
    B << 1.0, -0.5;
    auto sk = from_standard_form(mean, B, true);
    EXPECT_EQ(sk.Q.cols(), 4);
    EXPECT_EQ(sk.slots[0], "premium");
    EXPECT_EQ(sk.slots[1], "common_1");
    EXPECT_EQ(sk.slots[3], "idiosyncratic_2");
    EXPECT_EQ(sk.Q(1, 3), 1.0);
    EXPECT_THROW(from_standard_form(mean, MatrixXd(0, 0), false), InvalidParameter);
}

TEST(Alpha, FourDimensionalSymbolicCase) {
    MatrixXd Q = MatrixXd::Identity(4, 4);
    const double q12 = 0.7, q13 = -1.3, q14 = 0.4, q23 = 2.1, q24 = -0.6, q34 = 1.9;
    Q(0, 1) = q12;
    Q(0, 2) = q13;
    Q(0, 3) = q14;
    Q(1, 2) = q23;
    Q(1, 3) = q24;
    Q(2, 3) = q34;
    VectorXd expected(4);
    expected << 1, -q12, -q13 + q12 * q23, -q14 + q12 * q24 + q13 * q34 - q12 * q23 * q34;
    EXPECT_LE((alpha_subset_sum(Q) - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((alpha_recursion(Q) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Alpha, RandomTripleAgreement) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + trial % 6;
        const MatrixXd Q = random_unit_triangular(rng, d);
        const VectorXd inv = Q.inverse().row(0).transpose();
        EXPECT_LE((alpha_subset_sum(Q) - inv).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE((alpha_recursion(Q) - inv).cwiseAbs().maxCoeff(), 1e-9);
    }
    EXPECT_THROW(alpha_subset_sum(MatrixXd::Ones(2, 2)), InvalidParameter);
}

TEST(TwoDim, AdmissibilityMatchesWorstCaseWealth) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-4.0, 4.0);
    for (double gamma : {-1.5, 0.0, 0.5, 1.0, 2.0}) {
        // Worst case over y1 in [0, inf) and y2 at its support ends (large ends stand in for infinity).
        const double lo = gamma >= 1.0 ? -1.0 / gamma : -1.0;
        const double hi = gamma < 0.0 ? -1.0 / gamma : 1e9;
        for (int k = 0; k < 500; ++k) {
            Eigen::Vector2d pi(U(rng), U(rng));
            bool ok = pi(0) >= 0.0;
            for (double y2 : {lo, hi}) ok = ok && 1.0 + pi(0) * gamma * y2 + pi(1) * y2 >= -1e-6;
            EXPECT_EQ(two_dim_admissibility(gamma, pi), ok) << gamma << " " << pi.transpose();
        }
    }
}

TEST(Distributions, ExpectationMatchesClosedForms) {
    // E[1/(1 + k Y)] for Y ~ Exp(1) is (1/k) e^{1/k} E1(1/k).
    for (double k : {0.5, 1.0, 2.0, 5.0}) {
        const double oracle = std::exp(1.0 / k) * boost::math::expint(1, 1.0 / k) / k;
        const double got = distribution_expectation(Exponential{1.0, 0.0}, [k](double y) { return 1.0 / (1.0 + k * y); });
        EXPECT_NEAR(got, oracle, 1e-10) << k;
    }
    const double m2 = distribution_expectation(Lognormal{0.0, 0.5, 0.0}, [](double y) { return y * y; });
    EXPECT_NEAR(m2, std::exp(0.5), 1e-10);
    EXPECT_NEAR(distribution_mean(Exponential{0.3, -1.0}), 1.0 / 0.3 - 1.0, 1e-15);
    EXPECT_NEAR(distribution_quantile(Uniform{1.0, 3.0}, 0.25, 0.75), 1.5, 1e-15);
}

TEST(Distributions, TailRatio) {
    const double oracle = std::sqrt(std::exp(1.0)) / 2.0 * boost::math::expint(1, 0.5);
    EXPECT_NEAR(exponential_tail_ratio(1.0), oracle, 1e-12);
    EXPECT_NEAR(exponential_tail_ratio(1.0), 0.461, 1e-3);
    EXPECT_NEAR(exponential_tail_ratio(0.3), oracle / 0.3, 1e-11);
    // Same quantity as E[1/(1 + 2 Y1)] / beta computed from the distribution.
    const double direct = distribution_expectation(Exponential{1.0, 0.0}, [](double y) { return 1.0 / (1.0 + 2.0 * y); });
    EXPECT_NEAR(exponential_tail_ratio(1.0), direct, 1e-10);
    EXPECT_THROW(exponential_tail_ratio(0.0), InvalidParameter);
}

TEST(Distributions, TriangularFirstOrderCondition) {
    const double gamma = -1.0, c = 1.0;
    const double k = c / (1.0 - gamma);
    Factor y1{0.0, kInf, Exponential{1.0, 0.0}};
    // Y2 on [-1, 1]: uniform, mean zero, so the condition cannot hold.
    Factor y2{-1.0, 1.0, Uniform{-1.0, 1.0}};
    FactorModel m(triangular_2(gamma), {y1, y2}, c);
    // E[Y1/(1+kY1)] = (1 - E[1/(1+kY1)]) / k.
    const double inv = std::exp(1.0 / k) * boost::math::expint(1, 1.0 / k) / k;
    EXPECT_NEAR(triangular_first_order_condition(m), (1.0 - inv) / k, 1e-10);
    EXPECT_GT(std::abs(triangular_first_order_condition(m)), 1e-3);
    EXPECT_THROW(triangular_first_order_condition(point_mass_model(0.5, 1.0)), InvalidParameter);
}

TEST(Discretize, TensorGridShapeAndMass) {
    Factor y1{0.0, kInf, Exponential{1.0, 0.0}};
    Factor y2{-1.0, kInf, Exponential{0.3, -1.0}};
    FactorModel m(triangular_2(0.5), {y1, y2}, 1.0);
    auto disc = discretize(m, 8);
    EXPECT_EQ(disc.market.states(), 64);
    EXPECT_NEAR(disc.market.probs().sum(), 1.0, 1e-14);
    EXPECT_EQ(disc.clipped, 0);
    EXPECT_NEAR(disc.truncated_mass, 1.0 - (1.0 - 1e-6) * (1.0 - 1e-6), 1e-15);
    EXPECT_GE((disc.market.returns().array() + 1.0).minCoeff(), 0.0);
    EXPECT_FALSE(disc.provenance.empty());
    EXPECT_THROW(discretize(m, 1), InvalidParameter);
}

TEST(Discretize, LognormalMarketMoments) {
    auto m = lognormal_market(64, ConstraintSet(1));
    EXPECT_NEAR(m.probs().sum(), 1.0, 1e-14);
    EXPECT_NEAR(m.probs().dot(m.returns().col(0)), std::exp(0.5) - 1.0, 1e-12);
    EXPECT_GT(m.probs().minCoeff(), 0.0);
}
